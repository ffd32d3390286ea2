"""Small quadrature toolbox shared by the analytic modules.

Double-exponential (tanh-sinh) rules handle the algebraic endpoint
singularities of the weight ``w_k`` on spherical arcs; composite
Gauss-Legendre with local refinement is used for smooth radial integrands.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

_TS_TMAX = 3.6


@lru_cache(maxsize=32)
def _tanh_sinh_nodes(level: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    step = 2.0 ** (-level)
    t = np.arange(-_TS_TMAX, _TS_TMAX + step / 2, step)
    u = 0.5 * np.pi * np.sinh(t)
    x = np.tanh(u)
    w = step * 0.5 * np.pi * np.cosh(t) / np.cosh(u) ** 2
    # distance of the node to the nearer endpoint, computed without cancellation
    gap = 2.0 / (1.0 + np.exp(2.0 * np.abs(u)))
    return x, w, gap


def tanh_sinh(g, a: float, b: float, level: int) -> float:
    """Tanh-sinh rule of step ``2**-level`` for ``∫_a^b g``; ``g`` is vectorised."""
    x, w, gap = _tanh_sinh_nodes(level)
    half = 0.5 * (b - a)
    pts = np.where(x < 0, a + half * gap, b - half * gap)
    return float(half * np.sum(w * g(pts)))


def tanh_sinh_adaptive(g, a: float, b: float, tol: float = 1e-12, min_level: int = 3, max_level: int = 10):
    """Refine the tanh-sinh step until two successive levels agree to ``tol`` (relative).

    Returns ``(value, last_difference, level)``.
    """
    prev = tanh_sinh(g, a, b, min_level)
    for level in range(min_level + 1, max_level + 1):
        cur = tanh_sinh(g, a, b, level)
        diff = abs(cur - prev)
        if diff <= tol * max(abs(cur), 1e-300):
            return cur, diff, level
        prev = cur
    return prev, diff, max_level


@lru_cache(maxsize=8)
def _gl(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def interval_integrals(g, edges, atol: float = 1e-13, n: int = 10, max_depth: int = 30) -> np.ndarray:
    """Integrals of ``g`` over each ``[edges[i], edges[i+1]]``.

    Each cell is integrated with an ``n``-point and a ``2n``-point
    Gauss-Legendre rule; cells whose two estimates differ by more than
    ``atol`` are bisected, recursively.
    """
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[:-1].copy(), edges[1:].copy()
    owner = np.arange(len(lo))
    out = np.zeros(len(lo))
    xs1, ws1 = _gl(n)
    xs2, ws2 = _gl(2 * n)
    for _ in range(max_depth):
        if lo.size == 0:
            break
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        p1 = mid[:, None] + half[:, None] * xs1
        p2 = mid[:, None] + half[:, None] * xs2
        est1 = half * (g(p1.ravel()).reshape(p1.shape) @ ws1)
        est2 = half * (g(p2.ravel()).reshape(p2.shape) @ ws2)
        ok = np.abs(est2 - est1) <= atol * np.maximum(half, 1e-3)
        np.add.at(out, owner[ok], est2[ok])
        bad = ~ok
        lo_b, hi_b, own_b = lo[bad], hi[bad], owner[bad]
        mid_b = 0.5 * (lo_b + hi_b)
        lo = np.concatenate([lo_b, mid_b])
        hi = np.concatenate([mid_b, hi_b])
        owner = np.concatenate([own_b, own_b])
    else:
        # depth exhausted: accept the finest estimate
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        p2 = mid[:, None] + half[:, None] * xs2
        np.add.at(out, owner, half * (g(p2.ravel()).reshape(p2.shape) @ ws2))
    return out
