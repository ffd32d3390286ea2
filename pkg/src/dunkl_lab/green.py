"""Closed-form potential theory for the Dunkl Laplacian on centred balls.

Every ball quantity depends on the point only through ``rho = |x|``, so the
functions here take radii, not points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadRadii, DimensionTooLarge, OriginSingularity, OutsideBall, ValidationError
from .quadrature import interval_integrals, tanh_sinh
from .roots import RootSystemData, weight


@dataclass(frozen=True)
class KernelContext:
    m: float
    c_k: float = 1.0

    def __post_init__(self):
        if not self.m > 2:
            raise ValidationError(f"m = {self.m} must exceed 2")
        if not self.c_k > 0:
            raise ValidationError("c_k must be positive")

    @classmethod
    def from_system(cls, sys: RootSystemData, c_k: float | None = None) -> "KernelContext":
        if c_k is None:
            c_k = mehta_constant(sys)
        return cls(m=sys.m, c_k=c_k)


# ---------------------------------------------------------------------------
# the normalising constant


def _arc_breaks_2d(roots: np.ndarray) -> np.ndarray:
    angles = [0.0, 2.0 * np.pi]
    for a in roots:
        base = math.atan2(a[1], a[0]) + 0.5 * np.pi
        for t in (base, base + np.pi):
            angles.append(t % (2.0 * np.pi))
    return np.unique(np.round(angles, 15))


def _sphere_integral_level(sys: RootSystemData, level: int) -> float:
    d = sys.d
    roots = sys.positive_roots[sys.multiplicity > 0]
    if d == 1:
        return float(weight(sys, np.array([1.0])) + weight(sys, np.array([-1.0])))
    if d == 2:
        breaks = _arc_breaks_2d(roots)

        def g(theta):
            pts = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
            return weight(sys, pts)

        return sum(tanh_sinh(g, a, b, level) for a, b in zip(breaks[:-1], breaks[1:]) if b - a > 1e-14)
    # d == 3: azimuth phi outside, polar angle theta inside
    phi_breaks = [0.0, 2.0 * np.pi]
    for a in roots:
        if abs(a[0]) > 1e-15 or abs(a[1]) > 1e-15:
            base = math.atan2(-a[0], a[1])  # a0 cos + a1 sin = 0
            phi_breaks += [base % (2 * np.pi), (base + np.pi) % (2 * np.pi)]
    phi_breaks = np.unique(np.round(phi_breaks, 15))

    def inner(phi: float) -> float:
        cp, sp = math.cos(phi), math.sin(phi)
        tb = [0.0, np.pi]
        for a in roots:
            amp = a[0] * cp + a[1] * sp
            t = math.atan2(-a[2], amp)
            if t < 0:
                t += np.pi
            if 1e-14 < t < np.pi - 1e-14:
                tb.append(t)
        tb = np.unique(np.round(tb, 15))

        def g(theta):
            st = np.sin(theta)
            pts = np.stack([st * cp, st * sp, np.cos(theta)], axis=-1)
            return weight(sys, pts) * st

        return sum(tanh_sinh(g, lo, hi, level) for lo, hi in zip(tb[:-1], tb[1:]) if hi - lo > 1e-14)

    inner_v = np.vectorize(inner)
    return sum(tanh_sinh(inner_v, a, b, level) for a, b in zip(phi_breaks[:-1], phi_breaks[1:]) if b - a > 1e-14)


def sphere_weight_integral(sys: RootSystemData, tol: float = 1e-10, return_info: bool = False):
    """``∫_{S^{d-1}} w_k dσ`` for ``d <= 3``.

    The step of the nested tanh-sinh rules is halved until two successive
    levels agree to ``tol`` (relative).
    """
    if sys.d > 3:
        raise DimensionTooLarge("spherical quadrature is only implemented for d <= 3; pass c_k explicitly")
    level = 3 if sys.d < 3 else 2
    prev = _sphere_integral_level(sys, level)
    history = [prev]
    max_level = 9 if sys.d < 3 else 6
    while level < max_level:
        level += 1
        cur = _sphere_integral_level(sys, level)
        history.append(cur)
        if abs(cur - prev) <= tol * abs(cur):
            break
        prev = cur
    value = history[-1]
    if return_info:
        return value, {"levels": level, "history": history, "last_change": abs(history[-1] - history[-2]) / abs(value)}
    return value


def mehta_constant(sys: RootSystemData, tol: float = 1e-10, return_info: bool = False):
    """``c_k = (∫ exp(-|y|^2) w_k(y) dy)^{-1}``.

    In polar coordinates the Gaussian integral splits into the radial moment
    ``Γ(m/2)/2`` and the spherical integral of ``w_k``.
    """
    s, info = sphere_weight_integral(sys, tol=tol, return_info=True)
    c = 1.0 / (0.5 * math.gamma(sys.m / 2.0) * s)
    if return_info:
        info = dict(info)
        info["sphere_integral"] = s
        return c, info
    return c


# ---------------------------------------------------------------------------
# Green potentials


def green_potential_ball(ctx: KernelContext, r: float, rho):
    """``G^k 1_{B_r}`` at ``|x| = rho``."""
    if r <= 0:
        raise BadRadii("ball radius must be positive")
    m = ctx.m
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValidationError("rho must be nonnegative")
    inside = (rho * rho / m + (r * r - rho * rho) / 2.0) / (m - 2.0)
    with np.errstate(divide="ignore"):
        outside = r**m * np.where(rho > 0, rho, 1.0) ** (2.0 - m) / (m * (m - 2.0))
    out = np.where(rho <= r, inside, outside)
    return float(out) if out.ndim == 0 else out


def green_annulus_bound(ctx: KernelContext, t: float, s: float) -> float:
    """Upper bound ``2 s (s - t)/(m - 2)`` for ``G^k 1_{A_{t,s}}`` on the annulus."""
    if not 0 <= t < s:
        raise BadRadii(f"need 0 <= t < s, got t={t}, s={s}")
    return 2.0 * s * (s - t) / (ctx.m - 2.0)


def green_annulus(ctx: KernelContext, t: float, s: float, rho):
    """``G^k 1_{A_{t,s}} = G^k 1_{B_s} - G^k 1_{B_t}`` (``t = 0`` gives the ball)."""
    if not 0 <= t < s:
        raise BadRadii(f"need 0 <= t < s, got t={t}, s={s}")
    inner = green_potential_ball(ctx, t, rho) if t > 0 else 0.0 * np.asarray(rho, dtype=float)
    return green_potential_ball(ctx, s, rho) - inner


def green_origin(ctx: KernelContext, rho):
    """``G^k(x, 0) = (c_k/4) Γ(m/2 - 1) |x|^{2-m}``."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise OriginSingularity("G^k(x, 0) is infinite at x = 0")
    out = 0.25 * ctx.c_k * math.gamma(ctx.m / 2.0 - 1.0) * rho ** (2.0 - ctx.m)
    return float(out) if out.ndim == 0 else out


def green_pointwise_bound(ctx: KernelContext, rho_y: float, rho_z: float) -> float:
    """Upper bound for ``G^k(y, z)`` in terms of ``| |y| - |z| |``."""
    gap = abs(rho_y - rho_z)
    if gap == 0:
        return math.inf
    return ctx.c_k * math.gamma(ctx.m / 2.0 - 1.0) / (4.0 * gap ** (ctx.m - 2.0))


def heat_kernel_origin(ctx: KernelContext, t, rho):
    """``p_t^k(x, 0) = c_k (4t)^{-m/2} exp(-|x|^2/(4t))``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValidationError("t must be positive")
    rho = np.asarray(rho, dtype=float)
    out = ctx.c_k * (4.0 * t) ** (-ctx.m / 2.0) * np.exp(-rho * rho / (4.0 * t))
    return float(out) if out.ndim == 0 else out


def heat_kernel_upper_bound(ctx: KernelContext, t, rho_x, rho_y):
    """Gaussian upper bound for ``p_t^k(x, y)`` depending on ``|x|``, ``|y|`` only."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValidationError("t must be positive")
    gap = np.asarray(rho_x, dtype=float) - np.asarray(rho_y, dtype=float)
    out = ctx.c_k * (4.0 * t) ** (-ctx.m / 2.0) * np.exp(-gap * gap / (4.0 * t))
    return float(out) if out.ndim == 0 else out


def expected_exit_time_ball(ctx: KernelContext, r: float, rho):
    """Mean exit time ``E^x[τ_{B_r}] = (r^2 - |x|^2)/(2m)``."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho > r) or np.any(rho < 0):
        raise OutsideBall(f"rho must lie in [0, {r}]")
    out = (r * r - rho * rho) / (2.0 * ctx.m)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# radial Green operator of the ball


def green_operator_radial(ctx_or_m, R: float, f, grid, atol: float = 1e-13) -> np.ndarray:
    """Radial Green operator of the ball ``B_R`` applied to a radial ``f``.

    Returns ``v(r) = ∫_r^R t^{1-m} ∫_0^t s^{m-1} f(s) ds dt`` on ``grid``,
    the radial solution of ``Δ_k v = -f`` with ``v(R) = 0``.  The double
    integral is evaluated in the swapped form

    ``(m-2) v(r) = (r^{2-m} - R^{2-m}) ∫_0^r s^{m-1} f
    + ∫_r^R (s - s^{m-1} R^{2-m}) f``,

    with both pieces accumulated cell by cell over the grid.  ``f`` must
    accept numpy arrays.
    """
    m = ctx_or_m.m if isinstance(ctx_or_m, KernelContext) else float(ctx_or_m)
    grid = np.asarray(grid, dtype=float)
    if np.any(grid < 0) or np.any(grid > R * (1 + 1e-14)):
        raise OutsideBall("grid must lie in [0, R]")
    edges = np.unique(np.concatenate([[0.0, R], np.clip(grid, 0.0, R)]))
    R2m = R ** (2.0 - m)

    inner_cells = interval_integrals(lambda s: s ** (m - 1.0) * f(s), edges, atol=atol)
    outer_cells = interval_integrals(lambda s: (s - s ** (m - 1.0) * R2m) * f(s), edges, atol=atol)
    inner = np.concatenate([[0.0], np.cumsum(inner_cells)])  # ∫_0^{edge}
    outer = np.concatenate([np.cumsum(outer_cells[::-1])[::-1], [0.0]])  # ∫_{edge}^R

    with np.errstate(divide="ignore", invalid="ignore"):
        first = np.where(edges > 0, (edges ** (2.0 - m) - R2m) * inner, 0.0)
    v_edges = (first + outer) / (m - 2.0)
    idx = np.searchsorted(edges, np.clip(grid, 0.0, R))
    return v_edges[idx]
