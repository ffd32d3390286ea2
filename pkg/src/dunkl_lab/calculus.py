"""Numerical application of the Dunkl Laplacian.

The local part (Laplacian and gradient) uses second-order central
differences; the reflection difference quotients are evaluated exactly from
the field itself, never by stencil.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NearHyperplane, ValidationError, ZeroRadius
from .roots import RootSystemData, reflect


@dataclass(frozen=True)
class ScalarField:
    evaluator: Callable[[np.ndarray], float]
    smoothness_hint: str = "C2"  # or "radial_C2"

    def __call__(self, x):
        return float(self.evaluator(np.asarray(x, dtype=float)))


def _as_field(f) -> ScalarField:
    return f if isinstance(f, ScalarField) else ScalarField(f)


def apply_dunkl_laplacian(sys: RootSystemData, f, x, h: float = 1e-3) -> float:
    """Evaluate ``Δ_k f(x)``.

    Raises :class:`NearHyperplane` if ``x`` lies within ``10 h`` of a
    reflection hyperplane carrying positive multiplicity, where the
    singular terms would need a limiting procedure.
    """
    if h <= 0:
        raise ValidationError("step h must be positive")
    f = _as_field(f)
    x = np.asarray(x, dtype=float)
    d = sys.d
    if x.shape != (d,):
        raise ValidationError(f"point must have shape ({d},)")
    proj = sys.positive_roots @ x
    active = sys.multiplicity > 0
    if np.any(np.abs(proj[active]) < 10.0 * h):
        raise NearHyperplane(f"x is within 10h of a reflection hyperplane (h={h})")

    f0 = f(x)
    lap = 0.0
    grad = np.empty(d)
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        fp, fm = f(x + e), f(x - e)
        lap += (fp - 2.0 * f0 + fm) / (h * h)
        grad[i] = (fp - fm) / (2.0 * h)

    # sum over the full system R; the +alpha and -alpha terms are equal
    extra = 0.0
    for alpha, k, p in zip(sys.positive_roots, sys.multiplicity, proj):
        if k == 0.0:
            continue
        a2 = float(alpha @ alpha)
        diff = f0 - f(reflect(alpha, x))
        extra += 2.0 * k * ((grad @ alpha) / p - 0.5 * a2 * diff / (p * p))
    return lap + extra


def radial_dunkl_laplacian(m: float, u: float, u_prime: float, u_second: float, r: float, at_origin: bool = False) -> float:
    """``u'' + (m-1)/r u'`` for a radial profile.

    At ``r = 0`` the formula is singular; pass ``at_origin=True`` to use the
    limiting value ``m u''(0)`` (valid since ``u'(0) = 0``).
    """
    if at_origin:
        return m * u_second
    if r == 0:
        raise ZeroRadius("r = 0: use at_origin=True for the limit m*u''(0)")
    if r < 0:
        raise ValidationError("radius must be nonnegative")
    return u_second + (m - 1.0) / r * u_prime


def radial_field(profile: Callable[[float], float]) -> ScalarField:
    """Lift a radial profile ``u(r)`` to the field ``x -> u(|x|)``."""
    return ScalarField(lambda x: profile(float(np.linalg.norm(x))), smoothness_hint="radial_C2")
