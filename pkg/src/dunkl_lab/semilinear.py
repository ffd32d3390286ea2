"""Semilinear Dirichlet problem ``Δ_k u = φ(u)`` in ``B_R``, ``u = c`` on ``∂B_R``.

With constant boundary data the harmonic extension is the constant ``c``,
so a solution is exactly a fixed point of ``u = c - G_B φ(u)`` where
``G_B`` is the Green operator of the ball.  :func:`picard_solve` iterates
that map (damped, since it reverses order); the shooting solver in
:mod:`dunkl_lab.radial` is the independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.special import roots_jacobi

from .errors import NoConvergence, ValidationError
from .green import green_operator_radial
from .phi import PhiSpec
from .radial import RadialSolution


@dataclass(frozen=True)
class DirichletProblem:
    m: float
    phi: PhiSpec
    r_ball: float
    c: float

    def __post_init__(self):
        if self.c < 0:
            raise ValidationError("boundary value c must be nonnegative")
        if self.r_ball <= 0:
            raise ValidationError("r_ball must be positive")
        if self.m <= 2:
            raise ValidationError("m must exceed 2")

    def to_dict(self) -> dict:
        return {"m": self.m, "phi": self.phi.description, "r_ball": self.r_ball, "c": self.c}


# ---------------------------------------------------------------------------
# Chebyshev / Nystrom discretisation of the Green operator


def lobatto_nodes(n: int, R: float) -> np.ndarray:
    """``n + 1`` Chebyshev-Lobatto points on ``[0, R]``, increasing."""
    return 0.5 * R * (1.0 - np.cos(np.pi * np.arange(n + 1) / n))


def _bary_weights(n: int) -> np.ndarray:
    w = (-1.0) ** np.arange(n + 1)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def interpolation_matrix(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Rows map values at Chebyshev-Lobatto ``nodes`` to values at ``x``."""
    n = len(nodes) - 1
    w = _bary_weights(n)
    diff = x[:, None] - nodes[None, :]
    exact = diff == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        tmp = w / diff
        P = tmp / tmp.sum(axis=1, keepdims=True)
    rows = exact.any(axis=1)
    P[rows] = exact[rows].astype(float)
    return P


@lru_cache(maxsize=16)
def _green_matrix(m: float, R: float, n: int, q: int) -> np.ndarray:
    """Nystrom matrix ``A`` with ``(A f)(r_i) ≈ G_B f(r_i)``.

    ``(m-2) v(r) = r^{2-m} J(r) + S(R) - S(r) - R^{2-m} J(R)`` with
    ``J(x) = ∫_0^x s^{m-1} f`` (Gauss-Jacobi, exact for the algebraic
    weight) and ``S(x) = ∫_0^x s f`` (Gauss-Legendre).
    """
    nodes = lobatto_nodes(n, R)
    xj, wj = roots_jacobi(q, 0.0, m - 1.0)
    xl, wl = np.polynomial.legendre.leggauss(q)

    def J_row(x):
        if x == 0.0:
            return np.zeros(n + 1)
        s = 0.5 * x * (1.0 + xj)
        return (0.5 * x) ** m * (wj @ interpolation_matrix(nodes, s))

    def S_row(x):
        if x == 0.0:
            return np.zeros(n + 1)
        s = 0.5 * x * (1.0 + xl)
        return 0.5 * x * ((wl * s) @ interpolation_matrix(nodes, s))

    JR, SR = J_row(R), S_row(R)
    A = np.empty((n + 1, n + 1))
    for i, r in enumerate(nodes):
        row = SR - S_row(r) - R ** (2.0 - m) * JR
        if r > 0:
            row = row + r ** (2.0 - m) * J_row(r)
        A[i] = row / (m - 2.0)
    A[-1] = 0.0  # v(R) = 0 exactly
    return A


def _chebyshev_profile(nodes: np.ndarray, values: np.ndarray, R: float):
    n = len(nodes) - 1
    return np.polynomial.Chebyshev.fit(nodes, values, deg=n, domain=[0.0, R])


# ---------------------------------------------------------------------------


def picard_solve(
    prob: DirichletProblem,
    grid=None,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    n_nodes: int = 64,
    n_out: int = 2001,
) -> RadialSolution:
    """Damped Picard iteration for ``u + G_B φ(u) = c``.

    ``u <- (1-ω) u + ω max(c - G_B φ(u), 0)`` from ``u ≡ c`` with
    ``ω = min(1, 1/(1 + Lip_φ(c) R²/(2m)))``.  The Green operator is
    discretised on ``n_nodes + 1`` Chebyshev-Lobatto radii; iteration stops
    when the fixed-point residual ``|u - c + G_B φ(u)|`` is below ``tol``
    at every node.  The profile is returned on ``grid`` (default ``n_out``
    uniform radii) through the Chebyshev interpolant.
    """
    m, R, c = prob.m, prob.r_ball, prob.c
    out_grid = np.linspace(0.0, R, n_out) if grid is None else np.asarray(grid, dtype=float)
    if c == 0:
        z = np.zeros_like(out_grid)
        return RadialSolution(out_grid, z, z.copy(), 0.0, m, prob.phi, None, meta={"method": "picard", "iterations": 1})

    A = _green_matrix(float(m), float(R), n_nodes, n_nodes + 24)
    nodes = lobatto_nodes(n_nodes, R)
    kappa = prob.phi.lipschitz(c) * R * R / (2.0 * m)
    omega = min(1.0, 1.0 / (1.0 + kappa))
    u = np.full(n_nodes + 1, float(c))
    for it in range(1, max_iter + 1):
        target = np.maximum(c - A @ prob.phi(u), 0.0)
        resid = np.max(np.abs(target - u))
        if resid < tol:
            u = target
            break
        u = (1.0 - omega) * u + omega * target
    else:
        raise NoConvergence(f"Picard iteration did not converge in {max_iter} iterations (residual {resid:.3e})")

    cheb = _chebyshev_profile(nodes, u, R)
    vals = cheb(out_grid)
    ders = cheb.deriv()(out_grid)
    ders[0] = 0.0
    return RadialSolution(
        out_grid,
        vals,
        ders,
        float(vals[0]),
        m,
        prob.phi,
        None,
        meta={"method": "picard", "iterations": it, "omega": omega, "node_residual": float(resid)},
    )


@dataclass
class VerificationReport:
    ode_residual: float
    fixedpoint_residual: float
    bounds_ok: bool
    boundary_error: float

    def passed(self, tol: float) -> bool:
        return self.ode_residual <= tol and self.fixedpoint_residual <= tol and self.bounds_ok

    def to_dict(self) -> dict:
        return {
            "ode_residual": self.ode_residual,
            "fixedpoint_residual": self.fixedpoint_residual,
            "bounds_ok": self.bounds_ok,
            "boundary_error": self.boundary_error,
        }


def verify_solution(prob: DirichletProblem, u: RadialSolution, tol: float = 1e-8) -> VerificationReport:
    """Residual checks for a candidate radial solution.

    * ODE residual ``|u'' + (m-1)/r u' - φ(u)|`` at the cell midpoints, with
      ``u''`` from the cubic Hermite interpolant of ``(u, u')``;
    * fixed-point residual ``|u + G_B φ(u) - c|`` on the grid, with ``G_B``
      evaluated by :func:`green_operator_radial` (independent quadrature);
    * bounds: ``0 <= u <= c`` and ``u`` nondecreasing, up to ``tol``.
    """
    m, R, c, phi = prob.m, prob.r_ball, prob.c, prob.phi
    r, v, dv = u.grid, u.values, u.derivatives
    spline = CubicHermiteSpline(r, v, dv)
    mid = 0.5 * (r[1:] + r[:-1])
    d2 = spline.derivative(2)(mid)
    ode = np.max(np.abs(d2 + (m - 1.0) / mid * spline.derivative(1)(mid) - phi(spline(mid))))
    g = green_operator_radial(m, R, lambda s: phi(spline(s)), r)
    fp = np.max(np.abs(v + g - c))
    bounds = bool(np.all(v >= -tol) and np.all(v <= c + tol) and np.all(np.diff(v) >= -tol))
    return VerificationReport(float(ode), float(fp), bounds, float(abs(v[-1] - c)))


def comparison_check(u: RadialSolution, v: RadialSolution, slack: float = 1e-6) -> bool:
    """``True`` iff ``u >= v - slack`` on the grid of ``u`` (``v`` interpolated)."""
    if u.grid[-1] > v.grid[-1] * (1 + 1e-12):
        raise ValidationError("v must be defined on the whole grid of u")
    vv = CubicHermiteSpline(v.grid, v.values, v.derivatives)(u.grid)
    return bool(np.all(u.values >= vv - slack))


def sup_distance(u: RadialSolution, v: RadialSolution) -> float:
    vv = CubicHermiteSpline(v.grid, v.values, v.derivatives)(u.grid)
    return float(np.max(np.abs(u.values - vv)))
