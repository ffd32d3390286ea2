"""Radial solutions of ``Δ_k u = φ(u)``.

For radial ``u`` the equation reduces to ``u'' + (m-1)/r u' = φ(u)`` with
``u(0) = a``, ``u'(0) = 0``.  This module integrates that initial-value
problem, locates the blow-up radius ``R_a``, evaluates the Keller-Osserman
integrals, and solves the two inverse problems (a seed with prescribed
blow-up radius, a seed with prescribed boundary value).
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import CubicHermiteSpline

from .errors import (
    HorizonTooSmall,
    KOHoldsNoBlowup,
    NonPhysicalSeed,
    UnclassifiableTail,
    ValidationError,
)
from .phi import PhiSpec

U_MAX = 1e8
TAIL_REL = 1e-6
GROWTH_EPS = 0.05

KO_HOLDS = "KO_holds"
KO_FAILS = "KO_fails"
EXISTS = "exists"
NOT_EXISTS = "not_exists"

FINITE = "finite"
INFINITE = "infinite_up_to_horizon"


@dataclass
class Blowup:
    radius: float
    status: str
    bracket: tuple[float, float] | None = None
    horizon: float | None = None

    def to_dict(self) -> dict:
        return {
            "radius": None if math.isinf(self.radius) else self.radius,
            "status": self.status,
            "bracket": list(self.bracket) if self.bracket else None,
            "horizon": self.horizon,
        }


@dataclass
class RadialSolution:
    grid: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray
    seed: float
    m: float
    phi: PhiSpec
    blowup: Blowup | None = None
    ko: dict | None = None
    meta: dict = field(default_factory=dict)

    def interpolant(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.grid, self.values, self.derivatives)

    def __call__(self, r):
        return self.interpolant()(r)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "m": self.m,
            "phi": self.phi.to_dict(),
            "grid": self.grid.tolist(),
            "values": self.values.tolist(),
            "derivatives": self.derivatives.tolist(),
            "blowup": self.blowup.to_dict() if self.blowup else None,
            "ko": self.ko,
            **({"meta": self.meta} if self.meta else {}),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(["r", "u", "u_prime"])
        for r, u, du in zip(self.grid, self.values, self.derivatives):
            writer.writerow([repr(float(r)), repr(float(u)), repr(float(du))])
        return buf.getvalue()


@dataclass
class KOReport:
    a: float
    integral_from_zero: float
    integral_from_a: float
    classification: str
    sandwich: tuple[float, float, float] | None = None
    sandwich_ok: bool | None = None
    blowup_radius: float | None = None

    def to_dict(self) -> dict:
        def enc(v):
            return "inf" if v is not None and math.isinf(v) else v

        return {
            "a": self.a,
            "integral_from_zero": enc(self.integral_from_zero),
            "integral_from_a": enc(self.integral_from_a),
            "classification": self.classification,
            "sandwich": None
            if self.sandwich is None
            else {"lower": self.sandwich[0], "sqrt2_Ra": self.sandwich[1], "upper": self.sandwich[2]},
            "sandwich_ok": self.sandwich_ok,
            "blowup_radius": self.blowup_radius,
        }


# ---------------------------------------------------------------------------
# initial value problem


def _series(m: float, phi: PhiSpec, a: float, r: float) -> tuple[float, float]:
    # u = a + A r^2 + B r^4 + O(r^6)
    fa = phi(a)
    A = fa / (2.0 * m)
    B = phi.derivative(a) * fa / (8.0 * m * (m + 2.0))
    return a + A * r * r + B * r**4, 2.0 * A * r + 4.0 * B * r**3


def blowup_tail(phi: PhiSpec, u: float, du: float) -> float:
    """Remaining radius to blow-up from a state with large ``u``.

    Energy estimate ``u'^2 = du^2 + 2 ∫_u^v φ`` with the friction term
    dropped; the neglected term is relatively ``O((m-1) tail / r)``.
    """

    # v = u / y maps [u, inf) onto (0, 1] at the natural scale of u
    def integrand(y):
        if y <= 0.0:
            return 0.0
        with np.errstate(over="ignore", invalid="ignore"):
            e = du * du + 2.0 * phi.primitive_between(u, u / y)
        if not np.isfinite(e) or e <= 0:
            return 0.0
        return u / (y * y * math.sqrt(e))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        val, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=1e-10, limit=200)
    return val


def integrate_radial_ivp(
    m: float,
    phi: PhiSpec,
    a: float,
    r_horizon: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    u_max: float = U_MAX,
    r_eval=None,
    tail_rel: float = TAIL_REL,
) -> RadialSolution:
    """Integrate the radial equation from ``u(0) = a``, ``u'(0) = 0``.

    The regular singular point ``r = 0`` is bridged by the Taylor series
    ``a + φ(a) r^2/(2m) + φ'(a)φ(a) r^4/(8m(m+2))`` up to
    ``r_start = 1e-4 r_horizon``; beyond that an embedded Dormand-Prince
    4(5) pair integrates ``(u, u')``.  Integration stops at the horizon or
    once blow-up is certified: ``u`` exceeds ``u_max`` (or ``φ`` would
    overflow) and the remaining energy-estimated distance to the
    singularity is below ``tail_rel * r``.  The certified blow-up is stored
    as the bracket ``[r_last, r_last + tail]``.

    With ``r_eval`` the profile is reported at those radii (dense output)
    instead of on the integrator's own steps.
    """
    if a < 0:
        raise NonPhysicalSeed(f"seed a = {a} must be nonnegative")
    if r_horizon <= 0:
        raise ValidationError("r_horizon must be positive")
    if m <= 2:
        raise ValidationError("m must exceed 2")

    r_start = 1e-4 * r_horizon
    u0, du0 = _series(m, phi, a, r_start)
    grid, vals, ders = [0.0, r_start], [a, u0], [0.0, du0]
    ev = None if r_eval is None else np.asarray(r_eval, dtype=float)
    ev_out: list[tuple[float, float, float]] = []
    if ev is not None:
        for r in ev[ev <= r_start]:
            uu, dd = _series(m, phi, a, r)
            ev_out.append((r, uu, dd))

    def rhs(r, y):
        return [y[1], phi(y[0]) - (m - 1.0) / r * y[1]]

    blow: Blowup | None = None
    if a == 0.0:
        # the zero solution is exact
        g = np.array([0.0, r_horizon]) if ev is None else ev
        return RadialSolution(g, np.zeros_like(g), np.zeros_like(g), 0.0, m, phi, None)

    solver = integrate.RK45(rhs, r_start, [u0, du0], r_horizon, rtol=rtol, atol=atol)
    u_checked = max(10.0 * a, 10.0)
    # expm1 overflows near u = 709; its tail is negligible long before that
    danger = 600.0 if phi.kind == "expm1" else math.inf
    while solver.status == "running":
        solver.step()
        r, (u, du) = solver.t, solver.y
        if solver.status == "failed":
            # step size collapsed: only happens right at a singularity
            tail = blowup_tail(phi, u, du)
            blow = Blowup(r + tail, FINITE, (r, r + tail), r_horizon)
            break
        if ev is not None:
            sel = ev[(ev > solver.t_old) & (ev <= r)]
            if sel.size:
                yy = solver.dense_output()(sel)
                ev_out.extend(zip(sel, yy[0], yy[1]))
        grid.append(r)
        vals.append(u)
        ders.append(du)
        if u >= u_checked or u > danger:
            u_checked = 2.0 * u
            tail = blowup_tail(phi, u, du)
            certified = tail <= tail_rel * r and (u >= u_max or tail <= 1e-3 * tail_rel * r)
            if certified or u > danger:
                blow = Blowup(r + tail, FINITE, (r, r + tail), r_horizon)
                break

    if ev is not None:
        arr = np.array(ev_out) if ev_out else np.zeros((0, 3))
        g, v, dv = arr[:, 0], arr[:, 1], arr[:, 2]
    else:
        g, v, dv = np.array(grid), np.array(vals), np.array(ders)
    return RadialSolution(g, v, dv, float(a), float(m), phi, blow, meta={"steps": len(grid) - 2})


# ---------------------------------------------------------------------------
# Keller-Osserman integrals


@dataclass
class KOIntegral:
    value: float  # math.inf when divergent
    divergent: bool
    growth_exponent: float
    split_point: float


def _dominance_scale(phi: PhiSpec) -> float:
    if phi.kind == "poly":
        coeffs = phi.params
        top = max(i for i, c in enumerate(coeffs) if c > 0)
        scale = 1.0
        for i, c in enumerate(coeffs[:top]):
            if c > 0:
                scale = max(scale, (c / coeffs[top]) ** (1.0 / (top - i)))
        return scale
    return 1.0


def _growth(F, T: float) -> float:
    with np.errstate(over="ignore"):
        f1, f4 = F(T), F(4.0 * T)
    if not np.isfinite(f4):
        return math.inf
    return math.log(f4 / f1) / math.log(4.0)


def ko_integral(phi: PhiSpec, a: float, inner_limit: str = "from_zero", max_doublings: int = 60) -> KOIntegral:
    """``∫_a^∞ dt / sqrt(∫_b^t φ)`` with ``b = 0`` (``from_zero``) or ``b = a`` (``from_a``).

    The tail is classified by the local growth exponent of the primitive,
    ``q(T) = log4(F(4T)/F(T))``, doubling ``T`` until two consecutive
    verdicts agree: ``q > 2 + ε`` means a convergent tail, otherwise the
    integral diverges.  Convergent tails are integrated after the change of
    variables ``t = T/y``.
    """
    if a <= 0:
        raise ValidationError("a must be positive")
    if inner_limit == "from_zero":
        F = phi.primitive
    elif inner_limit == "from_a":
        def F(t):
            return phi.primitive_between(a, t)
    else:
        raise ValidationError("inner_limit must be 'from_zero' or 'from_a'")
    if inner_limit == "from_zero" and not phi.primitive(a) > 0:
        raise ValidationError("φ vanishes identically on [0, a]")

    T = max(2.0 * a, 2.0, 4.0 * _dominance_scale(phi))
    verdicts: list[bool] = []
    q = math.nan
    for _ in range(max_doublings):
        q = _growth(F, T)
        verdicts.append(q > 2.0 + GROWTH_EPS)
        if len(verdicts) >= 3 and verdicts[-1] == verdicts[-2] == verdicts[-3]:
            break
        T *= 2.0
    else:
        raise UnclassifiableTail(f"growth exponent did not stabilise (last q = {q})")
    # the verdict is the one that held over two doublings; T is where it started
    T = T / 4.0
    if not verdicts[-1]:
        return KOIntegral(math.inf, True, q, T)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if inner_limit == "from_a":
            # t = a + s^2 removes the inverse square-root singularity at t = a
            def head(s):
                if s == 0.0:
                    return 2.0 / math.sqrt(phi(a))
                return 2.0 * s / math.sqrt(F(a + s * s))

            h, _ = integrate.quad(head, 0.0, math.sqrt(T - a), epsabs=0.0, epsrel=1e-12, limit=400)
        else:
            h, _ = integrate.quad(lambda t: 1.0 / math.sqrt(F(t)), a, T, epsabs=0.0, epsrel=1e-12, limit=400)

        def tail(y):
            if y == 0.0:
                return 0.0
            with np.errstate(over="ignore"):
                val = F(T / y)
            if not np.isfinite(val):
                return 0.0
            return T / (y * y * math.sqrt(val))

        t_val, _ = integrate.quad(tail, 0.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=400)
    return KOIntegral(h + t_val, False, q, T)


def classify_entire_solution(m: float, phi: PhiSpec) -> str:
    """``exists`` iff the Keller-Osserman integral diverges."""
    return EXISTS if ko_integral(phi, 1.0, "from_zero").divergent else NOT_EXISTS


def ko_classification(phi: PhiSpec) -> str:
    return KO_HOLDS if ko_integral(phi, 1.0, "from_zero").divergent else KO_FAILS


# ---------------------------------------------------------------------------
# blow-up radii and inverse problems


def blowup_radius(m: float, phi: PhiSpec, a: float, horizon: float | None = None, **controls) -> Blowup:
    """Blow-up radius ``R_a`` of the solution seeded at ``a > 0``.

    Infinite radii are certified by the Keller-Osserman classification,
    never by integration.  For finite radii the default horizon is
    ``1.05 sqrt(m/2) L`` where ``L`` is the ``from_a`` integral, an a-priori
    upper bound for ``R_a``.
    """
    if a <= 0:
        raise ValidationError("blow-up radius needs a > 0")
    if ko_integral(phi, a, "from_zero").divergent:
        return Blowup(math.inf, INFINITE, None, horizon if horizon is not None else math.inf)
    if horizon is None:
        L = ko_integral(phi, a, "from_a").value
        horizon = 1.05 * math.sqrt(m / 2.0) * L
    sol = integrate_radial_ivp(m, phi, a, horizon, **controls)
    if sol.blowup is None:
        raise HorizonTooSmall(f"no blow-up detected before r = {horizon}")
    return sol.blowup


@dataclass
class SeedSearch:
    seed: float
    bracket: tuple[float, float]
    radii: tuple[float, float]
    trace: list[tuple[float, float, float, float]]


def find_seed_for_radius(m: float, phi: PhiSpec, r_target: float, tol: float = 1e-7, full: bool = False, **controls):
    """Seed ``b`` whose solution blows up exactly at ``r_target``.

    ``a -> R_a`` is continuous and nonincreasing, so bisection (in
    ``log a``) on a bracket ``R(lo) >= r_target >= R(hi)`` converges; the
    bracket is found by doubling or halving from ``a = 1``.  Returns the
    geometric midpoint of the final bracket, or a :class:`SeedSearch` with
    the whole trace when ``full`` is set.
    """
    if r_target <= 0:
        raise ValidationError("target radius must be positive")
    if ko_classification(phi) == KO_HOLDS:
        raise KOHoldsNoBlowup("no finite blow-up radius exists: the Keller-Osserman condition holds")

    def R(a):
        return blowup_radius(m, phi, a, **controls).radius

    lo = hi = 1.0
    r_lo = r_hi = R(1.0)
    while r_lo < r_target:
        lo /= 2.0
        r_lo = R(lo)
    while r_hi > r_target:
        hi *= 2.0
        r_hi = R(hi)
    trace = [(lo, hi, r_lo, r_hi)]
    while r_lo - r_hi > tol * r_target and hi / lo > 1 + 1e-15:
        mid = math.sqrt(lo * hi)
        r_mid = R(mid)
        if r_mid >= r_target:
            lo, r_lo = mid, r_mid
        else:
            hi, r_hi = mid, r_mid
        trace.append((lo, hi, r_lo, r_hi))
    b = math.sqrt(lo * hi)
    if full:
        return SeedSearch(b, (lo, hi), (r_lo, r_hi), trace)
    return b


def solve_blowup_problem(m: float, phi: PhiSpec, r_ball: float, tol: float = 1e-7, **controls) -> RadialSolution:
    """Radial solution on ``B_r`` with ``u -> ∞`` at the boundary (large solution)."""
    b = find_seed_for_radius(m, phi, r_ball, tol=tol, **controls)
    L = ko_integral(phi, b, "from_a").value
    sol = integrate_radial_ivp(m, phi, b, 1.05 * math.sqrt(m / 2.0) * L, **controls)
    sol.meta["target_radius"] = r_ball
    return sol


def solve_radial_dirichlet_shooting(
    m: float,
    phi: PhiSpec,
    r_ball: float,
    c: float,
    tol: float = 1e-12,
    grid=None,
    n_out: int = 2001,
    **controls,
) -> RadialSolution:
    """Radial solution of ``Δ_k u = φ(u)`` on ``B_r`` with ``u = c`` on the sphere.

    ``a -> u_a(r_ball)`` is increasing with ``u_0 = 0`` and ``u_c(r_ball) >= c``,
    so the seed is bracketed in ``[0, c]``; Brent's method keeps the
    bracket.  The profile is reported on ``grid`` (default ``n_out`` uniform
    radii).
    """
    if c < 0:
        raise ValidationError("boundary value must be nonnegative")
    if r_ball <= 0:
        raise ValidationError("ball radius must be positive")
    out_grid = np.linspace(0.0, r_ball, n_out) if grid is None else np.asarray(grid, dtype=float)
    if c == 0:
        z = np.zeros_like(out_grid)
        return RadialSolution(out_grid, z, z.copy(), 0.0, m, phi, None, meta={"method": "shooting"})

    def boundary_gap(a):
        sol = integrate_radial_ivp(m, phi, a, r_ball, r_eval=np.array([r_ball]), **controls)
        if sol.blowup is not None or sol.grid.size == 0:
            return U_MAX
        return float(sol.values[-1]) - c

    g_hi = boundary_gap(c)
    if g_hi <= tol:
        a = c
    else:
        a = optimize.brentq(boundary_gap, 0.0, c, xtol=1e-15 * max(c, 1.0), rtol=1e-15, maxiter=200)
    sol = integrate_radial_ivp(m, phi, a, r_ball, r_eval=out_grid, **controls)
    sol.meta.update({"method": "shooting", "boundary_value": c, "boundary_error": float(sol.values[-1] - c)})
    return sol


def sandwich_check(m: float, phi: PhiSpec, a: float, slack: float = 1e-3, **controls) -> KOReport:
    """Check ``L <= sqrt(2) R_a <= sqrt(m) L`` where ``L`` is the ``from_a`` integral."""
    L = ko_integral(phi, a, "from_a").value
    zero = ko_integral(phi, a, "from_zero")
    bl = blowup_radius(m, phi, a, **controls)
    if bl.status != FINITE:
        raise KOHoldsNoBlowup("sandwich bounds need a finite blow-up radius")
    mid = math.sqrt(2.0) * bl.radius
    upper = math.sqrt(m) * L
    ok = (L - slack * L <= mid) and (mid <= upper + slack * L)
    return KOReport(
        a=a,
        integral_from_zero=zero.value,
        integral_from_a=L,
        classification=KO_HOLDS if zero.divergent else KO_FAILS,
        sandwich=(L, mid, upper),
        sandwich_ok=ok,
        blowup_radius=bl.radius,
    )


def ko_report(phi: PhiSpec, a: float = 1.0) -> KOReport:
    zero = ko_integral(phi, a, "from_zero")
    from_a = ko_integral(phi, a, "from_a")
    return KOReport(a, zero.value, from_a.value, KO_HOLDS if zero.divergent else KO_FAILS)
