import json
import math

import numpy as np
import pytest
from scipy import integrate, special

from dunkl_lab.errors import HorizonTooSmall, KOHoldsNoBlowup, NonPhysicalSeed
from dunkl_lab.phi import PhiSpec
from dunkl_lab.radial import (
    EXISTS,
    FINITE,
    INFINITE,
    KO_FAILS,
    KO_HOLDS,
    NOT_EXISTS,
    blowup_radius,
    classify_entire_solution,
    find_seed_for_radius,
    integrate_radial_ivp,
    ko_integral,
    ko_report,
    sandwich_check,
    solve_blowup_problem,
    solve_radial_dirichlet_shooting,
)

SQ = PhiSpec.power(1.0, 2.0)
CUBE = PhiSpec.power(1.0, 3.0)
LIN = PhiSpec.linear(1.0)

# mpmath oracles at 30 digits
TWO_I1_AT_1 = 1.1303182079849701  # sum (1/4)^n / (n! (2)_n) for m = 4
SINH_1 = 1.1752011936438015  # m = 3: u = sinh(r)/r, so r u(r) at r = 1
L_SQ_FROM_1 = 4.2065463159763627  # ∫_1^∞ dt / sqrt((t^3 - 1)/3)
L0_SQ_AT_1 = 3.4641016151377546  # ∫_1^∞ dt / sqrt(t^3/3) = 2 sqrt(3)
L0_CUBE_AT_1 = 2.0  # ∫_1^∞ dt / sqrt(t^4/4)


def test_zero_seed_stays_zero():
    for phi in (SQ, LIN, PhiSpec.expm1(1.0)):
        sol = integrate_radial_ivp(4.0, phi, 0.0, 3.0)
        assert np.all(sol.values == 0.0)
        assert sol.blowup is None


def test_linear_series_oracles():
    sol = integrate_radial_ivp(4.0, LIN, 1.0, 1.0, r_eval=np.linspace(0, 1, 11))
    assert sol.values[-1] == pytest.approx(TWO_I1_AT_1, abs=1e-6)
    assert sol.derivatives[0] == 0.0
    sol3 = integrate_radial_ivp(3.0, LIN, 1.0, 1.0, r_eval=np.array([0.0, 0.5, 1.0]))
    assert sol3.values[-1] == pytest.approx(SINH_1, abs=1e-8)
    assert sol3.values[1] == pytest.approx(math.sinh(0.5) / 0.5, abs=1e-8)


def test_cubic_exact_profile():
    # m = 4, φ(u) = u^3: u = 2√2 R / (R^2 - r^2) with R = 2√2 / a solves the radial equation
    for a in (0.5, 1.0, 3.0):
        R = 2 * math.sqrt(2.0) / a
        bl = blowup_radius(4.0, CUBE, a)
        assert bl.status == FINITE
        assert bl.radius == pytest.approx(R, rel=2e-6)
        lo, hi = bl.bracket
        assert lo <= R * (1 + 1e-9) and hi - lo <= 1e-6 * bl.radius
        r = np.linspace(0, 0.9 * R, 7)
        sol = integrate_radial_ivp(4.0, CUBE, a, R, r_eval=r)
        exact = 2 * math.sqrt(2.0) * R / (R * R - r * r)
        np.testing.assert_allclose(sol.values, exact, rtol=1e-8)


def test_apriori_bound_and_monotone():
    sol = integrate_radial_ivp(4.0, SQ, 1.0, 4.0)
    r, u = sol.grid, sol.values
    assert np.all(u >= 1.0 + r * r / 8.0 - 1e-12)
    assert np.all(np.diff(u) >= 0)
    assert np.all(np.diff(r) > 0) and r[0] == 0.0


def test_derivative_bounds():
    m = 4.0
    sol = integrate_radial_ivp(m, SQ, 1.0, 4.0)
    r, u, du = sol.grid, sol.values, sol.derivatives
    assert np.all(du >= 0)
    assert np.all(du <= r / m * SQ(u) * (1 + 1e-8) + 1e-14)
    ok = (r > 0) & (u < 1e6)
    d2 = SQ(u[ok]) - (m - 1) / r[ok] * du[ok]
    assert np.all(d2 >= SQ(u[ok]) / m * (1 - 1e-4))
    assert np.all(d2 <= SQ(u[ok]) * (1 + 1e-4))


def test_negative_seed():
    with pytest.raises(NonPhysicalSeed):
        integrate_radial_ivp(4.0, SQ, -1.0, 1.0)


def test_ko_integral_values():
    assert ko_integral(SQ, 1.0, "from_a").value == pytest.approx(L_SQ_FROM_1, rel=1e-10)
    assert ko_integral(SQ, 1.0, "from_zero").value == pytest.approx(L0_SQ_AT_1, rel=1e-10)
    assert ko_integral(CUBE, 1.0, "from_zero").value == pytest.approx(L0_CUBE_AT_1, rel=1e-10)
    lin = ko_integral(LIN, 1.0, "from_zero")
    assert lin.divergent and math.isinf(lin.value)


def test_ko_integral_quadrature_oracle():
    # an independent scipy quadrature of the same integral, split at 1e4 with the exact power tail added
    phi = PhiSpec.power(2.0, 1.5)
    a = 0.7
    F = lambda t: phi.primitive(t) - phi.primitive(a)  # noqa: E731
    head, _ = integrate.quad(lambda t: 1 / math.sqrt(F(t)), a, 1e4, limit=500, epsrel=1e-12, points=[a + 1e-6, 1, 10, 100])
    tail, _ = integrate.quad(lambda t: 1 / math.sqrt(F(t)), 1e4, np.inf, epsrel=1e-12)
    assert ko_integral(phi, a, "from_a").value == pytest.approx(head + tail, rel=1e-6)


@pytest.mark.parametrize(
    "phi,label",
    [(PhiSpec.power(1, 1), KO_HOLDS), (LIN, KO_HOLDS), (PhiSpec.power(1, 1.5), KO_FAILS), (SQ, KO_FAILS),
     (CUBE, KO_FAILS), (PhiSpec.expm1(1), KO_FAILS), (PhiSpec.poly(1.0, 0.5), KO_FAILS)],
    ids=lambda v: getattr(v, "description", v),
)
def test_ko_dichotomy(phi, label):
    assert ko_report(phi).classification == label
    assert classify_entire_solution(4.0, phi) == (EXISTS if label == KO_HOLDS else NOT_EXISTS)


def test_infinite_radius_is_certified():
    bl = blowup_radius(4.0, LIN, 1.0, horizon=50.0)
    assert bl.status == INFINITE and math.isinf(bl.radius) and bl.horizon == 50.0


def test_horizon_too_small():
    with pytest.raises(HorizonTooSmall):
        blowup_radius(4.0, SQ, 1.0, horizon=1.0)


def test_blowup_monotone_in_seed():
    radii = [blowup_radius(4.0, SQ, a).radius for a in (1e-6, 0.5, 1.0, 2.0, 1e6)]
    assert all(x > y for x, y in zip(radii, radii[1:]))


@pytest.mark.parametrize("m", [3.0, 4.0, 5.0])
@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_sandwich(m, a):
    rep = sandwich_check(m, SQ, a)
    lo, mid, hi = rep.sandwich
    assert rep.sandwich_ok
    assert lo * (1 - 1e-3) <= mid <= hi + 1e-3 * lo
    assert hi == pytest.approx(math.sqrt(m) * lo)


def test_sandwich_rejects_ko_holds():
    with pytest.raises(KOHoldsNoBlowup):
        sandwich_check(4.0, LIN, 1.0)


def test_seed_round_trip_and_bracket():
    for a in (0.5, 1.0, 2.0):
        R = blowup_radius(4.0, SQ, a).radius
        search = find_seed_for_radius(4.0, SQ, R, full=True)
        assert search.seed == pytest.approx(a, rel=1e-3)
        for lo, hi, r_lo, r_hi in search.trace:
            assert lo <= hi and r_lo >= R >= r_hi


def test_seed_search_requires_ko_failure():
    with pytest.raises(KOHoldsNoBlowup):
        find_seed_for_radius(4.0, LIN, 1.0)


def test_blowup_problem_profile():
    sol = solve_blowup_problem(4.0, SQ, 1.0)
    assert sol(0.99) > 1e3
    assert np.all(np.diff(sol.values) >= 0)
    assert sol.blowup.radius == pytest.approx(1.0, rel=1e-6)
    r, u, du = sol.grid, sol.values, sol.derivatives
    inner = (r > 0.05) & (r < 0.95)
    spline = sol.interpolant()
    d2 = spline.derivative(2)(r[inner])
    res = d2 + 3.0 / r[inner] * du[inner] - SQ(u[inner])
    assert np.max(np.abs(res) / SQ(u[inner])) <= 1e-6 or np.max(np.abs(res) / np.abs(d2)) <= 1e-3


def test_blowup_problem_under_ko():
    with pytest.raises(KOHoldsNoBlowup):
        solve_blowup_problem(4.0, LIN, 1.0)


def test_shooting_linear_oracle():
    sol = solve_radial_dirichlet_shooting(4.0, LIN, 1.0, 1.0, n_out=101)
    assert sol.seed == pytest.approx(1 / TWO_I1_AT_1, abs=1e-9)
    rho = sol.grid[1:]
    exact = (2 * special.i1(rho) / rho) / TWO_I1_AT_1
    np.testing.assert_allclose(sol.values[1:], exact, atol=1e-8)
    assert np.all(sol.values <= 1.0 + 1e-12)
    assert abs(sol.values[-1] - 1.0) <= 1e-10


def test_shooting_zero_data():
    sol = solve_radial_dirichlet_shooting(4.0, SQ, 1.0, 0.0)
    assert np.all(sol.values == 0.0)


def test_serialisation():
    sol = integrate_radial_ivp(4.0, SQ, 1.0, 5.0)
    doc = json.loads(json.dumps(sol.to_dict()))
    assert set(doc) >= {"seed", "grid", "values", "blowup", "ko"}
    assert doc["blowup"]["status"] == FINITE
    lines = sol.to_csv().split("\r\n")
    assert lines[0] == "r,u,u_prime"
    assert len(lines) == len(sol.grid) + 2
    rep = ko_report(LIN).to_dict()
    assert rep["integral_from_zero"] == "inf"
