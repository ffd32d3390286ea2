"""Named invariant checks behind ``dunkl-lab verify``.

Each check returns ``(passed, detail)``.  ``quick`` runs everything except
the Monte Carlo checks; ``full`` adds them at acceptance scale.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import green, radial, semilinear
from .calculus import apply_dunkl_laplacian, radial_dunkl_laplacian, radial_field
from .phi import PhiSpec
from .quadrature import interval_integrals
from .roots import build_root_system, enumerate_group, reflect, weight

CHECKS: dict[str, tuple[str, Callable[[], tuple[bool, str]]]] = {}


def check(name: str, level: str = "quick"):
    def deco(fn):
        CHECKS[name] = (level, fn)
        return fn

    return deco


def _systems():
    return [
        build_root_system("A1_product", d=1, k=1.0),
        build_root_system("A1_product", d=2, k=0.75),
        build_root_system("dihedral", order=3, k=1.0),
        build_root_system("B_rank2", k=(0.5, 1.5)),
        build_root_system("A1_product", d=3, k=0.5),
    ]


PHI_FAMILY = [PhiSpec.linear(1.0), PhiSpec.power(1.0, 1.5), PhiSpec.power(1.0, 2.0), PhiSpec.expm1(1.0), PhiSpec.poly(1.0, 1.0)]

# ---------------------------------------------------------------------------
# root systems


@check("root_system.reflection_isometry")
def _reflection_isometry():
    rng = np.random.default_rng(1)
    worst = 0.0
    for sys in _systems():
        X = rng.normal(size=(200, sys.d)) * 3
        for a in sys.roots:
            worst = max(worst, float(np.max(np.abs(np.linalg.norm(reflect(a, X), axis=1) - np.linalg.norm(X, axis=1)))))
    return worst <= 1e-12, f"max | |σx| - |x| | = {worst:.2e}"


@check("root_system.weight_invariance")
def _weight_invariance():
    rng = np.random.default_rng(2)
    worst = 0.0
    for sys in _systems():
        X = rng.normal(size=(50, sys.d))
        w0 = weight(sys, X)
        for g in enumerate_group(sys):
            worst = max(worst, float(np.max(np.abs(weight(sys, X @ g.matrix.T) - w0) / np.maximum(np.abs(w0), 1e-300))))
    return worst <= 1e-10, f"max relative deviation {worst:.2e}"


@check("root_system.full_system_symmetric")
def _full_symmetric():
    for sys in _systems():
        R = sys.roots
        if len(R) % 2:
            return False, f"{sys.family}: odd cardinality"
        for a in R:
            if not np.any(np.all(R == -a, axis=1)):
                return False, f"{sys.family}: -α missing"
    return True, "R = -R for all sample systems"


@check("root_system.group_inverse_closed")
def _group_inverse():
    for sys in _systems():
        G = enumerate_group(sys)
        mats = np.array([g.matrix for g in G])
        for g in G:
            if not np.any(np.all(np.abs(mats - g.matrix.T) < 1e-10, axis=(1, 2))):
                return False, f"{sys.family}: transpose missing"
    return True, "every transpose present"


# ---------------------------------------------------------------------------
# Dunkl calculus

_PROFILES = {
    "r^2": (lambda r: r * r, lambda r: 2 * r, lambda r: 2.0),
    "r^4": (lambda r: r**4, lambda r: 4 * r**3, lambda r: 12 * r * r),
    "exp(-r^2)": (lambda r: math.exp(-r * r), lambda r: -2 * r * math.exp(-r * r), lambda r: (4 * r * r - 2) * math.exp(-r * r)),
}


@check("dunkl_calculus.radial_consistency")
def _radial_consistency():
    worst_ratio = 0.0
    for sys in _systems()[:4]:
        x = np.array([0.7, 0.45, 0.3][: sys.d]) + 0.05 * np.arange(sys.d)
        r = float(np.linalg.norm(x))
        for u, du, d2u in _PROFILES.values():
            exact = radial_dunkl_laplacian(sys.m, u(r), du(r), d2u(r), r)
            for h in (1e-2, 1e-3):
                err = abs(apply_dunkl_laplacian(sys, radial_field(u), x, h) - exact)
                worst_ratio = max(worst_ratio, err / (50 * h * h))
    return worst_ratio <= 1.0, f"max error / (50 h^2) = {worst_ratio:.3f}"


@check("dunkl_calculus.convergence_order")
def _convergence_order():
    sys = build_root_system("A1_product", d=2, k=0.75)
    c = np.array([0.8, -0.5])
    x = np.array([0.6, 0.9])
    f = lambda y: math.exp(float(c @ y))  # noqa: E731
    # Δ_k e^{<c,x>}: |c|^2 e + Σ_R k [<c,α>/<α,x> e - (e - e^{<c,σx>})/<α,x>^2]
    e = f(x)
    exact = float(c @ c) * e
    for a, k in zip(sys.positive_roots, sys.multiplicity):
        p = float(a @ x)
        exact += 2 * k * (float(c @ a) / p * e - (e - f(reflect(a, x))) / (p * p))
    errs = [abs(apply_dunkl_laplacian(sys, f, x, h) - exact) for h in (4e-2, 2e-2, 1e-2)]
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    ok = all(3.5 <= q <= 4.5 for q in ratios)
    return ok, f"error ratios under halving {ratios[0]:.3f}, {ratios[1]:.3f}"


@check("dunkl_calculus.green_origin_harmonic")
def _green_harmonic():
    sys = build_root_system("A1_product", d=2, k=0.75)
    ctx = green.KernelContext.from_system(sys)
    field = radial_field(lambda s: green.green_origin(ctx, s))
    worst = 0.0
    for r in (0.5, 1.0, 1.5, 2.0):
        for th in (0.3, 1.1):
            x = r * np.array([math.cos(th), math.sin(th)])
            worst = max(worst, abs(apply_dunkl_laplacian(sys, field, x, 1e-4)))
    return worst <= 1e-4, f"max |Δ_k G(·,0)| = {worst:.2e} (h = 1e-4)"


# ---------------------------------------------------------------------------
# Green kernels


@check("green_kernels.branch_continuity")
def _branch_continuity():
    worst = 0.0
    for m in (2.5, 3.0, 4.0, 5.0, 10.0):
        ctx = green.KernelContext(m)
        for r in (0.5, 1.0, 2.0):
            inside = (r * r / m) / (m - 2)
            outside = r**m * r ** (2 - m) / (m * (m - 2))
            # the code is probed on the seam and one ulp to either side of it
            probes = [green.green_potential_ball(ctx, r, rho) for rho in (math.nextafter(r, 0), r, math.nextafter(r, math.inf))]
            worst = max(worst, abs(inside - outside), *(abs(v - inside) for v in probes))
    return worst <= 1e-12, f"max jump {worst:.2e}"


@check("green_kernels.potential_monotone_decay")
def _monotone_decay():
    rho = np.concatenate([np.linspace(0, 2, 2001), np.geomspace(2, 1e8, 400)[1:]])
    for m in (2.5, 3.0, 5.0, 10.0):
        v = green.green_potential_ball(green.KernelContext(m), 1.0, rho)
        if np.any(np.diff(v) > 0) or v[-1] > 1e-3 * v[0]:
            return False, f"m={m}: not nonincreasing or not decaying"
    return True, "nonincreasing on [0, 1e8] and below 1e-3 of the centre value at 1e8"


@check("green_kernels.pointwise_bound_at_origin")
def _pointwise_origin():
    ctx = green.KernelContext(5.0, 0.43)
    worst = max(abs(green.green_pointwise_bound(ctx, r, 0.0) - green.green_origin(ctx, r)) / green.green_origin(ctx, r)
                for r in (0.1, 0.5, 1.0, 3.0))
    return worst <= 1e-14, f"relative difference {worst:.1e}"


@check("green_kernels.operator_exit_time")
def _operator_exit_time():
    worst = 0.0
    for m in (3.0, 4.0, 5.0):
        grid = np.linspace(0, 1, 101)
        v = green.green_operator_radial(m, 1.0, lambda s: np.ones_like(s), grid)
        worst = max(worst, float(np.max(np.abs(v - green.expected_exit_time_ball(green.KernelContext(m), 1.0, grid)))))
    return worst <= 1e-8, f"max deviation {worst:.2e}"


@check("green_kernels.operator_linearity")
def _operator_linearity():
    grid = np.linspace(0, 1.5, 61)
    f = lambda s: np.cos(3 * s)  # noqa: E731
    g = lambda s: s**3  # noqa: E731
    v = green.green_operator_radial(4.5, 1.5, lambda s: 2 * f(s) - 0.7 * g(s), grid)
    w = 2 * green.green_operator_radial(4.5, 1.5, f, grid) - 0.7 * green.green_operator_radial(4.5, 1.5, g, grid)
    err = float(np.max(np.abs(v - w)))
    return err <= 1e-10, f"max deviation {err:.2e}"


# ---------------------------------------------------------------------------
# radial engine

_RADIAL_CASES = [(4.0, PhiSpec.power(1.0, 2.0), 1.0), (3.0, PhiSpec.expm1(1.0), 0.5), (5.0, PhiSpec.linear(1.0), 1.0),
                 (3.5, PhiSpec.poly(1.0, 0.5), 2.0)]


def _profile(m, phi, a, n=2001):
    """Profile on a uniform grid up to 0.9 R_a (or r = 3 when KO holds)."""
    bl = radial.blowup_radius(m, phi, a)
    r_end = 0.9 * bl.radius if bl.status == radial.FINITE else 3.0
    grid = np.linspace(0, r_end, n)
    return radial.integrate_radial_ivp(m, phi, a, r_end, r_eval=grid)


@check("radial_engine.seed_monotonicity")
def _seed_monotonicity():
    for m, phi, _ in _RADIAL_CASES:
        a, b = 0.5, 1.0
        Rb = radial.blowup_radius(m, phi, b)
        Ra = radial.blowup_radius(m, phi, a)
        r_end = 0.9 * Rb.radius if Rb.status == radial.FINITE else 3.0
        grid = np.linspace(0, r_end, 501)
        ua = radial.integrate_radial_ivp(m, phi, a, r_end, r_eval=grid).values
        ub = radial.integrate_radial_ivp(m, phi, b, r_end, r_eval=grid).values
        if np.any(ua > ub + 1e-12 * np.abs(ub)) or Ra.radius < Rb.radius:
            return False, f"{phi.description}, m={m}"
    return True, "u_a <= u_b and R_a >= R_b for a < b"


@check("radial_engine.apriori_bound")
def _apriori():
    for m, phi, a in _RADIAL_CASES:
        s = _profile(m, phi, a)
        bound = a + phi(a) * s.grid**2 / (2 * m)
        if np.any(s.values < bound - 1e-12 * np.abs(bound)):
            return False, f"{phi.description}, m={m}, a={a}"
    return True, "u_a >= a + φ(a) r^2/(2m) on every grid"


@check("radial_engine.derivative_sign")
def _derivative_sign():
    for m, phi, a in _RADIAL_CASES:
        s = _profile(m, phi, a)
        upper = s.grid / m * phi(s.values)
        if np.any(s.derivatives < 0) or np.any(s.derivatives > upper * (1 + 1e-9) + 1e-14):
            return False, f"{phi.description}, m={m}, a={a}"
    return True, "0 <= u' <= (r/m) φ(u)"


@check("radial_engine.second_derivative_bracket")
def _second_derivative():
    worst = -math.inf
    for m, phi, a in _RADIAL_CASES:
        s = _profile(m, phi, a)
        d2 = np.gradient(s.derivatives, s.grid, edge_order=2)[1:-1]
        f = phi(s.values[1:-1])
        lo = f / m - d2
        hi = d2 - f
        worst = max(worst, float(np.max(lo / f)), float(np.max(hi / f)))
    return worst <= 1e-4, f"max relative violation {worst:.2e}"


@check("radial_engine.integral_equation")
def _integral_equation():
    worst = 0.0
    for m, phi, a in _RADIAL_CASES:
        s = _profile(m, phi, a, n=401)
        spline = s.interpolant()
        rs = s.grid[1:]
        # u(r) = a + (1/(m-2)) ∫_0^r s (1 - (s/r)^{m-2}) φ(u(s)) ds
        recon = []
        for r in rs[::20]:
            val = interval_integrals(lambda t: t * (1 - (t / r) ** (m - 2)) * phi(spline(t)), np.linspace(0, r, 9),
                                     atol=1e-14).sum()
            recon.append(a + val / (m - 2))
        u = s.values[1:][::20]
        worst = max(worst, float(np.max(np.abs(np.array(recon) - u) / np.abs(u))))
    return worst <= 1e-8, f"max relative deviation {worst:.2e}"


@check("radial_engine.seed_round_trip")
def _round_trip():
    phi = PhiSpec.power(1.0, 2.0)
    worst = 0.0
    for m in (4.0,):
        for a in (0.5, 1.0, 2.0):
            R = radial.blowup_radius(m, phi, a).radius
            b = radial.find_seed_for_radius(m, phi, R)
            worst = max(worst, abs(b - a) / a)
    return worst <= 1e-3, f"max relative seed error {worst:.2e}"


@check("radial_engine.ko_dichotomy")
def _ko_dichotomy():
    expect = {"power:1,1": radial.EXISTS, "power:1,1.5": radial.NOT_EXISTS, "power:1,2": radial.NOT_EXISTS,
              "power:1,3": radial.NOT_EXISTS, "expm1:1": radial.NOT_EXISTS, "linear:1": radial.EXISTS}
    got = {k: radial.classify_entire_solution(4.0, PhiSpec.parse(k)) for k in expect}
    return got == expect, str(got)


@check("radial_engine.sandwich")
def _sandwich():
    bad = []
    for m in (3.0, 4.0, 5.0):
        for a in (0.5, 1.0, 2.0):
            if not radial.sandwich_check(m, PhiSpec.power(1.0, 2.0), a).sandwich_ok:
                bad.append((m, a))
    return not bad, f"violations: {bad}" if bad else "L <= √2 R_a <= √m L in all 9 cases"


# ---------------------------------------------------------------------------
# semilinear solver


@check("semilinear_solver.method_agreement")
def _method_agreement():
    worst, worst_fp = 0.0, 0.0
    for phi in PHI_FAMILY:
        for m in (3.0, 4.0, 5.0):
            for c in (0.5, 1.0, 2.0):
                prob = semilinear.DirichletProblem(m, phi, 1.0, c)
                u = semilinear.picard_solve(prob)
                v = radial.solve_radial_dirichlet_shooting(m, phi, 1.0, c)
                worst = max(worst, semilinear.sup_distance(u, v))
                worst_fp = max(worst_fp, semilinear.verify_solution(prob, u).fixedpoint_residual)
    return worst <= 1e-6 and worst_fp <= 1e-9, f"max sup distance {worst:.2e}, max fixed-point residual {worst_fp:.2e}"


@check("semilinear_solver.solution_sandwich")
def _solution_sandwich():
    for phi in PHI_FAMILY:
        for c in (0.5, 2.0):
            prob = semilinear.DirichletProblem(4.0, phi, 1.0, c)
            u = semilinear.picard_solve(prob)
            rep = semilinear.verify_solution(prob, u)
            if not rep.bounds_ok or rep.boundary_error > 1e-9:
                return False, f"{phi.description}, c={c}"
    return True, "0 <= u <= c, u nondecreasing, u(R) = c"


@check("semilinear_solver.monotone_data")
def _monotone_data():
    for phi in PHI_FAMILY:
        sols = [semilinear.picard_solve(semilinear.DirichletProblem(4.0, phi, 1.0, c)) for c in (0.5, 1.0, 2.0)]
        for lo, hi in zip(sols[:-1], sols[1:]):
            if not semilinear.comparison_check(hi, lo):
                return False, phi.description
    return True, "c in {0.5, 1, 2} gives ordered solutions"


@check("semilinear_solver.below_blowup_profile")
def _below_blowup():
    phi = PhiSpec.power(1.0, 2.0)
    ub = radial.solve_blowup_problem(4.0, phi, 1.0)
    c = float(ub(0.95))
    u = radial.solve_radial_dirichlet_shooting(4.0, phi, 1.0, c)
    ok = semilinear.comparison_check(ub, u, slack=1e-6 * c)
    return ok, f"Dirichlet data c = u_b(0.95) = {c:.4g}; u <= u_b on the blow-up grid"


# ---------------------------------------------------------------------------
# command line


@check("cli_harness.deterministic_with_hash")
def _cli_deterministic():
    import contextlib
    import io as _io
    import json

    from .cli import main

    runs = [
        ["dirichlet", "--phi", "power:1,2", "--m", "4", "--c", "1", "--method", "both"],
        ["ko", "--phi", "expm1:1"],
        ["simulate", "exit", "--system", "a1xa1:0.75", "--paths", "200", "--h", "1e-3", "--seed", "7"],
    ]
    for argv in runs:
        outs = []
        for _ in range(2):
            buf = _io.StringIO()
            with contextlib.redirect_stdout(buf):
                code = main(argv)
            outs.append((code, buf.getvalue()))
        doc = json.loads(outs[0][1])
        if outs[0] != outs[1] or outs[0][0] != 0:
            return False, f"{argv[0]}: outputs differ between identical runs"
        if "config_hash" not in doc or "units" not in doc:
            return False, f"{argv[0]}: config hash or units missing"
    return True, "identical output, units and config hash for dirichlet, ko and simulate"


# ---------------------------------------------------------------------------
# Monte Carlo (full only)


def _mc_cfg(n, seed=20240607):
    from .simulate import SimConfig

    return SimConfig(h=1e-4, n_paths=n, rng_seed=seed)


def _mc_systems():
    return {"m=3": build_root_system("A1_product", d=1, k=1.0), "m=5": build_root_system("A1_product", d=2, k=0.75)}


def _generic_start(d, r=1.0):
    v = np.array([math.cos(0.3), math.sin(0.3), 0.2][:d])
    return 0.5 * r * v / np.linalg.norm(v)


@check("mc_simulator.exit_time_closed_form", level="full")
def _mc_exit():
    from .simulate import DomainSpec, exit_time_target, simulate_exit

    lines, ok = [], True
    for name, sys in _mc_systems().items():
        for x0 in (np.zeros(sys.d), _generic_start(sys.d)):
            cfg = _mc_cfg(100_000)
            b = simulate_exit(sys, x0, DomainSpec.centered_ball(1.0), cfg)
            s = b.summary(exit_time_target(sys, x0, 1.0))
            tol = 3 * s["stderr"] + 5 * cfg.h
            good = abs(s["deviation"]) <= tol and s["capped_fraction"] < 1e-3 and s["jump_norm_violations"] == 0
            ok &= good
            lines.append(f"{name} |x0|={np.linalg.norm(x0):.2f}: {s['mean_exit_time']:.5f} vs {s['target']:.5f} (tol {tol:.1e})")
    return ok, "; ".join(lines)


@check("mc_simulator.determinism", level="full")
def _mc_determinism():
    from .simulate import DomainSpec, simulate_exit

    sys = _mc_systems()["m=5"]
    D = DomainSpec.offset_ball((0.5, 0.3), 0.25)
    cfg = _mc_cfg(2000, seed=11)
    a = simulate_exit(sys, np.array([0.5, 0.3]), D, cfg)
    b = simulate_exit(sys, np.array([0.5, 0.3]), D, cfg)
    return a.identical_to(b), "two runs with the same seed are bit-identical" if a.identical_to(b) else "runs differ"


SUPPORT_CASES = {
    "centered_ball": ("centered_ball:1", (0.0, 0.0), 0.999),
    "offset_ball": ("offset_ball:0.25:0.5,0.3", (0.5, 0.3), 0.995),
    "half_ball": ("half_ball:1:0.921060994002885,0.389418342308650", (0.5105, 0.1747), 0.995),
}


@check("mc_simulator.support_fractions", level="full")
def _mc_support():
    from .simulate import DomainSpec, estimate_harmonic_support

    sys = _mc_systems()["m=5"]
    lines, ok = [], True
    for name, (dom, x0, need) in SUPPORT_CASES.items():
        rep, batch = estimate_harmonic_support(sys, np.array(x0), DomainSpec.parse(dom), _mc_cfg(10_000))
        good = rep.fraction >= need and int(batch.norm_violations.sum()) == 0
        ok &= good
        lines.append(f"{name}: {rep.fraction:.4f} (need {need})")
    return ok, "; ".join(lines)


@check("mc_simulator.jump_radius_invariance", level="full")
def _mc_jumps():
    from .simulate import DomainSpec, simulate_exit

    total, viol = 0, 0
    for sys in _mc_systems().values():
        b = simulate_exit(sys, np.zeros(sys.d), DomainSpec.centered_ball(1.0), _mc_cfg(20_000, seed=5))
        total += int(b.n_jumps.sum())
        viol += int(b.norm_violations.sum())
    return viol == 0 and total > 0, f"{viol} violations over {total} jumps"


@check("mc_simulator.drift_consistency", level="full")
def _mc_drift():
    from .simulate import DomainSpec, bessel_exit_times, simulate_exit

    lines, ok = [], True
    for name, sys in _mc_systems().items():
        cfg = _mc_cfg(100_000, seed=99)
        tb = bessel_exit_times(sys.m, 1.0, cfg)
        tp = simulate_exit(sys, np.zeros(sys.d), DomainSpec.centered_ball(1.0), cfg).tau
        target = 1.0 / (2 * sys.m)
        seb = tb.std(ddof=1) / math.sqrt(len(tb))
        sep = tp.std(ddof=1) / math.sqrt(len(tp))
        good = (abs(tb.mean() - target) <= 3 * seb + 5 * cfg.h and abs(tb.mean() - tp.mean()) <= 3 * math.hypot(seb, sep) + 5 * cfg.h)
        ok &= good
        lines.append(f"{name}: Bessel {tb.mean():.5f}, process {tp.mean():.5f}, closed form {target:.5f}")
    return ok, "; ".join(lines)


@check("mc_simulator.radial_law", level="full")
def _mc_radial_law():
    from .simulate import radial_law_sample

    sys = _mc_systems()["m=5"]
    rep = radial_law_sample(sys, 1.0, _mc_cfg(10_000))
    ok = rep.ks_statistic < rep.ks_critical_1pct and abs(rep.mean_scaled - sys.m / 2) <= 3 * rep.stderr
    return ok, f"KS {rep.ks_statistic:.4f} (1% critical {rep.ks_critical_1pct:.4f}); mean {rep.mean_scaled:.4f} ± {rep.stderr:.4f}"


# ---------------------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail, "seconds": round(self.seconds, 3)}


def run(level: str = "quick", only: list[str] | None = None, progress: Callable[[CheckResult], None] | None = None):
    """Run the registered checks; ``level='full'`` includes Monte Carlo."""
    results = []
    for name, (lvl, fn) in CHECKS.items():
        if lvl == "full" and level != "full":
            continue
        if only and not any(name.startswith(o) for o in only):
            continue
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failed invariant, reported by name
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        res = CheckResult(name, bool(ok), detail, time.perf_counter() - t0)
        results.append(res)
        if progress:
            progress(res)
    return results
