"""Monte Carlo simulation of the Dunkl process.

The process generated by ``Δ_k`` is a diffusion ``dX = b(X) dt + √2 dW``
with drift ``b(x) = 2 Σ_{α∈R+} k(α) α/⟨α,x⟩`` plus jumps ``x -> σ_α x``
at rate ``λ_α(x) = k(α)|α|²/⟨α,x⟩²`` per positive root (the
``generator`` convention; ``printed_lvk`` drops the ``|α|²`` factor).

Paths are advanced by Euler-Maruyama sub-steps ``h' = min(h, h_safe)``
where ``h_safe`` keeps every ``⟨α,x⟩`` from moving by more than half its
value under the drift, and keeps the noise increment along each root
below ``|⟨α,x⟩|/2`` (standard deviation).  Jumps are thinned with the
intensity frozen at the start of the sub-step, at most one per sub-step.
The per-path loop lives in the compiled core (``_core.pyx``) with a
bit-identical Python twin (``_core_py.py``).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from . import _backend
from .errors import NearHyperplane, OutsideBall, ValidationError, WallContact
from .green import KernelContext, expected_exit_time_ball
from .roots import RootSystemData, enumerate_group, reflect

STATUS = {0: "exit", 1: "instant", 2: "horizon", 3: "jump_cap", 4: "wall_abort", 5: "fixed_time"}
RATE_CONVENTIONS = ("generator", "printed_lvk")
EXIT_CORRECTIONS = ("bridge", "none")


@dataclass(frozen=True)
class SimConfig:
    h: float = 1e-4
    n_paths: int = 10_000
    rng_seed: int = 0
    max_time: float = 100.0
    wall_guard: float = 1e-8
    jump_cap: int = 1_000_000
    levy_rate_convention: str = "generator"
    exit_correction: str = "bridge"
    noise_factor: float = 1.0 / 16.0
    backend: str | None = None
    threads: int | None = None

    def __post_init__(self):
        if not self.h > 0:
            raise ValidationError("step h must be positive")
        if not self.wall_guard > 0:
            raise ValidationError("wall_guard must be positive")
        if self.n_paths < 0:
            raise ValidationError("n_paths must be nonnegative")
        if not self.max_time > 0:
            raise ValidationError("max_time must be positive")
        if self.jump_cap < 1:
            raise ValidationError("jump_cap must be at least 1")
        if not 0 <= self.rng_seed < 2**64:
            raise ValidationError("rng_seed must be a 64-bit unsigned integer")
        if self.levy_rate_convention not in RATE_CONVENTIONS:
            raise ValidationError(f"levy_rate_convention must be one of {sorted(RATE_CONVENTIONS)}")
        if self.exit_correction not in EXIT_CORRECTIONS:
            raise ValidationError(f"exit_correction must be one of {EXIT_CORRECTIONS}")
        if not self.noise_factor > 0:
            raise ValidationError("noise_factor must be positive")
        if self.backend not in (None, "compiled", "python"):
            raise ValidationError("backend must be 'compiled' or 'python'")

    def to_dict(self) -> dict:
        return asdict(self)

    def replace(self, **kw) -> "SimConfig":
        d = self.to_dict()
        d.update(kw)
        return SimConfig(**d)


# ---------------------------------------------------------------------------
# domains

DOMAIN_CODES = {"centered_ball": 1, "offset_ball": 2, "half_ball": 3}


@dataclass(frozen=True)
class DomainSpec:
    kind: str
    radius: float
    center: tuple[float, ...] = ()
    normal: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in DOMAIN_CODES:
            raise ValidationError(f"unknown domain kind {self.kind!r}")
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValidationError("domain radius must be positive")
        if self.kind == "offset_ball" and not self.center:
            raise ValidationError("offset_ball needs a center")
        if self.kind == "half_ball":
            n = np.asarray(self.normal, dtype=float)
            if n.size == 0 or not np.linalg.norm(n) > 0:
                raise ValidationError("half_ball needs a nonzero normal")
            object.__setattr__(self, "normal", tuple(n / np.linalg.norm(n)))

    @classmethod
    def centered_ball(cls, r: float) -> "DomainSpec":
        return cls("centered_ball", float(r))

    @classmethod
    def offset_ball(cls, center, r: float) -> "DomainSpec":
        return cls("offset_ball", float(r), center=tuple(float(c) for c in center))

    @classmethod
    def half_ball(cls, r: float, normal) -> "DomainSpec":
        return cls("half_ball", float(r), normal=tuple(float(c) for c in normal))

    @classmethod
    def parse(cls, text: str) -> "DomainSpec":
        """``centered_ball:r``, ``offset_ball:r:c1,c2,..``, ``half_ball:r:n1,n2,..``."""
        parts = text.strip().split(":")
        try:
            if parts[0] == "centered_ball" and len(parts) == 2:
                return cls.centered_ball(float(parts[1]))
            if parts[0] == "offset_ball" and len(parts) == 3:
                return cls.offset_ball([float(v) for v in parts[2].split(",")], float(parts[1]))
            if parts[0] == "half_ball" and len(parts) == 3:
                return cls.half_ball(float(parts[1]), [float(v) for v in parts[2].split(",")])
        except ValueError as exc:
            raise ValidationError(f"malformed domain {text!r}") from exc
        raise ValidationError(f"malformed domain {text!r}")

    @property
    def code(self) -> int:
        return DOMAIN_CODES[self.kind]

    def check_dimension(self, d: int) -> None:
        if self.kind == "offset_ball" and len(self.center) != d:
            raise ValidationError(f"center has dimension {len(self.center)}, system has {d}")
        if self.kind == "half_ball" and len(self.normal) != d:
            raise ValidationError(f"normal has dimension {len(self.normal)}, system has {d}")

    def gap(self, x) -> np.ndarray:
        """Signed margin: positive inside, ``<= 0`` outside (the distance to ``∂D`` for balls)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "offset_ball":
            return self.radius - np.linalg.norm(x - np.asarray(self.center), axis=-1)
        g = self.radius - np.linalg.norm(x, axis=-1)
        if self.kind == "half_ball":
            g = np.minimum(g, x @ np.asarray(self.normal))
        return g

    def contains(self, x) -> np.ndarray:
        return self.gap(x) > 0

    def distance_to_closure(self, x) -> np.ndarray:
        """Euclidean distance from ``x`` to the closed domain."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == "centered_ball":
            return np.maximum(np.linalg.norm(x, axis=1) - self.radius, 0.0)
        if self.kind == "offset_ball":
            return np.maximum(np.linalg.norm(x - np.asarray(self.center), axis=1) - self.radius, 0.0)
        n = np.asarray(self.normal)
        xn = x @ n
        p = x - np.minimum(xn, 0.0)[:, None] * n  # projection onto the half space
        pn = np.linalg.norm(p, axis=1)
        rim = np.where(pn > 0, self.radius / np.where(pn > 0, pn, 1.0), 0.0)[:, None] * p
        far = pn > self.radius
        q = np.where(far[:, None], rim, p)
        return np.linalg.norm(x - q, axis=1)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "radius": self.radius}
        if self.center:
            out["center"] = list(self.center)
        if self.normal:
            out["normal"] = list(self.normal)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "DomainSpec":
        allowed = {"kind", "radius", "center", "normal"}
        extra = set(d) - allowed
        if extra:
            raise ValidationError(f"unknown domain fields: {sorted(extra)}")
        return cls(d["kind"], float(d["radius"]), tuple(d.get("center", ())), tuple(d.get("normal", ())))


# ---------------------------------------------------------------------------
# process coefficients


def _active(sys: RootSystemData) -> tuple[np.ndarray, np.ndarray]:
    keep = sys.multiplicity > 0
    return np.ascontiguousarray(sys.positive_roots[keep], dtype=float), np.ascontiguousarray(sys.multiplicity[keep], dtype=float)


def drift(sys: RootSystemData, x) -> np.ndarray:
    """``b(x) = Σ_{α∈R} k(α) α/⟨α,x⟩ = 2 Σ_{α∈R+} k(α) α/⟨α,x⟩``."""
    x = np.asarray(x, dtype=float)
    roots, kk = _active(sys)
    s = roots @ x
    if np.any(s == 0):
        raise NearHyperplane("drift is singular on a hyperplane with k > 0")
    return (2.0 * kk / s) @ roots


def jump_intensities(sys: RootSystemData, x, convention: str = "generator") -> np.ndarray:
    """Rates ``λ_α(x)`` for every positive root (zero where ``k(α) = 0``)."""
    x = np.asarray(x, dtype=float)
    s = sys.positive_roots @ x
    a2 = np.sum(sys.positive_roots**2, axis=1)
    if convention not in RATE_CONVENTIONS:
        raise ValidationError(f"unknown convention {convention!r}")
    factor = a2 if convention == "generator" else np.ones_like(a2)
    with np.errstate(divide="ignore"):
        lam = np.where(sys.multiplicity > 0, sys.multiplicity * factor / (s * s), 0.0)
    return lam


def _rate_factor(sys: RootSystemData, convention: str) -> float:
    # roots are normalised to |α|² = 2, so the generator rate is 2k/⟨α,x⟩²
    return 2.0 if convention == "generator" else 1.0


def safe_step(sys: RootSystemData, x, h: float, noise_factor: float = 1.0 / 16.0) -> float:
    """Sub-step ``min(h, h_safe(x))`` used by the simulator."""
    roots, kk = _active(sys)
    s = roots @ np.asarray(x, dtype=float)
    b = (2.0 * kk / s) @ roots
    bi = np.abs(roots @ b)
    with np.errstate(divide="ignore"):
        caps = np.where(bi > 0, 0.5 * np.abs(s) / bi, np.inf)
    return float(min(h, caps.min(initial=np.inf), (noise_factor * s * s).min(initial=np.inf)))


def step_process(sys: RootSystemData, state, h: float, rng: np.random.Generator, cfg: SimConfig | None = None):
    """One sub-step from ``state``.

    Returns ``(new_state, jumped, h_used)``.  Uses a numpy generator and is
    meant for interactive use and tests; bulk simulation goes through the
    path kernels, which implement the same scheme.
    """
    cfg = cfg or SimConfig(h=h)
    x = np.asarray(state, dtype=float)
    roots, kk = _active(sys)
    s = roots @ x
    if np.any(np.abs(s) < cfg.wall_guard):
        raise NearHyperplane("state lies on a hyperplane with k > 0")
    b = (2.0 * kk / s) @ roots
    hh = safe_step(sys, x, h, cfg.noise_factor)
    tries = halvings = 0
    while True:
        y = x + hh * b + math.sqrt(2.0 * hh) * rng.standard_normal(x.shape)
        sy = roots @ y
        if np.all(np.abs(sy) >= cfg.wall_guard) and np.all((sy > 0) == (s > 0)):
            break
        tries += 1
        if tries >= 2:
            halvings += 1
            if halvings > 20:
                raise WallContact("step rejected after 20 halvings")
            hh *= 0.5
    rf = _rate_factor(sys, cfg.levy_rate_convention)
    for alpha, k, si in zip(roots, kk, s):
        if rng.random() < -math.expm1(-rf * k / (si * si) * hh):
            return reflect(alpha, y), True, hh
    return y, False, hh


# ---------------------------------------------------------------------------
# samples


@dataclass(frozen=True)
class ExitSample:
    exit_time: float
    exit_point: tuple[float, ...]
    n_jumps: int
    capped: bool


@dataclass
class ExitBatch:
    """Column store of exit samples, ordered by path index."""

    tau: np.ndarray
    points: np.ndarray
    n_jumps: np.ndarray
    status: np.ndarray
    overshoot: np.ndarray
    last_step: np.ndarray
    wall_events: np.ndarray
    norm_violations: np.ndarray
    steps: np.ndarray
    first_index: int = 0
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_arrays(cls, X, F, I, first_index=0, meta=None) -> "ExitBatch":
        return cls(
            tau=F[:, 0].copy(),
            points=X,
            n_jumps=I[:, 1].copy(),
            status=I[:, 0].copy(),
            overshoot=F[:, 1].copy(),
            last_step=F[:, 2].copy(),
            wall_events=I[:, 2].copy(),
            norm_violations=I[:, 3].copy(),
            steps=I[:, 4].copy(),
            first_index=first_index,
            meta=dict(meta or {}),
        )

    @property
    def capped(self) -> np.ndarray:
        return np.isin(self.status, (2, 3, 4))

    def __len__(self) -> int:
        return len(self.tau)

    def __getitem__(self, i: int) -> ExitSample:
        return ExitSample(float(self.tau[i]), tuple(self.points[i]), int(self.n_jumps[i]), bool(self.capped[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def identical_to(self, other: "ExitBatch") -> bool:
        names = ("tau", "points", "n_jumps", "status", "overshoot", "last_step", "wall_events", "norm_violations", "steps")
        return all(np.array_equal(getattr(self, n), getattr(other, n)) for n in names)

    def summary(self, target: float | None = None) -> dict:
        ok = ~self.capped
        tau = self.tau[ok]
        n = int(ok.sum())
        mean = float(tau.mean()) if n else math.nan
        se = float(tau.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan
        out = {
            "n_paths": len(self),
            "mean_exit_time": mean,
            "stderr": se,
            "capped_fraction": float(self.capped.mean()) if len(self) else 0.0,
            "status_counts": {STATUS[int(s)]: int(c) for s, c in zip(*np.unique(self.status, return_counts=True))},
            "mean_jumps": float(self.n_jumps.mean()) if len(self) else 0.0,
            "wall_events": int(self.wall_events.sum()),
            "jump_norm_violations": int(self.norm_violations.sum()),
            "max_overshoot": float(self.overshoot.max(initial=0.0)),
            "mean_substeps": float(self.steps.mean()) if len(self) else 0.0,
        }
        if target is not None:
            out["target"] = target
            out["deviation"] = mean - target
        return out


def _run(sys, x0, domain_code, radius, center, normal, t_fixed, exact, cfg: SimConfig, n_paths=None, first_index=0):
    roots, kk = _active(sys)
    d = sys.d
    core = _backend.get(cfg.backend)
    threads = cfg.threads or _backend.n_threads()
    n = cfg.n_paths if n_paths is None else n_paths
    return core.simulate_paths(
        np.ascontiguousarray(roots.reshape(len(kk), d)),
        kk,
        _rate_factor(sys, cfg.levy_rate_convention),
        float(cfg.h),
        float(cfg.max_time),
        float(cfg.wall_guard),
        int(cfg.jump_cap),
        int(cfg.rng_seed),
        np.ascontiguousarray(x0, dtype=float),
        int(exact),
        int(domain_code),
        np.ascontiguousarray(center, dtype=float),
        float(radius),
        np.ascontiguousarray(normal, dtype=float),
        float(t_fixed),
        int(cfg.exit_correction == "bridge"),
        float(cfg.noise_factor),
        int(first_index),
        int(n),
        int(threads),
    )


def _check_start(sys: RootSystemData, x0: np.ndarray, cfg: SimConfig) -> bool:
    """``True`` when the path must start from the exact law at the origin."""
    if x0.shape != (sys.d,):
        raise ValidationError(f"start point must have dimension {sys.d}")
    if not np.any(x0):
        return True
    roots, _ = _active(sys)
    if np.any(np.abs(roots @ x0) < cfg.wall_guard):
        raise NearHyperplane("start point lies on a hyperplane with k > 0 (only the origin is supported there)")
    return False


def simulate_exit(sys: RootSystemData, x0, D: DomainSpec, cfg: SimConfig, first_index: int = 0) -> ExitBatch:
    """Exit samples from ``D`` for ``cfg.n_paths`` paths started at ``x0``.

    A start at the origin is drawn from the exact law of ``X_h``; a start on
    ``∂D`` exits immediately with ``τ = 0``.  Paths hitting ``max_time`` or
    ``jump_cap``, or aborted at a wall, are flagged as capped.
    """
    x0 = np.asarray(x0, dtype=float)
    D.check_dimension(sys.d)
    exact = _check_start(sys, x0, cfg)
    g = float(D.gap(x0))
    if g < -1e-12:
        raise OutsideBall("start point lies outside the domain")
    d = sys.d
    center = np.asarray(D.center) if D.center else np.zeros(d)
    normal = np.asarray(D.normal) if D.normal else np.zeros(d)
    X, F, I = _run(sys, x0, D.code, D.radius, center, normal, 0.0, exact, cfg, first_index=first_index)
    meta = {"domain": D.to_dict(), "x0": list(map(float, x0)), "config": cfg.to_dict(), "system": sys.to_dict(),
            "backend": _backend.NAME if cfg.backend is None else cfg.backend}
    return ExitBatch.from_arrays(X, F, I, first_index, meta)


def exit_time_target(sys: RootSystemData, x0, r: float) -> float:
    """Closed-form mean exit time from the centred ball."""
    return expected_exit_time_ball(KernelContext(sys.m), r, float(np.linalg.norm(x0)))


# ---------------------------------------------------------------------------
# support of the exit distribution


def default_support_tol(h: float) -> float:
    return 2.0 * math.sqrt(h)


def orbit_distance(group, D: DomainSpec, Z) -> np.ndarray:
    """``min_w dist(w^{-1} z, D̄)`` for each row of ``Z``."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    best = np.full(len(Z), np.inf)
    for g in group:
        # w^{-1} = w^T for orthogonal w
        best = np.minimum(best, D.distance_to_closure(Z @ g.matrix))
    return best


def gamma_D(sys: RootSystemData, D: DomainSpec, z, tol: float | None = None, group=None, h: float = 1e-4) -> bool:
    """``True`` iff ``z`` lies in ``Γ_D`` up to ``tol``.

    ``z`` must not be strictly inside ``D`` (margin larger than ``tol``) and
    some ``w^{-1} z`` must lie within ``tol`` of ``D̄``.
    """
    tol = default_support_tol(h) if tol is None else tol
    group = enumerate_group(sys) if group is None else group
    z = np.asarray(z, dtype=float)
    if float(D.gap(z)) > tol:
        return False
    return bool(orbit_distance(group, D, z)[0] <= tol)


@dataclass
class SupportReport:
    fraction: float
    n_paths: int
    n_landed: int
    tol: float
    worst_distance: float
    max_overshoot: float
    capped_fraction: float
    inside_count: int

    def to_dict(self) -> dict:
        return asdict(self)


def support_report(sys: RootSystemData, D: DomainSpec, batch: ExitBatch, tol: float) -> SupportReport:
    group = enumerate_group(sys)
    pts = batch.points
    dist = orbit_distance(group, D, pts)
    inside = D.gap(pts) > tol
    landed = (dist <= tol) & ~inside & ~batch.capped
    exited = ~batch.capped
    return SupportReport(
        fraction=float(landed.mean()) if len(batch) else math.nan,
        n_paths=len(batch),
        n_landed=int(landed.sum()),
        tol=tol,
        worst_distance=float(dist[exited].max(initial=0.0)),
        max_overshoot=float(batch.overshoot.max(initial=0.0)),
        capped_fraction=float(batch.capped.mean()) if len(batch) else 0.0,
        inside_count=int(inside.sum()),
    )


def estimate_harmonic_support(sys: RootSystemData, x0, D: DomainSpec, cfg: SimConfig, tol: float | None = None):
    """Fraction of exit points landing in ``Γ_D``; returns ``(report, batch)``."""
    tol = default_support_tol(cfg.h) if tol is None else tol
    batch = simulate_exit(sys, x0, D, cfg)
    return support_report(sys, D, batch, tol), batch


# ---------------------------------------------------------------------------
# radial law from the origin


@dataclass
class RadialLawReport:
    t: float
    m: float
    samples: np.ndarray
    mean_scaled: float
    stderr: float
    ks_statistic: float
    ks_pvalue: float
    ks_critical_1pct: float
    jump_norm_violations: int
    wall_aborts: int

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("samples")
        out["target_mean"] = self.m / 2.0
        out["n_paths"] = len(self.samples)
        return out


def radial_law_sample(sys: RootSystemData, t: float, cfg: SimConfig) -> RadialLawReport:
    """``|X_t|`` from the origin, with ``|X_t|²/(4t)`` tested against ``Gamma(m/2, 1)``."""
    if t < 100 * cfg.h:
        raise ValidationError("t must be at least 100 h")
    d = sys.d
    X, F, I = _run(sys, np.zeros(d), 0, 1.0, np.zeros(d), np.zeros(d), t, True, cfg)
    rho = np.linalg.norm(X, axis=1)
    scaled = rho**2 / (4.0 * t)
    n = len(scaled)
    ks = stats.kstest(scaled, stats.gamma(sys.m / 2.0).cdf)
    return RadialLawReport(
        t=t,
        m=sys.m,
        samples=rho,
        mean_scaled=float(scaled.mean()),
        stderr=float(scaled.std(ddof=1) / math.sqrt(n)),
        ks_statistic=float(ks.statistic),
        ks_pvalue=float(ks.pvalue),
        ks_critical_1pct=float(stats.kstwo.ppf(0.99, n)),
        jump_norm_violations=int(I[:, 3].sum()),
        wall_aborts=int(np.sum(I[:, 0] == 4)),
    )


# ---------------------------------------------------------------------------
# independent radial code path


def bessel_exit_times(m: float, r: float, cfg: SimConfig) -> np.ndarray:
    """Exit times of the ``m``-dimensional Bessel process from ``[0, r)``, started at 0.

    Simulates ``dρ = (m-1)/ρ dt + √2 dW`` directly; used as a cross-check
    of the drift of the full process.
    """
    core = _backend.get(cfg.backend)
    out = core.bessel_exit_times(float(m), float(r), float(cfg.h), float(cfg.max_time), float(cfg.wall_guard),
                                 int(cfg.exit_correction == "bridge"), float(cfg.noise_factor), int(cfg.rng_seed), 0,
                                 int(cfg.n_paths), int(cfg.threads or _backend.n_threads()))
    return out[:, 0]
