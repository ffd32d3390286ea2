"""Command line front end: ``dunkl-lab {ko, blowup, dirichlet, simulate, verify}``.

Every command accepts ``--config FILE`` (a JSON object whose keys are the
long option names with underscores); explicit flags override the file.
Exit codes: 0 success, 2 validation error, 3 mathematically empty result,
4 acceptance failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys as _sys

import numpy as np

from . import io, radial, semilinear
from .errors import DunklLabError, KOHoldsNoBlowup, ValidationError
from .phi import PhiSpec
from .roots import parse_system

EXIT_OK, EXIT_VALIDATION, EXIT_EMPTY, EXIT_ACCEPTANCE = 0, 2, 3, 4
DISAGREEMENT_TRIPWIRE = 1e-5


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}") from exc


# option name -> (default, type) per command; None default means "not set"
OPTIONS = {
    "ko": {"phi": (None, str), "a": (1.0, float), "out_csv": (None, str), "out_json": (None, str)},
    "blowup": {"phi": (None, str), "m": (None, float), "system": (None, str), "radius": (None, float),
               "a": (None, float), "seed_sweep": (None, str), "tol": (1e-7, float), "out_csv": (None, str),
               "out_json": (None, str)},
    "dirichlet": {"phi": (None, str), "m": (None, float), "system": (None, str), "radius": (1.0, float),
                  "c": (None, float), "method": ("both", str), "tol": (1e-10, float), "n_out": (2001, int),
                  "out_csv": (None, str), "out_json": (None, str)},
    "simulate": {"system": (None, str), "ball": (1.0, float), "domain": (None, str), "x0": (None, str),
                 "paths": (10_000, int), "seed": (0, int), "h": (1e-4, float), "t": (1.0, float),
                 "max_time": (100.0, float), "wall_guard": (1e-8, float), "jump_cap": (1_000_000, int),
                 "levy_rate_convention": ("generator", str), "exit_correction": ("bridge", str),
                 "backend": (None, str), "threads": (None, int), "tol": (None, float), "out_csv": (None, str),
                 "out_json": (None, str)},
    "verify": {"level": ("quick", str), "only": (None, str), "out_json": (None, str)},
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dunkl-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    for cmd, opts in OPTIONS.items():
        sp = sub.add_parser(cmd)
        if cmd == "simulate":
            sp.add_argument("mode", choices=["exit", "support", "radial-law"])
        if cmd == "verify":
            g = sp.add_mutually_exclusive_group()
            g.add_argument("--quick", dest="level", action="store_const", const="quick", default=None)
            g.add_argument("--full", dest="level", action="store_const", const="full")
            sp.add_argument("--only", default=None, help="comma-separated check-name prefixes")
            sp.add_argument("--out-json", dest="out_json", default=None)
        else:
            for name, (_, typ) in opts.items():
                sp.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None)
        sp.add_argument("--config", default=None, help="JSON file with option values")
    return p


def resolve(command: str, ns: argparse.Namespace) -> dict:
    """Defaults, overridden by the config file, overridden by flags."""
    opts = OPTIONS[command]
    cfg = {k: d for k, (d, _) in opts.items()}
    if ns.config:
        try:
            with open(ns.config) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {ns.config}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ValidationError("config must be a JSON object")
        unknown = set(doc) - set(opts) - {"command", "mode"}
        if unknown:
            raise ValidationError(f"unknown config fields: {sorted(unknown)}")
        for k, v in doc.items():
            if k in opts:
                cfg[k] = v if v is None else opts[k][1](v)
    for k in opts:
        v = getattr(ns, k, None)
        if v is not None:
            cfg[k] = v
    if command == "simulate":
        cfg["mode"] = ns.mode
    return cfg


def _need(cfg: dict, *names: str) -> None:
    missing = [n for n in names if cfg.get(n) is None]
    if missing:
        raise ValidationError("missing required option(s): " + ", ".join("--" + n.replace("_", "-") for n in missing))


def _resolve_m(cfg: dict) -> float:
    if cfg.get("m") is not None:
        m = float(cfg["m"])
        if not m > 2:
            raise ValidationError("m must exceed 2")
        return m
    if cfg.get("system"):
        return parse_system(cfg["system"]).m
    raise ValidationError("give --m or --system")


def _emit(doc: dict, cfg: dict, command: str) -> dict:
    public = {k: v for k, v in cfg.items() if not k.startswith("out_")}
    doc = {"command": command, **doc, "config": public, "config_hash": io.config_hash({"command": command, **public})}
    text = io.dumps(doc)
    if cfg.get("out_json"):
        io.write_text(cfg["out_json"], text + "\n")
    print(text)
    return doc


# ---------------------------------------------------------------------------


def cmd_ko(cfg: dict) -> int:
    _need(cfg, "phi")
    phi = PhiSpec.parse(cfg["phi"])
    rep = radial.ko_report(phi, float(cfg["a"]))
    doc = rep.to_dict()
    doc["phi"] = phi.to_dict()
    doc["entire_solution"] = radial.EXISTS if rep.classification == radial.KO_HOLDS else radial.NOT_EXISTS
    doc["units"] = {"integrals": "radius (dimensionless u-scale)"}
    if cfg.get("out_csv"):
        io.write_text(cfg["out_csv"], io.csv_table(
            ["a", "integral_from_zero", "integral_from_a", "classification"],
            [[rep.a, rep.integral_from_zero, rep.integral_from_a, rep.classification]]))
    _emit(doc, cfg, "ko")
    return EXIT_OK


def cmd_blowup(cfg: dict) -> int:
    _need(cfg, "phi")
    phi = PhiSpec.parse(cfg["phi"])
    m = _resolve_m(cfg)
    if radial.ko_classification(phi) == radial.KO_HOLDS:
        print("no boundary blow-up: KO holds", file=_sys.stderr)
        _emit({"classification": radial.KO_HOLDS, "message": "no boundary blow-up: KO holds", "m": m}, cfg, "blowup")
        return EXIT_EMPTY
    doc: dict = {"phi": phi.to_dict(), "m": m, "units": {"radius": "length", "u": "solution value"}}
    if cfg.get("seed_sweep"):
        seeds = _floats(cfg["seed_sweep"])
        if not seeds or any(a <= 0 for a in seeds):
            raise ValidationError("seed sweep needs positive seeds")
        table = []
        for a in sorted(seeds):
            bl = radial.blowup_radius(m, phi, a)
            table.append({"a": a, "R_a": bl.radius, "bracket": list(bl.bracket)})
        radii = [row["R_a"] for row in table]
        doc["sweep"] = table
        doc["monotone_nonincreasing"] = bool(all(x >= y for x, y in zip(radii, radii[1:])))
        if cfg.get("out_csv"):
            io.write_text(cfg["out_csv"], io.csv_table(["a", "R_a", "r_low", "r_high"],
                                                      [[r["a"], r["R_a"], *r["bracket"]] for r in table]))
        _emit(doc, cfg, "blowup")
        return EXIT_OK
    if cfg.get("radius") is not None:
        sol = radial.solve_blowup_problem(m, phi, float(cfg["radius"]), tol=float(cfg["tol"]))
    elif cfg.get("a") is not None:
        bl = radial.blowup_radius(m, phi, float(cfg["a"]))
        sol = radial.integrate_radial_ivp(m, phi, float(cfg["a"]), 1.05 * bl.radius)
    else:
        raise ValidationError("give --radius, --a or --seed-sweep")
    doc["seed"] = sol.seed
    doc["blowup"] = sol.blowup.to_dict() if sol.blowup else None
    doc["R_b_bracket"] = list(sol.blowup.bracket) if sol.blowup else None
    doc["profile_points"] = int(sol.grid.size)
    if cfg.get("out_csv"):
        io.write_text(cfg["out_csv"], sol.to_csv())
    _emit(doc, cfg, "blowup")
    return EXIT_OK


def cmd_dirichlet(cfg: dict) -> int:
    _need(cfg, "phi", "c")
    phi = PhiSpec.parse(cfg["phi"])
    m = _resolve_m(cfg)
    prob = semilinear.DirichletProblem(m, phi, float(cfg["radius"]), float(cfg["c"]))
    method = cfg["method"]
    if method not in ("picard", "shooting", "both"):
        raise ValidationError("method must be picard, shooting or both")
    sols = {}
    if method in ("picard", "both"):
        sols["picard"] = semilinear.picard_solve(prob, tol=float(cfg["tol"]), n_out=int(cfg["n_out"]))
    if method in ("shooting", "both"):
        sols["shooting"] = radial.solve_radial_dirichlet_shooting(m, phi, prob.r_ball, prob.c, n_out=int(cfg["n_out"]))
    doc: dict = {"problem": prob.to_dict(), "units": {"r": "length", "u": "solution value"}, "solutions": {}}
    for name, s in sols.items():
        rep = semilinear.verify_solution(prob, s)
        doc["solutions"][name] = {"u_center": float(s.values[0]), **rep.to_dict(),
                                  "iterations": s.meta.get("iterations")}
    code = EXIT_OK
    if method == "both":
        dist = semilinear.sup_distance(sols["picard"], sols["shooting"])
        doc["sup_disagreement"] = dist
        if dist > DISAGREEMENT_TRIPWIRE:
            code = EXIT_ACCEPTANCE
    if cfg.get("out_csv"):
        first = next(iter(sols.values()))
        io.write_text(cfg["out_csv"], first.to_csv())
    _emit(doc, cfg, "dirichlet")
    return code


def cmd_simulate(cfg: dict) -> int:
    from . import simulate as sim

    _need(cfg, "system")
    sys = parse_system(cfg["system"])
    sc = sim.SimConfig(h=float(cfg["h"]), n_paths=int(cfg["paths"]), rng_seed=int(cfg["seed"]),
                       max_time=float(cfg["max_time"]), wall_guard=float(cfg["wall_guard"]),
                       jump_cap=int(cfg["jump_cap"]), levy_rate_convention=cfg["levy_rate_convention"],
                       exit_correction=cfg["exit_correction"], backend=cfg.get("backend"), threads=cfg.get("threads"))
    doc: dict = {"system": sys.to_dict(), "m": sys.m, "mode": cfg["mode"],
                 "units": {"time": "process time (generator Δ_k)", "length": "euclidean"}}
    if cfg["mode"] == "radial-law":
        rep = sim.radial_law_sample(sys, float(cfg["t"]), sc)
        doc["radial_law"] = rep.to_dict()
        if cfg.get("out_csv"):
            io.write_text(cfg["out_csv"], io.csv_table(["path_id", "rho", "scaled"],
                                                      ([i, float(r), float(r * r / (4 * rep.t))] for i, r in enumerate(rep.samples))))
        _emit(doc, cfg, "simulate")
        return EXIT_OK
    D = sim.DomainSpec.parse(cfg["domain"]) if cfg.get("domain") else sim.DomainSpec.centered_ball(float(cfg["ball"]))
    x0 = np.array(_floats(cfg["x0"])) if cfg.get("x0") else (
        np.array(D.center) if D.kind == "offset_ball" else np.zeros(sys.d))
    doc["domain"] = D.to_dict()
    doc["x0"] = x0.tolist()
    if cfg["mode"] == "support":
        tol = cfg.get("tol")
        rep, batch = sim.estimate_harmonic_support(sys, x0, D, sc, tol=None if tol is None else float(tol))
        doc["support"] = rep.to_dict()
        doc["summary"] = batch.summary()
    else:
        batch = sim.simulate_exit(sys, x0, D, sc)
        target = sim.exit_time_target(sys, x0, D.radius) if D.kind == "centered_ball" else None
        doc["summary"] = batch.summary(target)
    if cfg.get("out_csv"):
        io.write_text(cfg["out_csv"], io.exit_batch_csv(batch))
    _emit(doc, cfg, "simulate")
    return EXIT_OK


def cmd_verify(cfg: dict) -> int:
    from . import verify

    level = cfg.get("level") or "quick"
    if level not in ("quick", "full"):
        raise ValidationError("level must be quick or full")
    only = [s.strip() for s in cfg["only"].split(",")] if cfg.get("only") else None

    def show(res):
        print(f"[{'PASS' if res.passed else 'FAIL'}] {res.name} ({res.seconds:.1f}s): {res.detail}", flush=True)

    results = verify.run(level, only, progress=show)
    failed = [r.name for r in results if not r.passed]
    doc = {"level": level, "passed": not failed, "failed": failed, "checks": [r.to_dict() for r in results]}
    public = {"level": level, "only": cfg.get("only")}
    doc["config_hash"] = io.config_hash({"command": "verify", **public})
    if cfg.get("out_json"):
        io.write_text(cfg["out_json"], io.dumps(doc) + "\n")
    print(("all %d checks passed" % len(results)) if not failed else ("FAILED: " + ", ".join(failed)))
    return EXIT_OK if not failed else EXIT_ACCEPTANCE


COMMANDS = {"ko": cmd_ko, "blowup": cmd_blowup, "dirichlet": cmd_dirichlet, "simulate": cmd_simulate, "verify": cmd_verify}


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        cfg = resolve(ns.command, ns)
        return COMMANDS[ns.command](cfg)
    except KOHoldsNoBlowup as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_EMPTY
    except ValidationError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_VALIDATION
    except DunklLabError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_VALIDATION if isinstance(exc, ValueError) else EXIT_EMPTY


if __name__ == "__main__":
    raise SystemExit(main())
