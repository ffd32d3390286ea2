"""Compiled path kernel against the pure-Python fallback.

Both backends run the same paths (same seed, same path indices) and must
return bit-identical batches; the script reports wall time and paths per
second for each and the speed-up.

    python3 benchmarks/bench_mc.py --paths 200 --h 1e-3
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from dunkl_lab.roots import parse_system
from dunkl_lab.simulate import DomainSpec, SimConfig, simulate_exit


def _time(fn, repeat: int):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--system", default="a1xa1:0.75")
    p.add_argument("--domain", default="centered_ball:1")
    p.add_argument("--paths", type=int, default=200)
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--threads", type=int, default=1)
    args = p.parse_args(argv)

    sys = parse_system(args.system)
    D = DomainSpec.parse(args.domain)
    x0 = np.array(D.center) if D.kind == "offset_ball" else np.zeros(sys.d)
    cfg = SimConfig(h=args.h, n_paths=args.paths, rng_seed=args.seed, threads=args.threads)

    rows = {}
    batches = {}
    for name in ("compiled", "python"):
        try:
            secs, batch = _time(lambda: simulate_exit(sys, x0, D, cfg.replace(backend=name)), args.repeat)
        except ImportError:
            print(f"{name}: unavailable")
            continue
        batches[name] = batch
        rows[name] = {"seconds": secs, "paths_per_second": args.paths / secs, "mean_substeps": float(batch.steps.mean())}
        print(f"{name:9s} {secs:9.3f} s  {args.paths / secs:12.1f} paths/s  ({batch.steps.mean():.0f} sub-steps per path)")
    if len(batches) == 2:
        same = batches["compiled"].identical_to(batches["python"])
        speedup = rows["python"]["seconds"] / rows["compiled"]["seconds"]
        print(f"speed-up {speedup:.1f}x, outputs bit-identical: {same}")
        rows["speedup"] = speedup
        rows["identical"] = same
    print(json.dumps({"config": vars(args), "results": rows}, indent=2))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
