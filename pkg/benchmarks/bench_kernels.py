"""Compare the compiled and pure-Python kernel backends on realistic workloads.

    python benchmarks/bench_kernels.py [--repeat N] [--json out.json]

Workloads:
  dtw_many    one 15-point track against 25 candidate trajectories (one slot)
  dtw_long    a single 120 x 120 alignment
  build_tree  one unbounded CART tree on 4000 rows x 40 features
"""

from __future__ import annotations

import argparse
import json
import sys
import timeit

import numpy as np

from leosched import kernels


def workloads(seed: int = 0):
    rng = np.random.default_rng(seed)
    track = np.cumsum(rng.normal(size=(15, 2)), axis=0)
    cands = np.cumsum(rng.normal(size=(25, 15, 2)), axis=1)
    a = np.cumsum(rng.normal(size=(120, 2)), axis=0)
    b = np.cumsum(rng.normal(size=(120, 2)), axis=0)
    X = rng.integers(0, 6, size=(4000, 40)).astype(float)
    y = (X[:, :3].argmax(axis=1) + (rng.random(4000) < 0.1)).astype(np.int32) % 4
    sample = rng.integers(0, 4000, size=4000)
    return {
        "dtw_many": lambda: kernels.dtw_many(track, cands),
        "dtw_long": lambda: kernels.dtw_distance(a, b),
        "build_tree": lambda: kernels.build_tree(X, y, sample, 4, -1, 2, 7, 12345),
    }


def bench(repeat: int) -> dict:
    results = {}
    previous = kernels.BACKEND
    try:
        for backend in kernels.available_backends():
            kernels.use_backend(backend)
            for name, fn in workloads().items():
                timer = timeit.Timer(fn)
                number, _ = timer.autorange()
                best = min(timer.repeat(repeat=repeat, number=number)) / number
                results.setdefault(name, {})[backend] = best
    finally:
        kernels.use_backend(previous)
    return results


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5, help="timing repeats; the best is reported (default 5)")
    p.add_argument("--json", help="also write the timings to this JSON file")
    args = p.parse_args(argv)
    if "compiled" not in kernels.available_backends():
        print("compiled kernels are not built; only the Python backend is timed", file=sys.stderr)
    results = bench(args.repeat)

    def fmt(v):
        return f"{v * 1e3:10.3f}ms" if v is not None else f"{'-':>12}"

    print(f"{'workload':<12} {'python':>12} {'compiled':>12} {'speedup':>9}")
    for name, row in results.items():
        py, c = row.get("python"), row.get("compiled")
        speed = f"{py / c:8.1f}x" if py and c else "       -"
        print(f"{name:<12} {fmt(py)} {fmt(c)} {speed}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(results, fh, indent=2, sort_keys=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
