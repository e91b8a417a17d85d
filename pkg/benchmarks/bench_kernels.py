#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Run from the repository root:

    python benchmarks/bench_kernels.py [--repeat N]

Each kernel is timed on a representative hot-path workload; the table shows
the per-call time of both backends and the speedup. The compiled backend
must be built (pip install -e .) to appear.
"""

from __future__ import annotations

import argparse
import random
import time

from leads_kit._kernels import backends


def timeit(func, args, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        func(*args)
        best = min(best, time.perf_counter() - start)
    return best


def build_workloads(rng: random.Random):
    n = 200_000
    values = [rng.uniform(-100.0, 100.0) for _ in range(n)]
    widths = [rng.uniform(0.01, 0.1) for _ in range(n)]

    ts = []
    t = 0.0
    for _ in range(n):
        t += rng.uniform(0.01, 0.05)
        ts.append(t)
    speeds = [rng.uniform(0.0, 120.0) for _ in range(n)]
    accels = [rng.uniform(-5.0, 5.0) for _ in range(n)]

    lats = [43.95 + rng.uniform(-0.01, 0.01) for _ in range(n)]
    lons = [-79.30 + rng.uniform(-0.01, 0.01) for _ in range(n)]

    return {
        "compress_extend (200k samples, cap 32)": (
            "compress_extend",
            ([], [], values, widths, 32),
        ),
        "dropout_keep (200k samples)": ("dropout_keep", (ts, speeds, accels, 1.5)),
        "haversine_steps (200k fixes)": ("haversine_steps", (lats, lons)),
        "compress_round (200k entries)": ("compress_round", (values, widths)),
    }


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3, help="best-of-N timing")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    impls = backends()
    if "native" not in impls:
        print("note: compiled extension not built; only the pure backend is timed")

    workloads = build_workloads(random.Random(args.seed))
    name_width = max(len(k) for k in workloads)
    header = f"{'workload':<{name_width}}  {'pure':>10}  {'native':>10}  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for label, (func_name, call_args) in workloads.items():
        timings = {}
        for backend_name, module in impls.items():
            timings[backend_name] = timeit(getattr(module, func_name), call_args, args.repeat)
        pure_ms = timings["pure"] * 1000.0
        if "native" in timings:
            native_ms = timings["native"] * 1000.0
            speedup = timings["pure"] / timings["native"]
            print(f"{label:<{name_width}}  {pure_ms:>8.1f}ms  {native_ms:>8.1f}ms  {speedup:>7.1f}x")
        else:
            print(f"{label:<{name_width}}  {pure_ms:>8.1f}ms  {'-':>10}  {'-':>8}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
