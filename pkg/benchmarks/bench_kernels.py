#!/usr/bin/env python3
"""Time each kernel under the numba and numpy backends.

Checks that both backends give the same answer, then reports the median
wall-clock time of each. The numba timings exclude the first (compiling) call.

Usage:
    python3 benchmarks/bench_kernels.py [--repeats R] [--seed S]
"""
from __future__ import annotations

import argparse
import statistics
import time

import numpy as np
from scipy.spatial.distance import cdist

from chaining_lab import _accel, kernels


def _median_time(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return statistics.median(times)


def _cases(rng):
    pts = rng.standard_normal((400, 3))
    big = cdist(pts, pts)
    u = np.abs(rng.standard_normal(100_000))
    for n in (8, 10, 12):
        small = cdist(pts[:n], pts[:n])
        yield f"minmax_partition n={n}", lambda d=small: kernels.minmax_partition(d, 4)
    yield "worst_triangle n=400", lambda: kernels.worst_triangle(big)
    yield "orlicz_criterion N=1e5", lambda: kernels.orlicz_criterion(u, 2.0, 3.0)
    yield "orlicz_bisect N=1e5", lambda: kernels.orlicz_bisect(u, 2.0, 0.25, 64.0, 1e-9)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if not _accel.HAS_NUMBA:
        print("numba is not installed; only the numpy backend is available")
    backends = ["numpy", "numba"] if _accel.HAS_NUMBA else ["numpy"]
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<26}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    before = _accel.backend()
    try:
        for name, fn in _cases(rng):
            timings, results = {}, {}
            for b in backends:
                _accel.set_backend(b)
                results[b] = fn()  # warm-up; compiles under numba
                timings[b] = _median_time(fn, args.repeats)
            if len(backends) == 2:
                a, c = results["numpy"], results["numba"]
                same = np.allclose(a[0], c[0], rtol=1e-12) if isinstance(a, tuple) else np.isclose(a, c, rtol=1e-9)
                if not same:
                    raise SystemExit(f"backends disagree on {name}: {a!r} vs {c!r}")
            speed = timings["numpy"] / timings["numba"] if "numba" in timings else float("nan")
            print(f"{name:<26}" + "".join(f"{timings[b] * 1e3:>10.2f}ms" for b in backends) + f"{speed:>9.1f}x")
    finally:
        _accel.set_backend(before)


if __name__ == "__main__":
    main()
