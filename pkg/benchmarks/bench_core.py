#!/usr/bin/env python3
"""Benchmark the leave-one-out scoring kernel: compiled vs pure numpy.

The kernel is the hot path of hypothesis search (one call per candidate
family per grid line). Shapes below mirror real search workloads: 60
hypotheses on 5-point lines, and small candidate sets on 25-point grids.

Usage: python benchmarks/bench_core.py [repeats]
"""

import sys
import time

import numpy as np

from perfprior._core import _fallback, column_scaled

try:
    from perfprior._core import _fitcore
except ImportError:
    _fitcore = None


def workloads(rng):
    line = rng.uniform(1.0, 1e4, size=(59, 5, 2))
    line_y = rng.uniform(0.1, 10.0, size=5)
    grid = rng.uniform(1.0, 1e8, size=(7, 25, 3))
    grid_y = rng.uniform(0.1, 10.0, size=25)
    wide = rng.uniform(1.0, 1e4, size=(64, 25, 4))
    return [
        ("single-param line (59 x 5 x 2)", line, line_y),
        ("multi candidates (7 x 25 x 3)", grid, grid_y),
        ("wide family     (64 x 25 x 4)", wide, grid_y),
    ]


def bench(fn, a, y, repeats):
    fn(a, y)  # warm up
    start = time.perf_counter()
    for _ in range(repeats):
        fn(a, y)
    return (time.perf_counter() - start) / repeats


def main():
    repeats = int(sys.argv[1]) if len(sys.argv) > 1 else 200
    rng = np.random.default_rng(0)
    backends = [("fallback", _fallback.loo_cv_batch)]
    if _fitcore is not None:
        backends.append(("compiled", _fitcore.loo_cv_batch))
    else:
        print("extension not built; benchmarking the fallback only")
    print(f"{'workload':<32} " + " ".join(f"{name:>12}" for name, _ in backends)
          + ("      speedup" if len(backends) == 2 else ""))
    for label, a, y in workloads(rng):
        scaled, _ = column_scaled(a)
        times = [bench(fn, scaled, y, repeats) for _, fn in backends]
        scores = [fn(scaled, y)[0] for _, fn in backends]
        if len(scores) == 2:
            assert np.allclose(scores[0], scores[1], rtol=1e-9, atol=1e-12)
        row = f"{label:<32} " + " ".join(f"{t * 1e6:>10.1f}us" for t in times)
        if len(times) == 2:
            row += f" {times[0] / times[1]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
