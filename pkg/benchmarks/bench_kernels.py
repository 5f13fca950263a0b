#!/usr/bin/env python3
"""Benchmark the numba-compiled kernels against the pure-numpy fallback.

The library selects the backend at import time (numba when available, unless
SEMFLOW_DISABLE_NUMBA=1 forces the fallback); this script times both paths in
one process on representative feedback solves.

Usage: python benchmarks/bench_kernels.py [--steps N]
"""

import argparse
import time

import numpy as np

from semflow import _kernels


def timeit(fn, *args, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=40_000)
    args = ap.parse_args()
    n = args.steps
    h = 1e-3
    rng = np.random.default_rng(0)

    cases = []
    # scalar feedback solve (Miyadera-Voigt loop)
    e1 = np.array([[np.exp(-h)]])
    b1 = np.array([[1.0]])
    c1 = np.array([[0.5]])
    v1 = rng.standard_normal((n + 1, 1))
    cases.append(("matrix_volterra_solve d=1", "matrix_volterra_solve",
                  (e1, b1, c1, v1, h)))
    # 4x4 feedback solve
    a4 = -np.eye(4) + 0.2 * rng.standard_normal((4, 4))
    from semflow.core import matexp

    e4 = matexp(a4, h)
    v4 = rng.standard_normal((n + 1, 4))
    cases.append(("matrix_volterra_solve d=4", "matrix_volterra_solve",
                  (e4, np.eye(4), 0.1 * rng.standard_normal((4, 4)), v4, h)))
    # delay-line solve (translation example, 1s window)
    lag = np.zeros(1001)
    lag[1000] = 0.8
    lag[1:500] += 1e-4
    vd = rng.standard_normal(n + 1)
    cases.append(("delay_volterra_solve W=1000", "delay_volterra_solve", (lag, vd)))
    # neutral feedback loop, N=256 history points
    N = 256
    prow = np.zeros((N, 1, 1))
    prow[0, 0, 0] = 0.3
    krow = np.zeros((N, 1, 1))
    krow[0, 0, 0] = 0.3
    f0 = rng.standard_normal((N + 1, 1))
    y = rng.standard_normal(1)
    steps = min(n, 8000)
    cases.append((f"neutral_feedback_loop N={N}", "neutral_feedback_loop",
                  (np.array([[np.exp(-h)]]), np.array([[0.2]]), prow, krow,
                   f0, y, h, steps)))

    if not _kernels.NUMBA_ENABLED:
        print("numba backend unavailable or disabled; timing the fallback only\n")
    header = f"{'kernel':36s} {'numpy [s]':>12s} {'numba [s]':>12s} {'speedup':>9s}"
    print(header)
    print("-" * len(header))
    for label, name, kargs in cases:
        plain = _kernels.PLAIN[name]
        t_plain = timeit(plain, *kargs)
        if _kernels.NUMBA_ENABLED:
            compiled = getattr(_kernels, name)
            compiled(*kargs)  # compile outside timing
            t_comp = timeit(compiled, *kargs)
            print(f"{label:36s} {t_plain:12.4f} {t_comp:12.4f} {t_plain / t_comp:8.1f}x")
        else:
            print(f"{label:36s} {t_plain:12.4f} {'-':>12s} {'-':>9s}")


if __name__ == "__main__":
    main()
