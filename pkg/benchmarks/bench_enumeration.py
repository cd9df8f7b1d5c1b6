"""Timing comparison of the two exhaustive-enumeration backends.

Runs the compiled kernel and the numpy fallback on the same mid-size
instance, checks that they agree, and prints a small table.  Usage:

    python3 benchmarks/bench_enumeration.py [resolution] [horizon]
"""

import sys
import time

import numpy as np

from incdual import Box, HalfSquaredNorm, enumerate_primal
from incdual._backend import HAVE_COMPILED


def build_instance(res: int, N: int):
    rng = np.random.default_rng(0)
    G0 = Box([-1.0], [1.0]).grid(res)
    G1 = Box([-1.0], [1.0]).grid(res)
    GU = Box([-1.0], [1.0]).grid(res)
    A0 = rng.uniform(-0.4, 0.4, size=(1, 1))
    A1 = rng.uniform(-0.4, 0.4, size=(1, 1))
    B = rng.uniform(0.5, 1.0, size=(1, 1))
    return G0, G1, GU, A0, A1, B, N, HalfSquaredNorm(2)


def best_of(fn, repeats: int = 3) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main() -> int:
    res = int(sys.argv[1]) if len(sys.argv) > 1 else 21
    N = int(sys.argv[2]) if len(sys.argv) > 2 else 4
    args = build_instance(res, N)
    total = res * res * res ** (N - 1)
    print(f"instance: n=1, resolution {res}, horizon N={N}, {total:,} combos")

    results = {}
    timings = {}
    backends = ["numpy"] + (["compiled"] if HAVE_COMPILED else [])
    for backend in backends:
        results[backend] = enumerate_primal(*args, force=backend)
        timings[backend] = best_of(lambda: enumerate_primal(*args, force=backend))

    if HAVE_COMPILED:
        vn, jn = results["numpy"]
        vc, jc = results["compiled"]
        assert jn == jc, f"index mismatch: {jn} != {jc}"
        assert abs(vn - vc) <= 1e-12 * (1.0 + abs(vn)), f"value mismatch: {vn} != {vc}"
        print("agreement: identical index, values within 1e-12")
    else:
        print("compiled backend unavailable; timing numpy only")

    print(f"{'backend':<10} {'best of 3':>12} {'combos/s':>14}")
    for backend in backends:
        t = timings[backend]
        print(f"{backend:<10} {t:>11.4f}s {total / t:>14,.0f}")
    if HAVE_COMPILED:
        print(f"speedup: {timings['numpy'] / timings['compiled']:.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
