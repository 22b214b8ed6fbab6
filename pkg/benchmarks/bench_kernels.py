"""Benchmark the jitted kernels against their pure-numpy fallbacks.

Run from the repository root:

    python3 benchmarks/bench_kernels.py [--repeats N] [--quick]

Times three kernels: brute-force nearest neighbor, grid-accelerated nearest
neighbor, and batched bilinear sampling.  The jitted path is warmed up once
before timing so compilation cost is not counted.  THO_THREADS caps the
numba thread pool as usual.
"""

import argparse
import time

import numpy as np

from hoirecon import kernels
from hoirecon.backend import HAVE_NUMBA


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def report(name, base_s, fast_s, fast_label="numba"):
    if fast_s is None:
        print(f"{name:28s} numpy {base_s * 1e3:9.2f} ms   {fast_label} ----")
        return
    print(f"{name:28s} numpy {base_s * 1e3:9.2f} ms   "
          f"{fast_label} {fast_s * 1e3:9.2f} ms   x{base_s / fast_s:.1f}")


def bench_nearest_brute(rng, repeats, n, m):
    query = rng.normal(size=(n, 3))
    ref = rng.normal(size=(m, 3))
    base = best_of(lambda: kernels._nearest_sqdist_brute_numpy(query, ref), repeats)
    fast = None
    if HAVE_NUMBA:
        got = kernels._nearest_sqdist_brute_numba(query, ref)  # warm up
        assert np.array_equal(got, kernels._nearest_sqdist_brute_numpy(query, ref))
        fast = best_of(lambda: kernels._nearest_sqdist_brute_numba(query, ref),
                       repeats)
    report(f"nearest brute {n}x{m}", base, fast)


def bench_nearest_grid(rng, repeats, n, m):
    query = rng.normal(size=(n, 3))
    ref = rng.normal(size=(m, 3))
    base = best_of(lambda: kernels._nearest_sqdist_brute_numpy(query, ref), repeats)
    got = kernels._nearest_sqdist_grid(query, ref)  # warm up, either backend
    assert np.allclose(got, kernels._nearest_sqdist_brute_numpy(query, ref),
                       rtol=0, atol=0)
    fast = best_of(lambda: kernels._nearest_sqdist_grid(query, ref), repeats)
    report(f"nearest grid  {n}x{m}", base, fast, fast_label="grid ")


def bench_bilinear(rng, repeats, samples, channels):
    grid = rng.normal(size=(64, 64, channels)).astype(np.float32)
    us = rng.uniform(0, 63, size=samples)
    vs = rng.uniform(0, 63, size=samples)
    base = best_of(lambda: kernels._bilinear_many_numpy(grid, us, vs), repeats)
    fast = None
    if HAVE_NUMBA:
        got = kernels._bilinear_many_numba(grid, us, vs)  # warm up
        assert np.array_equal(got, kernels._bilinear_many_numpy(grid, us, vs))
        fast = best_of(lambda: kernels._bilinear_many_numba(grid, us, vs), repeats)
    report(f"bilinear {samples}x{channels}ch", base, fast)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5,
                    help="take the best of this many runs")
    ap.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    scale = 4 if args.quick else 1
    print(f"numba available: {HAVE_NUMBA}")
    bench_nearest_brute(rng, args.repeats, 3000 // scale, 3000 // scale)
    bench_nearest_grid(rng, args.repeats, 3000 // scale, 20000 // scale)
    bench_bilinear(rng, args.repeats, 100_000 // scale, 64)


if __name__ == "__main__":
    main()
