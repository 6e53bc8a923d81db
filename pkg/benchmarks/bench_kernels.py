"""Benchmark the compiled kernel core against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--sizes 10000 100000 1000000]
"""

from __future__ import annotations

import argparse
import time

from pycloudiot import _kernels_py

try:
    from pycloudiot import _kernels as compiled
except ImportError:
    compiled = None

KERNELS = ("arc_dist_sum", "rosen_sum", "fib_mod")


def time_call(fn, size, seed, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(size, seed)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sizes", type=int, nargs="+",
                        default=[10_000, 100_000, 1_000_000])
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    if compiled is None:
        print("compiled extension not available; benchmarking fallback only")

    header = f"{'kernel':<14}{'size':>10}{'python':>12}{'cython':>12}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name in KERNELS:
        py_fn = getattr(_kernels_py, name)
        c_fn = getattr(compiled, name) if compiled else None
        for size in args.sizes:
            py_t = time_call(py_fn, size, args.seed)
            if c_fn is not None:
                c_t = time_call(c_fn, size, args.seed)
                assert py_fn(size, args.seed) == c_fn(size, args.seed), \
                    "backends diverged"
                print(f"{name:<14}{size:>10}{py_t:>11.4f}s{c_t:>11.4f}s"
                      f"{py_t / c_t:>8.1f}x")
            else:
                print(f"{name:<14}{size:>10}{py_t:>11.4f}s{'-':>12}{'-':>9}")


if __name__ == "__main__":
    main()
