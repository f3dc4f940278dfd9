#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Usage: python benches/bench_kernels.py [--repeats N]

Covers the two inner loops that dominate the per-slot pipeline: nearest-
codeword assignment and temporal-hold recovery, at desk-scale and
paper-scale grid sizes.
"""

import argparse
import time

import numpy as np

from uavstream.kernels import _pykernels

try:
    from uavstream.kernels import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_assign(rng, repeats):
    cases = [
        ("assign 16x16 grid, K=64, d=4", 256, 64, 4),
        ("assign 30x30 grid, K=1024, d=8", 900, 1024, 8),
        ("assign 64x64 grid, K=256, d=8", 4096, 256, 8),
    ]
    for label, n, k, d in cases:
        vectors = np.ascontiguousarray(rng.normal(size=(n, d)))
        entries = np.ascontiguousarray(rng.normal(size=(k, d)))
        yield label, (
            lambda v=vectors, e=entries: _pykernels.assign_nearest(v, e),
            None if _ckernels is None else (lambda v=vectors, e=entries: _ckernels.assign_nearest(v, e)),
        )


def bench_hold(rng, repeats):
    cases = [
        ("hold window N=6, 16x16, 30% loss", 6, 16, 0.3),
        ("hold window N=6, 30x30, 30% loss", 6, 30, 0.3),
        ("hold window N=6, 30x30, 90% loss", 6, 30, 0.9),
    ]
    for label, n, side, rate in cases:
        indices = np.ascontiguousarray(rng.integers(0, 64, size=(n, side, side)).astype(np.int64))
        mask = np.ascontiguousarray((rng.random((n, side, side)) < rate).astype(np.uint8))
        prev = np.ascontiguousarray(rng.integers(0, 64, size=(side, side)).astype(np.int64))
        yield label, (
            lambda i=indices, m=mask, p=prev: _pykernels.temporal_hold(i, m, p),
            None if _ckernels is None else (lambda i=indices, m=mask, p=prev: _ckernels.temporal_hold(i, m, p)),
        )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=30)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    print(f"{'case':40s} {'numpy':>10s} {'compiled':>10s} {'speedup':>8s}")
    for source in (bench_assign, bench_hold):
        for label, (py_fn, c_fn) in source(rng, args.repeats):
            py_time = best_of(py_fn, args.repeats)
            if c_fn is None:
                print(f"{label:40s} {py_time * 1e6:9.1f}us {'n/a':>10s} {'n/a':>8s}")
                continue
            if not np.array_equal(py_fn(), c_fn()):
                raise AssertionError(f"backend outputs differ for {label}")
            c_time = best_of(c_fn, args.repeats)
            print(
                f"{label:40s} {py_time * 1e6:9.1f}us {c_time * 1e6:9.1f}us "
                f"{py_time / c_time:7.1f}x"
            )
    if _ckernels is None:
        print("\ncompiled extension not built; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
