#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

Both backends are imported directly, so the VESSELTRACK_NUMBA flag is
irrelevant here.  The first numba call per kernel compiles (cached on disk);
warmup runs are excluded from the timings.
"""

import time

import numpy as np

from vesseltrack._kernels import _numba_impl, _numpy_impl


def _time(fn, args, reps):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def _vessel_mask(shape=(512, 512), seed=0):
    rng = np.random.default_rng(seed)
    mask = np.zeros(shape, bool)
    for _ in range(12):
        x = rng.uniform(30, shape[1] - 30)
        y = rng.uniform(30, shape[0] - 30)
        heading = rng.uniform(0, 2 * np.pi)
        for _ in range(300):
            heading += rng.uniform(-0.2, 0.2)
            x += np.cos(heading)
            y += np.sin(heading)
            xi, yi = int(x), int(y)
            if 1 <= xi < shape[1] - 1 and 1 <= yi < shape[0] - 1:
                mask[yi - 1:yi + 2, xi - 1:xi + 2] = True
    return mask


def main():
    rng = np.random.default_rng(42)

    d = rng.random((300, 300))
    key = rng.random((512, 512))
    cur = np.roll(key, (4, -3), axis=(0, 1))
    ys, xs = np.meshgrid(np.arange(0, 497, 16), np.arange(0, 497, 16), indexing="ij")
    ys = ys.ravel().astype(np.int64)
    xs = xs.ravel().astype(np.int64)
    zero = np.zeros_like(ys)
    mask = _vessel_mask()

    cases = [
        ("dtw_accumulate 300x300", "dtw_accumulate", (d,), 5),
        ("block_match 512px 31x31 blocks r8", "block_match", (key, cur, ys, xs, zero, zero, 16, 8), 3),
        ("thin 512px vessel mask", "thin", (mask,), 3),
    ]

    print(f"{'kernel':40s} {'numpy':>10s} {'numba':>10s} {'speedup':>9s}")
    for label, name, args, reps in cases:
        fn_nb = getattr(_numba_impl, name)
        fn_np = getattr(_numpy_impl, name)
        fn_nb(*args)  # JIT warmup
        t_np = _time(fn_np, args, reps)
        t_nb = _time(fn_nb, args, reps)
        print(f"{label:40s} {t_np * 1e3:8.1f}ms {t_nb * 1e3:8.1f}ms {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
