"""Benchmark the numba kernels against the pure-numpy fallback.

Usage: python benchmarks/bench_kernels.py [--sizes 64,256,1024] [--repeats 5]

Both backends are imported directly, so the VSG_KERNEL_BACKEND env var does
not matter here. The numba timings exclude JIT warmup (one untimed call).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from vsgkit.kernels import numpy_impl

try:
    from vsgkit.kernels import numba_impl
except ImportError:
    numba_impl = None


def _mask(size: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    # blobby foreground: threshold of a smoothed random field
    field = rng.random((size, size))
    for _ in range(3):
        field = (
            field
            + np.roll(field, 1, 0)
            + np.roll(field, -1, 0)
            + np.roll(field, 1, 1)
            + np.roll(field, -1, 1)
        ) / 5.0
    return field > np.quantile(field, 0.6)


def _time(fn, *args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="64,256,1024")
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    kernels = [
        ("erode r=2", lambda impl, m: impl.erode(m, 2)),
        ("dilate r=2", lambda impl, m: impl.dilate(m, 2)),
        ("label 4-conn", lambda impl, m: impl.label_components(m)),
    ]

    print(f"{'kernel':<14} {'size':>6} {'numpy':>12} {'numba':>12} {'speedup':>9}")
    for size in sizes:
        mask = _mask(size, seed=size)
        for name, call in kernels:
            t_np = _time(call, numpy_impl, mask, repeats=args.repeats)
            if numba_impl is None:
                print(f"{name:<14} {size:>6} {t_np * 1e3:>10.2f}ms {'n/a':>12} {'n/a':>9}")
                continue
            call(numba_impl, mask)  # JIT warmup
            t_nb = _time(call, numba_impl, mask, repeats=args.repeats)
            print(
                f"{name:<14} {size:>6} {t_np * 1e3:>10.2f}ms {t_nb * 1e3:>10.2f}ms "
                f"{t_np / t_nb:>8.1f}x"
            )


if __name__ == "__main__":
    main()
