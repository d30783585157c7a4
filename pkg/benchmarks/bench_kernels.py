#!/usr/bin/env python3
"""Throughput comparison: native (Cython) vs fallback (numpy) kernels.

Sizes mirror the production workload: full-HD frames for the background
mean and compositing, a few hundred window embeddings for pooling.

Usage: python3 benchmarks/bench_kernels.py [--frames 32] [--repeat 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from bogp._kernels import _fallback

try:
    from bogp._kernels import _native
except ImportError:
    _native = None


def timeit(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--frames", type=int, default=32, help="HD frames to average")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    frames = rng.integers(0, 256, size=(args.frames, 1080, 1920, 3), dtype=np.uint8)
    frame = frames[0]
    bg = frames.astype(np.float64).mean(axis=0)
    rows = rng.normal(size=(300, 2048)).astype(np.float32)

    workloads = {
        f"mean_frames ({args.frames}x1080x1920x3)": lambda impl: impl.mean_frames(frames),
        "composite (1080x1920, 300x500 bb)": lambda impl: impl.composite(
            frame, 700, 400, 300, 500, bg
        ),
        "pool_rows average (300x2048)": lambda impl: impl.pool_rows(rows, "average"),
        "pool_rows max (300x2048)": lambda impl: impl.pool_rows(rows, "max"),
    }

    header = f"{'workload':<38} {'fallback':>12} {'native':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, call in workloads.items():
        t_fb = timeit(lambda: call(_fallback), args.repeat)
        if _native is None:
            print(f"{name:<38} {t_fb * 1e3:>10.1f}ms {'n/a':>12} {'n/a':>9}")
            continue
        t_nat = timeit(lambda: call(_native), args.repeat)
        out_fb, out_nat = call(_fallback), call(_native)
        identical = (np.asarray(out_fb) == np.asarray(out_nat)).all()
        speedup = t_fb / t_nat if t_nat > 0 else float("inf")
        mark = "" if identical else "  [MISMATCH]"
        print(
            f"{name:<38} {t_fb * 1e3:>10.1f}ms {t_nat * 1e3:>10.1f}ms {speedup:>8.2f}x{mark}"
        )
    if _native is None:
        print("\nnative kernels not built; run `pip install -e . --no-build-isolation`")


if __name__ == "__main__":
    main()
