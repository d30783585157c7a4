"""Numpy implementations of the pixel/reduction kernels.

Kept semantically identical, bit for bit, to the Cython module: means are
computed from exact uint64 sums, rounding is floor(x + 0.5), and the
average pool accumulates float64 in row order.
"""

from __future__ import annotations

import numpy as np


def mean_frames(frames: np.ndarray) -> np.ndarray:
    """Exact per-pixel mean of a (T, H, W, C) uint8 frame stack."""
    if frames.ndim != 4 or frames.dtype != np.uint8:
        raise ValueError("expected a (T, H, W, C) uint8 frame stack")
    if frames.shape[0] == 0:
        raise ValueError("cannot average zero frames")
    total = frames.astype(np.uint64).sum(axis=0)
    return total / np.float64(frames.shape[0])


def composite(
    frame: np.ndarray, x: int, y: int, w: int, h: int, bg: np.ndarray
) -> np.ndarray:
    """Paste the (x, y, w, h) region of `frame` onto the rounded background."""
    if frame.ndim != 3 or frame.dtype != np.uint8:
        raise ValueError("expected a (H, W, C) uint8 frame")
    if bg.shape != frame.shape:
        raise ValueError(f"background shape {bg.shape} != frame shape {frame.shape}")
    if w <= 0 or h <= 0:
        raise ValueError("bounding box must have positive size")
    if x < 0 or y < 0 or x + w > frame.shape[1] or y + h > frame.shape[0]:
        raise ValueError("bounding box exceeds frame bounds")
    out = np.floor(bg + 0.5)
    np.clip(out, 0.0, 255.0, out=out)
    out = out.astype(np.uint8)
    out[y : y + h, x : x + w] = frame[y : y + h, x : x + w]
    return out


def pool_rows(rows: np.ndarray, mode: str) -> np.ndarray:
    """Column-wise average or max of a (n, r) float32 matrix."""
    if rows.ndim != 2 or rows.dtype != np.float32:
        raise ValueError("expected a (n, r) float32 matrix")
    if rows.shape[0] == 0:
        raise ValueError("cannot pool an empty matrix")
    if mode == "average":
        acc = np.zeros(rows.shape[1], dtype=np.float64)
        for i in range(rows.shape[0]):
            acc += rows[i]
        return (acc / rows.shape[0]).astype(np.float32)
    if mode == "max":
        out = rows[0].copy()
        for i in range(1, rows.shape[0]):
            np.maximum(out, rows[i], out=out)
        return out
    raise ValueError(f"unknown pooling mode: {mode!r}")
