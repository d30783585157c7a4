# cython: boundscheck=False, wraparound=False, cdivision=True
"""Cython implementations of the pixel/reduction kernels.

Must stay bit-identical to `bogp._kernels._fallback`: uint64 accumulation
for frame means, floor(x + 0.5) rounding for the composite, float64
row-order accumulation for the average pool.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


def mean_frames(frames_in):
    if frames_in.ndim != 4 or frames_in.dtype != np.uint8:
        raise ValueError("expected a (T, H, W, C) uint8 frame stack")
    if frames_in.shape[0] == 0:
        raise ValueError("cannot average zero frames")
    cdef const unsigned char[:, :, :, ::1] frames = np.ascontiguousarray(frames_in)
    cdef Py_ssize_t T = frames.shape[0], H = frames.shape[1]
    cdef Py_ssize_t W = frames.shape[2], C = frames.shape[3]
    total_arr = np.zeros((H, W, C), dtype=np.uint64)
    cdef unsigned long long[:, :, ::1] total = total_arr
    cdef Py_ssize_t t, i, j, c
    with nogil:
        for t in range(T):
            for i in range(H):
                for j in range(W):
                    for c in range(C):
                        total[i, j, c] += frames[t, i, j, c]
    return total_arr / np.float64(T)


def composite(frame_in, int x, int y, int w, int h, bg_in):
    if frame_in.ndim != 3 or frame_in.dtype != np.uint8:
        raise ValueError("expected a (H, W, C) uint8 frame")
    if tuple(bg_in.shape) != tuple(frame_in.shape):
        raise ValueError(
            f"background shape {tuple(bg_in.shape)} != frame shape {tuple(frame_in.shape)}"
        )
    if w <= 0 or h <= 0:
        raise ValueError("bounding box must have positive size")
    if x < 0 or y < 0 or x + w > frame_in.shape[1] or y + h > frame_in.shape[0]:
        raise ValueError("bounding box exceeds frame bounds")
    cdef const unsigned char[:, :, ::1] frame = np.ascontiguousarray(frame_in)
    cdef const double[:, :, ::1] bg = np.ascontiguousarray(bg_in, dtype=np.float64)
    cdef Py_ssize_t H = frame.shape[0], W = frame.shape[1], C = frame.shape[2]
    out_arr = np.empty((H, W, C), dtype=np.uint8)
    cdef unsigned char[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, j, c
    cdef double v
    with nogil:
        for i in range(H):
            for j in range(W):
                if y <= i < y + h and x <= j < x + w:
                    for c in range(C):
                        out[i, j, c] = frame[i, j, c]
                else:
                    for c in range(C):
                        v = floor(bg[i, j, c] + 0.5)
                        if v < 0.0:
                            v = 0.0
                        elif v > 255.0:
                            v = 255.0
                        out[i, j, c] = <unsigned char> v
    return out_arr


def pool_rows(rows_in, str mode):
    if rows_in.ndim != 2 or rows_in.dtype != np.float32:
        raise ValueError("expected a (n, r) float32 matrix")
    if rows_in.shape[0] == 0:
        raise ValueError("cannot pool an empty matrix")
    cdef const float[:, ::1] rows = np.ascontiguousarray(rows_in)
    cdef Py_ssize_t n = rows.shape[0], r = rows.shape[1]
    cdef Py_ssize_t i, j
    cdef double[::1] acc
    cdef float[::1] out
    if mode == "average":
        acc_arr = np.zeros(r, dtype=np.float64)
        acc = acc_arr
        with nogil:
            for i in range(n):
                for j in range(r):
                    acc[j] += rows[i, j]
            for j in range(r):
                acc[j] /= n
        return acc_arr.astype(np.float32)
    if mode == "max":
        out_arr = np.array(rows_in[0], dtype=np.float32, copy=True)
        out = out_arr
        with nogil:
            for i in range(1, n):
                for j in range(r):
                    if rows[i, j] > out[j]:
                        out[j] = rows[i, j]
        return out_arr
    raise ValueError(f"unknown pooling mode: {mode!r}")
