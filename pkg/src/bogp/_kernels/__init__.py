"""Pixel/reduction kernels with a compiled core and a numpy fallback.

The native Cython module is optional: if it was not built (or the env var
``BOGP_PURE_PYTHON`` is set to a non-empty value) the numpy implementations
are used instead. Both backends are required to produce bit-identical
results; `tests/test_kernels.py` enforces that and `benchmarks/bench_kernels.py`
compares their throughput.

Exposed functions (same signatures on both backends):

- ``mean_frames(frames)``: per-pixel mean of a (T, H, W, C) uint8 stack as
  float64 (H, W, C). The sum is accumulated in uint64, so the result is
  exact and backend-independent.
- ``composite(frame, x, y, w, h, bg)``: paste the (x, y, w, h) region of a
  uint8 frame onto a float64 background; pixels outside the region are the
  background rounded half-up to uint8, pixels inside are copied verbatim.
- ``pool_rows(rows, mode)``: column-wise reduction of a (n, r) float32
  matrix; ``mode`` is ``"average"`` or ``"max"``. The average accumulates in
  float64 in row order before the final divide.
"""

from __future__ import annotations

import os

from . import _fallback

if os.environ.get("BOGP_PURE_PYTHON"):
    _impl = _fallback
    BACKEND = "fallback"
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]

        BACKEND = "native"
    except ImportError:
        _impl = _fallback
        BACKEND = "fallback"

mean_frames = _impl.mean_frames
composite = _impl.composite
pool_rows = _impl.pool_rows

__all__ = ["BACKEND", "mean_frames", "composite", "pool_rows"]
