"""Stage windowing, encoding, pooling, and the pooled-embedding cache.

A stage of m frames is cut into n = m - q + 1 overlapping windows (stride
one frame), each window is encoded to an r-dim vector, and the n vectors
are reduced with average or max pooling. Only the pooled vector is
persisted; the cache file layout is a fixed binary header, little-endian
float32 payload, and a trailing CRC32.
"""

from __future__ import annotations

import logging
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .backbones import Backbone, BackboneDescriptor
from .preprocess import StageFootage

log = logging.getLogger(__name__)

POOLING_MODES = ("average", "max")

CACHE_MAGIC = b"BGPE"
CACHE_VERSION = 1


class StageTooShortError(ValueError):
    """Stage has fewer frames than the backbone's window length."""


@dataclass(frozen=True)
class ClipWindow:
    """q consecutive stage frames starting at `start` (stride-1 windows)."""

    start: int
    frames: np.ndarray


@dataclass
class EmbeddingMatrix:
    """One r-dim row per window, in window order."""

    rows: np.ndarray
    backbone: BackboneDescriptor
    clip_id: str
    stage: str

    @property
    def n(self) -> int:
        return int(self.rows.shape[0])


@dataclass(frozen=True)
class PooledEmbedding:
    vector: np.ndarray
    pooling: str


def window_starts(m: int, q: int) -> range:
    if q < 1:
        raise ValueError("q must be >= 1")
    if m < q:
        raise StageTooShortError(f"stage of {m} frames cannot fit q={q} windows")
    return range(m - q + 1)


def window_clips(stage: StageFootage, q: int) -> list[ClipWindow]:
    """All stride-1 windows of the stage: starts 0, 1, ..., m - q."""
    return [
        ClipWindow(start=s, frames=stage.frames[s : s + q])
        for s in window_starts(stage.m, q)
    ]


def embed_clips(windows: Sequence[ClipWindow], backbone: Backbone) -> EmbeddingMatrix:
    """Encode windows to an (n, r) matrix; deterministic for fixed weights."""
    q = backbone.descriptor.q
    for w in windows:
        if w.frames.shape[0] != q:
            raise ValueError(
                f"window at {w.start} has {w.frames.shape[0]} frames, backbone wants {q}"
            )
    stacked = np.stack([w.frames for w in windows])
    rows = backbone.encode(stacked)
    if rows.shape != (len(windows), backbone.descriptor.r):
        raise RuntimeError(
            f"backbone {backbone.descriptor.name} returned {rows.shape}, "
            f"expected {(len(windows), backbone.descriptor.r)}"
        )
    if not np.isfinite(rows).all():
        raise RuntimeError(
            f"backbone {backbone.descriptor.name} produced non-finite embeddings"
        )
    return EmbeddingMatrix(
        rows=rows.astype(np.float32), backbone=backbone.descriptor, clip_id="", stage=""
    )


def embed_stage(stage: StageFootage, backbone: Backbone) -> EmbeddingMatrix:
    matrix = embed_clips(window_clips(stage, backbone.descriptor.q), backbone)
    matrix.clip_id = stage.clip_id
    matrix.stage = stage.stage
    return matrix


def pool(matrix: EmbeddingMatrix, mode: str) -> PooledEmbedding:
    """Component-wise mean or max over the window embeddings."""
    if mode not in POOLING_MODES:
        raise ValueError(f"pooling mode must be one of {POOLING_MODES}")
    if matrix.n == 0:
        raise ValueError("cannot pool an empty embedding matrix")
    return PooledEmbedding(
        vector=_kernels.pool_rows(np.ascontiguousarray(matrix.rows), mode), pooling=mode
    )


class EmbeddingCache:
    """On-disk pooled-embedding store, one file per (clip, stage, backbone, pooling).

    File layout: magic ``BGPE``, u16 format version, length-prefixed
    backbone name and pooling mode, u32 r, r little-endian float32 values,
    and a CRC32 (u32, little-endian) over everything before it. A checksum
    or header mismatch is reported and treated as a miss.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, clip_id: str, stage: str, backbone_name: str, pooling: str) -> Path:
        safe = clip_id.replace("/", "_").replace("\\", "_")
        return self.root / safe / f"{stage}.{backbone_name}.{pooling}.emb"

    def put(
        self,
        clip_id: str,
        stage: str,
        backbone_name: str,
        pooling: str,
        vector: np.ndarray,
    ) -> Path:
        vector = np.asarray(vector, dtype="<f4")
        if vector.ndim != 1 or vector.size == 0:
            raise ValueError("expected a non-empty 1-D vector")
        if not np.isfinite(vector).all():
            raise ValueError("refusing to cache a non-finite vector")
        path = self._path(clip_id, stage, backbone_name, pooling)
        if path.exists():
            log.warning("overwriting cache entry %s", path)
        path.parent.mkdir(parents=True, exist_ok=True)

        name_b = backbone_name.encode("utf-8")
        pool_b = pooling.encode("utf-8")
        body = (
            CACHE_MAGIC
            + struct.pack("<H", CACHE_VERSION)
            + struct.pack("<B", len(name_b))
            + name_b
            + struct.pack("<B", len(pool_b))
            + pool_b
            + struct.pack("<I", vector.size)
            + vector.tobytes()
        )
        path.write_bytes(body + struct.pack("<I", zlib.crc32(body)))
        return path

    def get(
        self, clip_id: str, stage: str, backbone_name: str, pooling: str
    ) -> Optional[PooledEmbedding]:
        """The cached vector, or None on miss/corruption."""
        path = self._path(clip_id, stage, backbone_name, pooling)
        if not path.exists():
            return None
        blob = path.read_bytes()
        try:
            return self._decode(blob, backbone_name, pooling)
        except ValueError as exc:
            log.warning("cache entry %s unusable (%s); treating as miss", path, exc)
            return None

    @staticmethod
    def _decode(blob: bytes, backbone_name: str, pooling: str) -> PooledEmbedding:
        if len(blob) < 4 + 2 + 1 or blob[:4] != CACHE_MAGIC:
            raise ValueError("bad magic")
        body, crc_bytes = blob[:-4], blob[-4:]
        if struct.unpack("<I", crc_bytes)[0] != zlib.crc32(body):
            raise ValueError("checksum failure")
        off = 4
        (version,) = struct.unpack_from("<H", body, off)
        off += 2
        if version != CACHE_VERSION:
            raise ValueError(f"unsupported cache version {version}")
        (name_len,) = struct.unpack_from("<B", body, off)
        off += 1
        name = body[off : off + name_len].decode("utf-8")
        off += name_len
        (pool_len,) = struct.unpack_from("<B", body, off)
        off += 1
        pool_mode = body[off : off + pool_len].decode("utf-8")
        off += pool_len
        (r,) = struct.unpack_from("<I", body, off)
        off += 4
        if name != backbone_name or pool_mode != pooling:
            raise ValueError(f"entry is for ({name}, {pool_mode})")
        vector = np.frombuffer(body, dtype="<f4", count=r, offset=off).copy()
        if vector.size != r:
            raise ValueError("truncated payload")
        return PooledEmbedding(vector=vector, pooling=pool_mode)
