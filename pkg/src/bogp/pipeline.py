"""End-to-end drivers shared by the CLI and the test harness.

Each clip is handled start-to-finish by one worker: load frames, select
the kicker track, composite the stages, window/encode/pool, cache. Clips
are independent, so callers may parallelize over them freely.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .backbones import Backbone
from .clips import load_frames, save_frames
from .dataset import ClipRecord
from .embeddings import EmbeddingCache, embed_stage, pool
from .preprocess import (
    DEFAULT_TAU,
    DetectionQualityError,
    StageFootage,
    load_tracks,
    preprocess_clip,
)

log = logging.getLogger(__name__)

STAGE_INDEX_NAME = "stage_index.jsonl"


def tracks_path_for(tracks_dir: str | Path, clip_id: str) -> Path:
    return Path(tracks_dir) / f"{clip_id}.tracks.jsonl"


def preprocess_record(
    rec: ClipRecord,
    clips_root: str | Path,
    tracks_dir: str | Path,
    tau: int = DEFAULT_TAU,
) -> tuple[StageFootage, StageFootage]:
    if rec.annotation is None:
        raise ValueError(f"{rec.clip_id}: cannot preprocess without an annotation")
    frames = load_frames(rec.source_uri, clips_root)
    tracks = load_tracks(tracks_path_for(tracks_dir, rec.clip_id))
    return preprocess_clip(frames, tracks, rec.annotation, rec.clip_id, tau=tau)


def save_stages(
    out_dir: str | Path, stages: Iterable[StageFootage]
) -> list[dict]:
    """Persist stage footage as npy stacks plus one index line per stage."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for stage in stages:
        rel = f"{stage.clip_id}/{stage.stage}.npy"
        save_frames(out / rel, stage.frames)
        entry = {
            "clip_id": stage.clip_id,
            "stage": stage.stage,
            "path": rel,
            "m": stage.m,
            "start_frame": stage.start_frame,
            "end_frame": stage.end_frame,
        }
        entries.append(entry)
        with open(out / STAGE_INDEX_NAME, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
    return entries


def load_stage_index(stage_dir: str | Path) -> list[dict]:
    path = Path(stage_dir) / STAGE_INDEX_NAME
    entries = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                entries.append(json.loads(line))
    return entries


def embed_and_cache_stage(
    stage: StageFootage,
    backbone: Backbone,
    poolings: Sequence[str],
    cache: EmbeddingCache,
) -> None:
    matrix = embed_stage(stage, backbone)
    for mode in poolings:
        pooled = pool(matrix, mode)
        cache.put(
            stage.clip_id, stage.stage, backbone.descriptor.name, mode, pooled.vector
        )


def preprocess_and_embed(
    records: Sequence[ClipRecord],
    clips_root: str | Path,
    tracks_dir: str | Path,
    cache: EmbeddingCache,
    backbone: Backbone,
    poolings: Sequence[str] = ("average", "max"),
    tau: int = DEFAULT_TAU,
    stages_out: Optional[str | Path] = None,
    stages: Sequence[str] = ("running", "kicking"),
) -> dict[str, int]:
    """Run preprocessing and embedding for every kept, annotated clip.

    Returns counters: processed / skipped_excluded / skipped_unannotated /
    failed_detection. Clips whose track data is unusable are skipped with
    a warning; callers wanting them excluded should re-run the filter
    cascade with the detection flag cleared.
    """
    counters = {
        "processed": 0,
        "skipped_excluded": 0,
        "skipped_unannotated": 0,
        "failed_detection": 0,
    }
    for rec in records:
        if rec.exclusion is not None:
            counters["skipped_excluded"] += 1
            continue
        if rec.annotation is None:
            counters["skipped_unannotated"] += 1
            continue
        try:
            running, kicking = preprocess_record(rec, clips_root, tracks_dir, tau=tau)
        except DetectionQualityError as exc:
            log.warning("%s: %s", rec.clip_id, exc)
            counters["failed_detection"] += 1
            continue
        if stages_out is not None:
            save_stages(stages_out, [running, kicking])
        for stage in (running, kicking):
            if stage.stage in stages:
                embed_and_cache_stage(stage, backbone, poolings, cache)
        counters["processed"] += 1
    return counters
