"""Manifest persistence: one ClipRecord per line, UTF-8 JSON.

The format is human-diffable and stream-appendable; unknown fields survive
a read/write round-trip via ``ClipRecord.extra``. A sidecar ``<path>.version``
file carries a monotonically increasing integer used by the annotation
service for optimistic concurrency. Writes go through a temp file followed
by ``os.replace`` so a crash mid-write never leaves a half-record behind.
"""

from __future__ import annotations

import dataclasses
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Optional

from .dataset import ClipRecord, ExclusionReason, FreeKickAnnotation

_CLIP_FIELDS = {
    "clip_id",
    "source_uri",
    "fps",
    "frame_count",
    "width",
    "height",
    "annotation",
    "exclusion",
    "viewpoint_ok",
    "detection_ok",
}

_ANN_FIELDS = {f.name for f in dataclasses.fields(FreeKickAnnotation)}


def annotation_to_dict(ann: FreeKickAnnotation) -> dict:
    d = dataclasses.asdict(ann)
    if d.get("kicker_track_id") is None:
        d.pop("kicker_track_id")
    return d


def annotation_from_dict(d: dict) -> FreeKickAnnotation:
    unknown = set(d) - _ANN_FIELDS
    if unknown:
        raise ValueError(f"unknown annotation fields: {sorted(unknown)}")
    missing = _ANN_FIELDS - {"kicker_track_id"} - set(d)
    if missing:
        raise ValueError(f"annotation missing fields: {sorted(missing)}")
    return FreeKickAnnotation(**d)


def record_to_dict(rec: ClipRecord) -> dict:
    d: dict = {
        "clip_id": rec.clip_id,
        "source_uri": rec.source_uri,
        "fps": rec.fps,
        "frame_count": rec.frame_count,
        "width": rec.width,
        "height": rec.height,
    }
    if rec.viewpoint_ok is not None:
        d["viewpoint_ok"] = rec.viewpoint_ok
    if rec.detection_ok is not None:
        d["detection_ok"] = rec.detection_ok
    if rec.annotation is not None:
        d["annotation"] = annotation_to_dict(rec.annotation)
    if rec.exclusion is not None:
        d["exclusion"] = {"code": rec.exclusion.code, "note": rec.exclusion.note}
    d.update(rec.extra)
    return d


def record_from_dict(d: dict) -> ClipRecord:
    extra = {k: v for k, v in d.items() if k not in _CLIP_FIELDS}
    ann = d.get("annotation")
    exc = d.get("exclusion")
    return ClipRecord(
        clip_id=d["clip_id"],
        source_uri=d["source_uri"],
        fps=float(d["fps"]),
        frame_count=int(d["frame_count"]),
        width=int(d["width"]),
        height=int(d["height"]),
        annotation=annotation_from_dict(ann) if ann is not None else None,
        exclusion=ExclusionReason(exc["code"], exc.get("note", "")) if exc else None,
        viewpoint_ok=d.get("viewpoint_ok"),
        detection_ok=d.get("detection_ok"),
        extra=extra,
    )


def read_manifest(path: str | Path) -> list[ClipRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(record_from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad manifest record: {exc}") from exc
    return records


def write_manifest(path: str | Path, records: Iterable[ClipRecord]) -> None:
    """Atomically replace the manifest at `path`."""
    path = Path(path)
    payload = "".join(
        json.dumps(record_to_dict(rec), sort_keys=True) + "\n" for rec in records
    )
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def version_path(manifest_path: str | Path) -> Path:
    return Path(str(manifest_path) + ".version")


def read_version(manifest_path: str | Path) -> int:
    vp = version_path(manifest_path)
    if not vp.exists():
        return 0
    return int(vp.read_text().strip() or 0)


def write_version(manifest_path: str | Path, version: int) -> None:
    vp = version_path(manifest_path)
    fd, tmp = tempfile.mkstemp(dir=vp.parent or ".", prefix=vp.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(f"{version}\n")
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, vp)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def append_audit(
    audit_path: str | Path,
    annotator_id: str,
    clip_id: str,
    action: str,
    version: int,
    timestamp: str,
    detail: Optional[dict] = None,
) -> None:
    entry = {
        "annotator_id": annotator_id,
        "clip_id": clip_id,
        "action": action,
        "version": version,
        "timestamp": timestamp,
    }
    if detail:
        entry["detail"] = detail
    with open(audit_path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(entry, sort_keys=True) + "\n")
