"""HTTP service backing the annotation workbench.

Endpoints (JSON unless noted):

- ``GET /clips?filter=unannotated|all`` — clip summaries plus the current
  manifest version, ordered by clip_id.
- ``GET /clips/{id}/frames/{i}`` — one raw frame as PNG (annotators see the
  full scene, not the context-constrained footage).
- ``GET /clips/{id}/annotation`` / ``PUT /clips/{id}/annotation`` — read and
  write annotations with optimistic concurrency: the PUT body carries
  ``expected_version`` and a stale value yields 409 with the current
  version so the client can reload and retry.
- ``POST /sessions`` / ``GET /sessions/{id}/next`` — lease-based clip queue
  so two annotators are never handed the same clip at once.

Writes are serialized through one lock and persisted with
write-temp-then-swap, so a crash mid-write never leaves a half-record.
Every successful PUT appends one audit-log line.
"""

from __future__ import annotations

import datetime as _dt
import threading
import time
import uuid
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, Header, HTTPException, Response
from pydantic import BaseModel

from . import clips as clip_io
from .dataset import ClipRecord, validate_annotation
from .manifest import (
    annotation_from_dict,
    annotation_to_dict,
    append_audit,
    read_manifest,
    read_version,
    write_manifest,
    write_version,
)

LEASE_SECONDS = 900.0


class VersionConflict(Exception):
    def __init__(self, current_version: int):
        self.current_version = current_version
        super().__init__(f"manifest version is {current_version}")


class ValidationFailed(Exception):
    def __init__(self, violations):
        self.violations = violations
        super().__init__("annotation failed validation")


def _utc_now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class ManifestStore:
    """Serialized read/write access to one manifest file."""

    def __init__(self, manifest_path: str | Path, audit_path: str | Path | None = None):
        self.path = Path(manifest_path)
        self.audit_path = Path(audit_path) if audit_path else Path(str(self.path) + ".audit")
        self._lock = threading.Lock()
        self._records: dict[str, ClipRecord] = {
            rec.clip_id: rec for rec in read_manifest(self.path)
        }
        self._version = read_version(self.path)

    @property
    def version(self) -> int:
        return self._version

    def list_clips(self, which: str = "all") -> list[ClipRecord]:
        records = sorted(self._records.values(), key=lambda r: r.clip_id)
        if which == "unannotated":
            records = [r for r in records if r.annotation is None]
        elif which != "all":
            raise ValueError("filter must be 'unannotated' or 'all'")
        return records

    def get(self, clip_id: str) -> Optional[ClipRecord]:
        return self._records.get(clip_id)

    def put_annotation(
        self, clip_id: str, ann_dict: dict, expected_version: int, annotator_id: str
    ) -> int:
        """Validate and persist one annotation; returns the new version."""
        with self._lock:
            record = self._records.get(clip_id)
            if record is None:
                raise KeyError(clip_id)
            if expected_version != self._version:
                raise VersionConflict(self._version)
            try:
                ann = annotation_from_dict(ann_dict)
            except (TypeError, ValueError) as exc:
                raise ValidationFailed(
                    [{"code": "schema", "message": str(exc)}]
                ) from exc
            violations = validate_annotation(ann, record)
            if violations:
                raise ValidationFailed(
                    [{"code": v.code, "message": v.message} for v in violations]
                )
            record.annotation = ann
            write_manifest(self.path, sorted(self._records.values(), key=lambda r: r.clip_id))
            self._version += 1
            write_version(self.path, self._version)
            append_audit(
                self.audit_path,
                annotator_id=annotator_id,
                clip_id=clip_id,
                action="put_annotation",
                version=self._version,
                timestamp=_utc_now(),
            )
            return self._version


class SessionManager:
    """Hands each active session a different clip (lease with timeout)."""

    def __init__(self, store: ManifestStore, lease_seconds: float = LEASE_SECONDS):
        self._store = store
        self._lease_seconds = lease_seconds
        self._lock = threading.Lock()
        self._sessions: dict[str, str] = {}
        self._leases: dict[str, tuple[str, float]] = {}

    def create(self, annotator_id: str) -> str:
        session_id = uuid.uuid4().hex
        with self._lock:
            self._sessions[session_id] = annotator_id
        return session_id

    def next_clip(self, session_id: str) -> Optional[str]:
        with self._lock:
            if session_id not in self._sessions:
                raise KeyError(session_id)
            now = time.monotonic()
            self._leases = {
                cid: (sid, deadline)
                for cid, (sid, deadline) in self._leases.items()
                if deadline > now
            }
            taken = {
                cid for cid, (sid, _) in self._leases.items() if sid != session_id
            }
            for rec in self._store.list_clips("unannotated"):
                if rec.clip_id not in taken:
                    self._leases[rec.clip_id] = (
                        session_id,
                        now + self._lease_seconds,
                    )
                    return rec.clip_id
            return None

    def release(self, clip_id: str) -> None:
        with self._lock:
            self._leases.pop(clip_id, None)


class AnnotationPut(BaseModel):
    annotation: dict
    expected_version: int


class SessionCreate(BaseModel):
    annotator_id: str


def _clip_summary(rec: ClipRecord) -> dict:
    return {
        "clip_id": rec.clip_id,
        "frame_count": rec.frame_count,
        "width": rec.width,
        "height": rec.height,
        "fps": rec.fps,
        "annotated": rec.annotation is not None,
        "excluded": rec.exclusion.code if rec.exclusion else None,
    }


def create_app(
    manifest_path: str | Path,
    clips_root: str | Path | None = None,
    audit_path: str | Path | None = None,
    lease_seconds: float = LEASE_SECONDS,
) -> FastAPI:
    store = ManifestStore(manifest_path, audit_path)
    sessions = SessionManager(store, lease_seconds)
    clips_root = Path(clips_root) if clips_root else Path(manifest_path).parent
    frame_cache: dict[str, np.ndarray] = {}

    app = FastAPI(title="bogp annotation service")
    app.state.store = store
    # The workbench is a static page served from anywhere on the LAN.
    from fastapi.middleware.cors import CORSMiddleware

    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def _frames_for(rec: ClipRecord) -> np.ndarray:
        if rec.clip_id not in frame_cache:
            if len(frame_cache) > 4:
                frame_cache.clear()
            frame_cache[rec.clip_id] = clip_io.load_frames(rec.source_uri, clips_root)
        return frame_cache[rec.clip_id]

    @app.get("/clips")
    def list_clips(filter: str = "all"):
        try:
            records = store.list_clips(filter)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {
            "manifest_version": store.version,
            "clips": [_clip_summary(r) for r in records],
        }

    @app.get("/clips/{clip_id}/frames/{index}")
    def get_frame(clip_id: str, index: int):
        rec = store.get(clip_id)
        if rec is None:
            raise HTTPException(status_code=404, detail="unknown clip")
        if index < 0 or index >= rec.frame_count:
            raise HTTPException(status_code=404, detail="frame index out of range")
        frames = _frames_for(rec)
        return Response(content=clip_io.encode_png(frames[index]), media_type="image/png")

    @app.get("/clips/{clip_id}/annotation")
    def get_annotation(clip_id: str):
        rec = store.get(clip_id)
        if rec is None:
            raise HTTPException(status_code=404, detail="unknown clip")
        if rec.annotation is None:
            raise HTTPException(status_code=404, detail="clip not annotated")
        return {
            "manifest_version": store.version,
            "annotation": annotation_to_dict(rec.annotation),
        }

    @app.put("/clips/{clip_id}/annotation")
    def put_annotation(
        clip_id: str,
        body: AnnotationPut,
        x_annotator_id: str = Header(default="anonymous"),
    ):
        try:
            version = store.put_annotation(
                clip_id, body.annotation, body.expected_version, x_annotator_id
            )
        except KeyError as exc:
            raise HTTPException(status_code=404, detail="unknown clip") from exc
        except VersionConflict as exc:
            raise HTTPException(
                status_code=409,
                detail={
                    "error": "version_conflict",
                    "current_version": exc.current_version,
                },
            ) from exc
        except ValidationFailed as exc:
            raise HTTPException(
                status_code=422, detail={"violations": exc.violations}
            ) from exc
        sessions.release(clip_id)
        return {"version": version}

    @app.post("/sessions")
    def create_session(body: SessionCreate):
        return {"session_id": sessions.create(body.annotator_id)}

    @app.get("/sessions/{session_id}/next")
    def session_next(session_id: str):
        try:
            clip_id = sessions.next_clip(session_id)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail="unknown session") from exc
        return {"clip_id": clip_id, "manifest_version": store.version}

    return app
