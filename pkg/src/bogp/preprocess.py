"""Kicker isolation and temporal segmentation.

The context constraint removes every moving element but the kicker: each
frame is rebuilt by pasting the kicker's bounding box onto a static
background estimated as the per-pixel mean of the clip's first ``tau``
frames. The constrained footage is then cut into the running stage (the
annotated approach interval) and the kicking stage (a fixed 32-frame
window around the annotated kick frame).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .dataset import (
    KICK_WINDOW_AFTER,
    KICK_WINDOW_BEFORE,
    KICKING_STAGE_FRAMES,
    FreeKickAnnotation,
)

DEFAULT_TAU = 30

RUNNING = "running"
KICKING = "kicking"
STAGES = (RUNNING, KICKING)


class DetectionQualityError(RuntimeError):
    """No usable kicker track; the clip should be flagged DETECTION_QUALITY."""


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned pixel box, top-left origin."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self) -> None:
        if self.w <= 0 or self.h <= 0:
            raise ValueError("bounding box must have positive size")
        if self.x < 0 or self.y < 0:
            raise ValueError("bounding box origin must be non-negative")

    def contains(self, px: float, py: float) -> bool:
        return self.x <= px < self.x + self.w and self.y <= py < self.y + self.h

    def clipped(self, width: int, height: int) -> "BoundingBox":
        x = min(self.x, width - 1)
        y = min(self.y, height - 1)
        w = max(1, min(self.w, width - x))
        h = max(1, min(self.h, height - y))
        return BoundingBox(x, y, w, h)


@dataclass
class KickerTrack:
    """Per-frame boxes for one tracked subject; gaps are tracker dropouts."""

    track_id: str
    boxes: dict[int, BoundingBox] = field(default_factory=dict)

    @property
    def coverage(self) -> int:
        return len(self.boxes)

    def box_near(self, frame: int) -> Optional[BoundingBox]:
        """Box at `frame`, else the nearest annotated frame's box.

        Ties between an earlier and a later frame go to the earlier one,
        so dropout frames inherit the last seen box.
        """
        if frame in self.boxes:
            return self.boxes[frame]
        if not self.boxes:
            return None
        nearest = min(self.boxes, key=lambda f: (abs(f - frame), f > frame))
        return self.boxes[nearest]


@dataclass(frozen=True)
class BackgroundModel:
    """Static scene estimate: per-pixel mean of ``tau`` frames."""

    tau: int
    mean_image: np.ndarray

    def __post_init__(self) -> None:
        if self.tau < 1:
            raise ValueError("tau must be >= 1")


@dataclass
class StageFootage:
    """Context-constrained frames for one stage of one clip."""

    stage: str
    frames: np.ndarray
    clip_id: str
    start_frame: int
    end_frame: int

    @property
    def m(self) -> int:
        return int(self.frames.shape[0])


def load_tracks(path: str | Path) -> list[KickerTrack]:
    """Read a track sidecar: one JSON record (track_id, frame, x, y, w, h) per line."""
    tracks: dict[str, KickerTrack] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                tid = str(rec["track_id"])
                track = tracks.setdefault(tid, KickerTrack(tid))
                track.boxes[int(rec["frame"])] = BoundingBox(
                    int(rec["x"]), int(rec["y"]), int(rec["w"]), int(rec["h"])
                )
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad track record: {exc}") from exc
    return sorted(tracks.values(), key=lambda t: t.track_id)


def write_tracks(path: str | Path, tracks: Sequence[KickerTrack]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for track in tracks:
            for frame in sorted(track.boxes):
                bb = track.boxes[frame]
                fh.write(
                    json.dumps(
                        {
                            "track_id": track.track_id,
                            "frame": frame,
                            "x": bb.x,
                            "y": bb.y,
                            "w": bb.w,
                            "h": bb.h,
                        }
                    )
                    + "\n"
                )


def select_kicker_track(
    tracks: Sequence[KickerTrack],
    ann: FreeKickAnnotation,
    ref_point: Optional[tuple[float, float]] = None,
) -> KickerTrack:
    """Pick the kicker among tracker outputs.

    The annotated ``kicker_track_id`` wins outright. Otherwise the track
    whose box at the kick frame contains ``ref_point`` is chosen, ties
    broken by largest temporal coverage then track id.
    """
    if not tracks:
        raise DetectionQualityError("no tracks supplied")
    if ann.kicker_track_id is not None:
        for track in tracks:
            if track.track_id == ann.kicker_track_id:
                return track
        raise DetectionQualityError(
            f"annotated track {ann.kicker_track_id!r} not present"
        )

    covering = [t for t in tracks if ann.kick_frame in t.boxes]
    if not covering:
        raise DetectionQualityError(f"no track covers kick frame {ann.kick_frame}")
    if ref_point is not None:
        containing = [
            t for t in covering if t.boxes[ann.kick_frame].contains(*ref_point)
        ]
        if containing:
            covering = containing
    if len(covering) == 1:
        return covering[0]
    return max(covering, key=lambda t: (t.coverage, t.track_id))


def estimate_background(frames: np.ndarray, tau: int = DEFAULT_TAU) -> BackgroundModel:
    """Per-pixel arithmetic mean of the first ``tau`` frames of the clip."""
    if tau < 1:
        raise ValueError("tau must be >= 1")
    if tau > frames.shape[0]:
        raise ValueError(f"tau={tau} exceeds available frames ({frames.shape[0]})")
    return BackgroundModel(tau=tau, mean_image=_kernels.mean_frames(frames[:tau]))


def composite_frame(
    frame: np.ndarray, bb: BoundingBox, bg: BackgroundModel
) -> np.ndarray:
    """Build the context-constrained frame for one timestep.

    Pixels inside ``bb`` are copied verbatim; pixels outside are the mean
    background rounded half-up to the source bit depth, so the region
    outside the kicker is identical across every composited frame.
    """
    return _kernels.composite(frame, bb.x, bb.y, bb.w, bb.h, bg.mean_image)


def composite_clip(
    frames: np.ndarray,
    track: KickerTrack,
    bg: BackgroundModel,
    indices: Sequence[int],
) -> np.ndarray:
    """Composite the given frame indices; dropout frames reuse the nearest box."""
    height, width = frames.shape[1], frames.shape[2]
    out = np.empty((len(indices),) + frames.shape[1:], dtype=np.uint8)
    for row, idx in enumerate(indices):
        bb = track.box_near(int(idx))
        if bb is None:
            raise DetectionQualityError(f"track {track.track_id} has no boxes")
        bb = bb.clipped(width, height)
        out[row] = composite_frame(frames[idx], bb, bg)
    return out


def kicking_window(kick_frame: int) -> tuple[int, int]:
    """Inclusive frame range of the kicking stage: [kick-16, kick+15]."""
    return kick_frame - KICK_WINDOW_BEFORE, kick_frame + KICK_WINDOW_AFTER - 1


def segment_stages(
    composited: np.ndarray,
    ann: FreeKickAnnotation,
    clip_id: str,
    base_frame: int = 0,
) -> tuple[StageFootage, StageFootage]:
    """Cut constrained footage into running and kicking stages.

    ``composited`` is indexed relative to ``base_frame`` in the original
    clip. The running stage is the inclusive annotated approach interval;
    the kicking stage is exactly 32 frames, the 17th being the kick frame.
    Nothing after kick+15 appears in either stage (the outcome and the
    kicker's reaction are dropped).
    """
    total = composited.shape[0]
    run_lo = ann.run_start_frame - base_frame
    run_hi = ann.run_end_frame - base_frame
    kick_lo, kick_hi = kicking_window(ann.kick_frame)
    kick_lo -= base_frame
    kick_hi -= base_frame
    if run_lo < 0 or kick_lo < 0 or run_hi >= total or kick_hi >= total:
        raise ValueError(
            f"{clip_id}: stage windows out of bounds (annotation not validated?)"
        )
    running = StageFootage(
        stage=RUNNING,
        frames=composited[run_lo : run_hi + 1],
        clip_id=clip_id,
        start_frame=ann.run_start_frame,
        end_frame=ann.run_end_frame,
    )
    kicking = StageFootage(
        stage=KICKING,
        frames=composited[kick_lo : kick_hi + 1],
        clip_id=clip_id,
        start_frame=kick_lo + base_frame,
        end_frame=kick_hi + base_frame,
    )
    assert kicking.m == KICKING_STAGE_FRAMES
    return running, kicking


def preprocess_clip(
    frames: np.ndarray,
    tracks: Sequence[KickerTrack],
    ann: FreeKickAnnotation,
    clip_id: str,
    tau: int = DEFAULT_TAU,
    ref_point: Optional[tuple[float, float]] = None,
) -> tuple[StageFootage, StageFootage]:
    """Full per-clip preprocessing: track selection, background, stages.

    Only the frames belonging to one of the two stages are composited;
    everything else in the clip is never touched.
    """
    track = select_kicker_track(tracks, ann, ref_point=ref_point)
    bg = estimate_background(frames, tau=min(tau, frames.shape[0]))
    kick_lo, kick_hi = kicking_window(ann.kick_frame)
    indices = list(range(ann.run_start_frame, ann.run_end_frame + 1)) + list(
        range(kick_lo, kick_hi + 1)
    )
    composited = composite_clip(frames, track, bg, indices)
    run_len = ann.run_end_frame - ann.run_start_frame + 1
    running = StageFootage(
        stage=RUNNING,
        frames=composited[:run_len],
        clip_id=clip_id,
        start_frame=ann.run_start_frame,
        end_frame=ann.run_end_frame,
    )
    kicking = StageFootage(
        stage=KICKING,
        frames=composited[run_len:],
        clip_id=clip_id,
        start_frame=kick_lo,
        end_frame=kick_hi,
    )
    return running, kicking
