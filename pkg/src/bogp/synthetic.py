"""Scripted synthetic corpora for tests, demos, and the acceptance suite.

Each scripted clip shows a bright "kicker" rectangle approaching a fixed
ball position over a static textured background; the approach angle
determines the BoGP label (left comes in from the right at about -30
degrees, center straight on, right at about +30). Exact per-frame
bounding boxes double as the tracker sidecar, and the manifest annotation
carries valid, label-uncorrelated metadata.

Everything derives from one seed: regenerating a corpus with the same
parameters is byte-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import BOGP_LABELS, ClipRecord, FreeKickAnnotation, LabelSpace
from .experiments import SampleTable
from .manifest import write_manifest
from .preprocess import BoundingBox, KickerTrack, write_tracks
from .clips import save_frames

SYNTH_TIMESTAMP = "2024-01-01T00:00:00Z"

ANGLE_BY_LABEL = {"left": -30.0, "center": 0.0, "right": 30.0}


@dataclass
class ScriptedClip:
    record: ClipRecord
    frames: np.ndarray
    tracks: list[KickerTrack]


def _texture(rng: np.random.Generator, height: int, width: int) -> np.ndarray:
    """Static background: vertical gradient plus coarse seeded noise."""
    grad = np.linspace(60.0, 120.0, height)[:, None]
    noise = rng.integers(-12, 13, size=(height // 8 + 1, width // 8 + 1))
    noise = np.kron(noise, np.ones((8, 8)))[:height, :width]
    base = np.clip(grad + noise, 0, 255)
    return np.repeat(base[:, :, None], 3, axis=2).astype(np.uint8)


def scripted_clip(
    clip_id: str, label: str, seed: int, height: int = 64, width: int = 64
) -> ScriptedClip:
    """Generate one scripted free-kick clip with its track and annotation."""
    if label not in BOGP_LABELS:
        raise ValueError(f"label must be one of {BOGP_LABELS}")
    rng = np.random.default_rng(seed)
    bg = _texture(rng, height, width)

    rect_w, rect_h = 10, 14
    theta = math.radians(ANGLE_BY_LABEL[label] + float(rng.uniform(-5.0, 5.0)))
    speed = float(rng.uniform(1.2, 1.6))
    ball = np.array([width / 2.0, height * 0.78])
    direction = np.array([math.sin(theta), math.cos(theta)])

    run_start = 8
    run_len = int(rng.integers(26, 38))
    gap = int(rng.integers(2, 6))
    run_end = run_start + run_len - 1
    kick_frame = run_end + gap
    frame_count = kick_frame + 16 + int(rng.integers(2, 6))

    brightness = float(rng.uniform(185.0, 215.0))
    jitter = rng.uniform(-4.0, 4.0, size=frame_count)

    # Rectangle center per frame: stands still, runs at the ball, then
    # decays its velocity after contact.
    centers = np.empty((frame_count, 2))
    start = ball - direction * speed * (kick_frame - run_start)
    for t in range(frame_count):
        if t <= run_start:
            centers[t] = start
        elif t <= kick_frame:
            centers[t] = ball - direction * speed * (kick_frame - t)
        else:
            decay = 0.8 ** (t - kick_frame)
            vel = direction * speed * decay
            centers[t] = centers[t - 1] + vel

    frames = np.empty((frame_count, height, width, 3), dtype=np.uint8)
    boxes: dict[int, BoundingBox] = {}
    for t in range(frame_count):
        frame = bg.copy()
        cx, cy = centers[t]
        x = int(round(np.clip(cx - rect_w / 2, 0, width - rect_w)))
        y = int(round(np.clip(cy - rect_h / 2, 0, height - rect_h)))
        value = int(np.clip(brightness + jitter[t], 0, 255))
        frame[y : y + rect_h, x : x + rect_w] = (value, value, max(value - 18, 0))
        frames[t] = frame
        boxes[t] = BoundingBox(x, y, rect_w, rect_h)

    kicker = KickerTrack(track_id="kicker", boxes=boxes)
    # A static decoy subject so track selection has something to reject.
    decoy_box = BoundingBox(2, 2, 6, 8)
    decoy = KickerTrack(
        track_id="bystander", boxes={t: decoy_box for t in range(frame_count)}
    )

    sides = ("left_of_goal", "center_of_goal", "right_of_goal")
    ann = FreeKickAnnotation(
        pitch_side=("left", "right")[int(rng.integers(0, 2))],
        freekick_side=sides[int(rng.integers(0, 3))],
        freekick_distance=("near_box", "far_box")[int(rng.integers(0, 2))],
        kicker_foot=("left", "right")[int(rng.integers(0, 2))],
        bogp_label=label,
        kick_frame=kick_frame,
        run_start_frame=run_start,
        run_end_frame=run_end,
        outcome_reached_goal=True,
        barrier_config=int(rng.integers(0, 6)),
        gender=("male", "female")[int(rng.integers(0, 2))],
        goalkeeper_zone=("left", "center", "right")[int(rng.integers(0, 3))],
        annotator_id="synthetic",
        timestamp=SYNTH_TIMESTAMP,
        kicker_track_id="kicker",
    )
    record = ClipRecord(
        clip_id=clip_id,
        source_uri=f"clips/{clip_id}.npy",
        fps=30.0,
        frame_count=frame_count,
        width=width,
        height=height,
        annotation=ann,
        viewpoint_ok=True,
        detection_ok=True,
    )
    return ScriptedClip(record=record, frames=frames, tracks=[kicker, decoy])


def generate_corpus(
    out_dir: str | Path,
    n_clips: int = 120,
    seed: int = 7,
    height: int = 64,
    width: int = 64,
) -> list[ScriptedClip]:
    """Write a balanced scripted corpus: clips/, tracks/, manifest.jsonl."""
    out = Path(out_dir)
    (out / "clips").mkdir(parents=True, exist_ok=True)
    (out / "tracks").mkdir(parents=True, exist_ok=True)
    clips = scripted_corpus(n_clips=n_clips, seed=seed, height=height, width=width)
    for clip in clips:
        save_frames(out / clip.record.source_uri, clip.frames)
        write_tracks(out / "tracks" / f"{clip.record.clip_id}.tracks.jsonl", clip.tracks)
    write_manifest(out / "manifest.jsonl", [c.record for c in clips])
    return clips


def scripted_corpus(
    n_clips: int = 120, seed: int = 7, height: int = 64, width: int = 64
) -> list[ScriptedClip]:
    """Balanced in-memory corpus; labels cycle left/center/right."""
    root = np.random.SeedSequence(seed)
    child_seeds = root.generate_state(n_clips)
    clips = []
    for i in range(n_clips):
        label = BOGP_LABELS[i % len(BOGP_LABELS)]
        clips.append(
            scripted_clip(
                clip_id=f"synth{i:04d}",
                label=label,
                seed=int(child_seeds[i]),
                height=height,
                width=width,
            )
        )
    return clips


# -- embedding-level fixtures -------------------------------------------------


def _random_meta(rng: np.random.Generator, n: int) -> np.ndarray:
    """Valid 6-dim metadata vectors: binary, one-hot(3), binary, binary."""
    meta = np.zeros((n, 6))
    meta[:, 0] = rng.integers(0, 2, size=n)
    meta[np.arange(n), 1 + rng.integers(0, 3, size=n)] = 1.0
    meta[:, 4] = rng.integers(0, 2, size=n)
    meta[:, 5] = rng.integers(0, 2, size=n)
    return meta


def blob_table(
    n: int = 30, r: int = 16, seed: int = 0, separation: float = 3.0
) -> SampleTable:
    """Two linearly separable Gaussian blobs; handy protocol fixture."""
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % 2
    axis_run = rng.normal(size=r)
    axis_run /= np.linalg.norm(axis_run)
    axis_kick = rng.normal(size=r)
    axis_kick /= np.linalg.norm(axis_kick)
    signs = 2.0 * labels - 1.0
    run = rng.normal(size=(n, r)) + separation * signs[:, None] * axis_run
    kick = rng.normal(size=(n, r)) + separation * signs[:, None] * axis_kick
    return SampleTable(
        ids=[f"blob{i:04d}" for i in range(n)],
        run=run,
        kick=kick,
        meta=_random_meta(rng, n),
        labels=labels.astype(np.intp),
        space=LabelSpace.two_class(),
    )


def ablation_table(kind: str, n: int = 200, r: int = 16, seed: int = 0) -> SampleTable:
    """Two-class fixtures for the metadata ablation.

    ``meta_dependent``: for half the samples the embeddings are pure noise
    and the label equals the pitch-side bit, so the metadata path is the
    only route to those labels. ``meta_independent``: every label is
    determined by the embeddings and the metadata is unrelated noise.
    """
    if kind not in ("meta_dependent", "meta_independent"):
        raise ValueError("kind must be meta_dependent or meta_independent")
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, size=n).astype(np.intp)
    axis = rng.normal(size=r)
    axis /= np.linalg.norm(axis)
    signs = 2.0 * labels - 1.0
    run = rng.normal(size=(n, r)) + 2.5 * signs[:, None] * axis
    kick = rng.normal(size=(n, r)) + 2.5 * signs[:, None] * axis
    meta = _random_meta(rng, n)
    if kind == "meta_dependent":
        # Half the samples carry almost no embedding signal; their label is
        # readable only through the pitch-side bit.
        blind = rng.random(n) < 0.5
        run[blind] = 0.3 * rng.normal(size=(int(blind.sum()), r))
        kick[blind] = 0.3 * rng.normal(size=(int(blind.sum()), r))
        meta[blind, 0] = labels[blind]
    return SampleTable(
        ids=[f"abl{i:05d}" for i in range(n)],
        run=run,
        kick=kick,
        meta=meta,
        labels=labels,
        space=LabelSpace.two_class(),
    )
