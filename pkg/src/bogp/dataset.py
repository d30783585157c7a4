"""Dataset schema, label spaces, annotation validation, and fold generation.

A corpus is a list of :class:`ClipRecord`. Records enter unannotated, pick
up a :class:`FreeKickAnnotation` through the annotation service, and either
survive the exclusion cascade or get an :class:`ExclusionReason`. Excluded
clips never reach preprocessing or training.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

PITCH_SIDES = ("left", "right")
FREEKICK_SIDES = ("left_of_goal", "center_of_goal", "right_of_goal")
FREEKICK_DISTANCES = ("near_box", "far_box")
FEET = ("left", "right")
BOGP_LABELS = ("left", "center", "right")
GENDERS = ("male", "female")

EXCLUSION_CODES = ("VIEWPOINT", "DETECTION_QUALITY", "MIN_FRAMES", "NO_GOAL_REACHED")

# Kicking window: 16 frames before the kick, the kick frame, 15 after.
KICK_WINDOW_BEFORE = 16
KICK_WINDOW_AFTER = 16
KICKING_STAGE_FRAMES = KICK_WINDOW_BEFORE + KICK_WINDOW_AFTER

# Clips shorter than one kicking window carry no usable signal.
MIN_CLIP_FRAMES = 32

# Metadata vector layout: [pitch_side, one-hot freekick_side (3), distance, foot].
METADATA_DIM = 6

EXCLUDED = -1


@dataclass(frozen=True)
class FreeKickAnnotation:
    """Human labels for one free-kick clip."""

    pitch_side: str
    freekick_side: str
    freekick_distance: str
    kicker_foot: str
    bogp_label: str
    kick_frame: int
    run_start_frame: int
    run_end_frame: int
    outcome_reached_goal: bool
    barrier_config: int
    gender: str
    goalkeeper_zone: str
    annotator_id: str
    timestamp: str
    kicker_track_id: Optional[str] = None


@dataclass(frozen=True)
class ExclusionReason:
    """Why a clip was dropped; exactly one code per excluded clip."""

    code: str
    note: str = ""

    def __post_init__(self) -> None:
        if self.code not in EXCLUSION_CODES:
            raise ValueError(f"unknown exclusion code: {self.code!r}")


@dataclass
class ClipRecord:
    """One curated free-kick clip plus manifest bookkeeping.

    ``viewpoint_ok`` and ``detection_ok`` are human/tracker quality flags
    consumed by the exclusion cascade; ``None`` means not yet assessed.
    ``extra`` holds unknown manifest fields so round-trips preserve them.
    """

    clip_id: str
    source_uri: str
    fps: float
    frame_count: int
    width: int
    height: int
    annotation: Optional[FreeKickAnnotation] = None
    exclusion: Optional[ExclusionReason] = None
    viewpoint_ok: Optional[bool] = None
    detection_ok: Optional[bool] = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.frame_count < 0:
            raise ValueError(f"{self.clip_id}: frame_count must be >= 0")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"{self.clip_id}: width/height must be positive")
        if self.fps <= 0:
            raise ValueError(f"{self.clip_id}: fps must be positive")


@dataclass(frozen=True)
class LabelSpace:
    """Ordered class names for the three- or two-class task.

    The order is fixed so confusion-matrix axes stay stable across runs:
    three_class = (left, center, right), two_class = (left, right).
    """

    mode: str
    classes: tuple[str, ...]

    @staticmethod
    def three_class() -> "LabelSpace":
        return LabelSpace("three_class", ("left", "center", "right"))

    @staticmethod
    def two_class() -> "LabelSpace":
        return LabelSpace("two_class", ("left", "right"))

    @staticmethod
    def for_classes(n: int) -> "LabelSpace":
        if n == 3:
            return LabelSpace.three_class()
        if n == 2:
            return LabelSpace.two_class()
        raise ValueError(f"unsupported class count: {n}")

    @property
    def n_classes(self) -> int:
        return len(self.classes)


@dataclass(frozen=True)
class Violation:
    """One violated annotation invariant."""

    code: str
    message: str


def validate_annotation(
    ann: FreeKickAnnotation, clip: ClipRecord
) -> list[Violation]:
    """Check every annotation invariant against the clip; empty list = ok.

    Violations are data for the annotation UI, not exceptions: all of them
    are returned, not just the first.
    """
    v: list[Violation] = []
    if ann.pitch_side not in PITCH_SIDES:
        v.append(Violation("pitch_side", f"pitch_side must be one of {PITCH_SIDES}"))
    if ann.freekick_side not in FREEKICK_SIDES:
        v.append(
            Violation("freekick_side", f"freekick_side must be one of {FREEKICK_SIDES}")
        )
    if ann.freekick_distance not in FREEKICK_DISTANCES:
        v.append(
            Violation(
                "freekick_distance",
                f"freekick_distance must be one of {FREEKICK_DISTANCES}",
            )
        )
    if ann.kicker_foot not in FEET:
        v.append(Violation("kicker_foot", f"kicker_foot must be one of {FEET}"))
    if ann.bogp_label not in BOGP_LABELS:
        v.append(Violation("bogp_label", f"bogp_label must be one of {BOGP_LABELS}"))
    if ann.gender not in GENDERS:
        v.append(Violation("gender", f"gender must be one of {GENDERS}"))
    if ann.barrier_config < 0 or ann.barrier_config > 11:
        v.append(
            Violation("barrier_config", "barrier_config must be between 0 and 11")
        )

    if ann.run_start_frame < 0:
        v.append(Violation("run_start_frame", "run_start_frame must be >= 0"))
    if ann.run_start_frame > ann.run_end_frame:
        v.append(Violation("run_interval", "run interval reversed"))
    if ann.run_end_frame >= ann.kick_frame:
        v.append(Violation("run_interval", "run interval must end before the kick frame"))
    if ann.kick_frame - KICK_WINDOW_BEFORE < 0:
        v.append(Violation("kick_window", "kicking window underflows frame 0"))
    if ann.kick_frame + KICK_WINDOW_AFTER > clip.frame_count:
        v.append(Violation("kick_window", "kicking window overruns the clip end"))
    if ann.run_end_frame >= clip.frame_count:
        v.append(Violation("run_interval", "run interval overruns the clip end"))
    return v


class ManifestInputError(ValueError):
    """A manifest record is missing fields the operation requires."""

    def __init__(self, problems: list[tuple[str, str]]):
        self.problems = problems
        lines = ", ".join(f"{cid}: {msg}" for cid, msg in problems)
        super().__init__(f"manifest records unusable: {lines}")


def apply_exclusion_filters(
    manifest: Sequence[ClipRecord],
) -> tuple[list[ClipRecord], list[ClipRecord], list[int]]:
    """Run the exclusion cascade over a manifest.

    Cascade order: VIEWPOINT -> DETECTION_QUALITY -> MIN_FRAMES ->
    NO_GOAL_REACHED; the first failing rule wins. Returns
    ``(kept, excluded, cascade_counts)`` where ``cascade_counts`` holds the
    survivor count before filtering and after each stage. Records already
    carrying an exclusion keep it (the cascade is idempotent).

    Raises :class:`ManifestInputError` if any record lacks a required flag
    (viewpoint_ok, detection_ok, or an annotation with
    outcome_reached_goal); missing input is a hard error, not an exclusion.
    """
    problems: list[tuple[str, str]] = []
    for rec in manifest:
        if rec.exclusion is not None:
            continue
        if rec.viewpoint_ok is None:
            problems.append((rec.clip_id, "missing viewpoint flag"))
        if rec.detection_ok is None:
            problems.append((rec.clip_id, "missing detection-quality flag"))
        if rec.annotation is None:
            problems.append((rec.clip_id, "missing annotation (outcome unknown)"))
    if problems:
        raise ManifestInputError(problems)

    stages = [
        ("VIEWPOINT", lambda r: r.viewpoint_ok),
        ("DETECTION_QUALITY", lambda r: r.detection_ok),
        ("MIN_FRAMES", lambda r: r.frame_count >= MIN_CLIP_FRAMES),
        ("NO_GOAL_REACHED", lambda r: r.annotation.outcome_reached_goal),
    ]
    notes = {
        "VIEWPOINT": "camera behind the goalkeeper or the kicker",
        "DETECTION_QUALITY": "tracker output unusable",
        "MIN_FRAMES": f"fewer than {MIN_CLIP_FRAMES} frames",
        "NO_GOAL_REACHED": "shot never reached the goal",
    }

    survivors = [r for r in manifest if r.exclusion is None]
    excluded = [r for r in manifest if r.exclusion is not None]
    counts = [len(survivors)]
    for code, rule in stages:
        passed = []
        for rec in survivors:
            if rule(rec):
                passed.append(rec)
            else:
                excluded.append(
                    replace(rec, exclusion=ExclusionReason(code, notes[code]))
                )
        survivors = passed
        counts.append(len(survivors))
    return survivors, excluded, counts


def encode_metadata(ann: FreeKickAnnotation) -> np.ndarray:
    """Encode the four contextual variables as a 6-dim binary vector.

    Layout: ``[pitch_side, freekick_side one-hot (left/center/right of
    goal), freekick_distance, kicker_foot]`` with left=0/right=1 for the
    binary slots and near_box=0/far_box=1 for the distance.
    """
    vec = np.zeros(METADATA_DIM, dtype=np.float64)
    vec[0] = float(PITCH_SIDES.index(ann.pitch_side))
    vec[1 + FREEKICK_SIDES.index(ann.freekick_side)] = 1.0
    vec[4] = float(FREEKICK_DISTANCES.index(ann.freekick_distance))
    vec[5] = float(FEET.index(ann.kicker_foot))
    return vec


def project_label(ann: FreeKickAnnotation, space: LabelSpace) -> int:
    """Map the BoGP label into the class space.

    Three-class: left/center/right -> 0/1/2. Two-class: left -> 0,
    right -> 1, center -> :data:`EXCLUDED` (center clips are dropped from
    the two-class corpus, never remapped).
    """
    if ann.bogp_label not in BOGP_LABELS:
        raise ValueError(f"unknown bogp_label: {ann.bogp_label!r}")
    if ann.bogp_label in space.classes:
        return space.classes.index(ann.bogp_label)
    if space.mode == "two_class" and ann.bogp_label == "center":
        return EXCLUDED
    raise ValueError(f"label {ann.bogp_label!r} not representable in {space.mode}")


def stratified_kfold(
    items: Sequence[tuple[str, int]], k: int, repeat_seed: int
) -> list[list[str]]:
    """Split labeled ids into k folds with per-class counts within +-1.

    Within each class the ids are shuffled by ``repeat_seed`` and dealt so
    every fold receives ``floor(n_c / k)`` or ``ceil(n_c / k)`` members;
    classes with fewer than k members degrade to best effort (some folds
    get none). Same seed, same items -> identical folds.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > len(items):
        raise ValueError(f"k={k} exceeds the number of items ({len(items)})")
    ids = [i for i, _ in items]
    if len(set(ids)) != len(ids):
        raise ValueError("item ids must be unique")

    rng = np.random.default_rng(repeat_seed)
    by_label: dict[int, list[str]] = {}
    for item_id, label in items:
        by_label.setdefault(label, []).append(item_id)

    folds: list[list[str]] = [[] for _ in range(k)]
    load = [0] * k
    for label in sorted(by_label):
        members = by_label[label]
        members = [members[i] for i in rng.permutation(len(members))]
        base, rem = divmod(len(members), k)
        counts = [base] * k
        # Extras go to the currently lightest folds to keep sizes balanced.
        for f in sorted(range(k), key=lambda f: (load[f], f))[:rem]:
            counts[f] += 1
        pos = 0
        for f in range(k):
            folds[f].extend(members[pos : pos + counts[f]])
            load[f] += counts[f]
            pos += counts[f]
    return folds
