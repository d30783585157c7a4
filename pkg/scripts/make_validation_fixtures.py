#!/usr/bin/env python3
"""Regenerate the shared client/server validation fixture set.

The 50 cases mix valid drafts with every kind of rule violation the
annotation validator can emit. Expected verdicts come from the server-side
validator, which is the source of truth; the browser client must agree on
every case (see frontend/test/validation.test.ts).

Usage: python3 scripts/make_validation_fixtures.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from bogp.dataset import ClipRecord, FreeKickAnnotation, validate_annotation

OUT = Path(__file__).resolve().parents[1] / "shared" / "validation_fixtures.json"

SIDES = ["left_of_goal", "center_of_goal", "right_of_goal"]
LABELS = ["left", "center", "right"]


def base_annotation(rng) -> dict:
    kick = int(rng.integers(40, 160))
    run_len = int(rng.integers(3, 20))
    run_end = kick - int(rng.integers(1, 6))
    return {
        "pitch_side": ["left", "right"][int(rng.integers(0, 2))],
        "freekick_side": SIDES[int(rng.integers(0, 3))],
        "freekick_distance": ["near_box", "far_box"][int(rng.integers(0, 2))],
        "kicker_foot": ["left", "right"][int(rng.integers(0, 2))],
        "bogp_label": LABELS[int(rng.integers(0, 3))],
        "kick_frame": kick,
        "run_start_frame": max(run_end - run_len, 0),
        "run_end_frame": run_end,
        "outcome_reached_goal": bool(rng.integers(0, 2)),
        "barrier_config": int(rng.integers(0, 7)),
        "gender": ["male", "female"][int(rng.integers(0, 2))],
        "goalkeeper_zone": ["left", "center", "right"][int(rng.integers(0, 3))],
        "annotator_id": "fixture",
        "timestamp": "2024-01-01T00:00:00Z",
    }


MUTATIONS = [
    ("valid", lambda ann, rng: None),
    ("kick_underflow", lambda ann, rng: ann.update(
        kick_frame=int(rng.integers(0, 16)),
        run_start_frame=0,
        run_end_frame=0,
    )),
    ("kick_overrun", lambda ann, rng: ann.update(kick_frame=int(rng.integers(185, 200)))),
    ("run_reversed", lambda ann, rng: ann.update(
        run_start_frame=ann["run_end_frame"] + int(rng.integers(1, 10))
    )),
    ("run_into_kick", lambda ann, rng: ann.update(
        run_end_frame=ann["kick_frame"] + int(rng.integers(0, 4))
    )),
    ("negative_run_start", lambda ann, rng: ann.update(run_start_frame=-1)),
    ("bad_pitch_side", lambda ann, rng: ann.update(pitch_side="middle")),
    ("bad_freekick_side", lambda ann, rng: ann.update(freekick_side="behind_goal")),
    ("bad_distance", lambda ann, rng: ann.update(freekick_distance="very_far")),
    ("bad_foot", lambda ann, rng: ann.update(kicker_foot="both")),
    ("bad_label", lambda ann, rng: ann.update(bogp_label="top_corner")),
    ("bad_gender", lambda ann, rng: ann.update(gender="unknown")),
    ("barrier_out_of_range", lambda ann, rng: ann.update(barrier_config=15)),
    ("boundary_exact_fit", lambda ann, rng: ann.update(
        kick_frame=16, run_start_frame=0, run_end_frame=0
    )),
    ("boundary_last_legal_kick", lambda ann, rng: ann.update(
        kick_frame=184, run_start_frame=10, run_end_frame=100
    )),
]


def main() -> None:
    rng = np.random.default_rng(321)
    frame_count = 200
    clip = ClipRecord(
        clip_id="fixture",
        source_uri="fixture.npy",
        fps=30.0,
        frame_count=frame_count,
        width=1920,
        height=1080,
    )
    cases = []
    i = 0
    while len(cases) < 50:
        name, mutate = MUTATIONS[i % len(MUTATIONS)]
        i += 1
        ann_dict = base_annotation(rng)
        mutate(ann_dict, rng)
        ann = FreeKickAnnotation(**ann_dict)
        violations = validate_annotation(ann, clip)
        cases.append(
            {
                "name": f"{name}_{len(cases):02d}",
                "frame_count": frame_count,
                "annotation": ann_dict,
                "expected_ok": not violations,
                "expected_codes": sorted({v.code for v in violations}),
            }
        )
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps({"cases": cases}, indent=2, sort_keys=True) + "\n")
    ok = sum(1 for c in cases if c["expected_ok"])
    print(f"wrote {len(cases)} cases ({ok} valid, {len(cases) - ok} invalid) to {OUT}")


if __name__ == "__main__":
    main()
