from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bogp.dataset import (
    EXCLUDED,
    ClipRecord,
    ExclusionReason,
    LabelSpace,
    ManifestInputError,
    apply_exclusion_filters,
    encode_metadata,
    project_label,
    stratified_kfold,
    validate_annotation,
)
from bogp.manifest import read_manifest, record_from_dict, record_to_dict, write_manifest

from conftest import make_annotation, make_clip


class TestValidateAnnotation:
    def test_valid_annotation_passes(self, annotation, clip):
        assert validate_annotation(annotation, clip) == []

    def test_kick_window_underflow(self, clip):
        ann = make_annotation(kick_frame=10, run_start_frame=1, run_end_frame=5)
        violations = validate_annotation(ann, clip)
        assert any("underflows frame 0" in v.message for v in violations)

    def test_reversed_run_interval(self, clip):
        ann = make_annotation(run_start_frame=50, run_end_frame=40)
        violations = validate_annotation(ann, clip)
        assert any(v.message == "run interval reversed" for v in violations)

    def test_kick_window_overrun(self):
        clip = make_clip(frame_count=110)
        ann = make_annotation(kick_frame=100)
        violations = validate_annotation(ann, clip)
        assert any("overruns the clip end" in v.message for v in violations)

    def test_kick_window_boundary_fits_exactly(self):
        # kick=16 in a 32-frame clip: window is 0..31, just legal.
        clip = make_clip(frame_count=32)
        ann = make_annotation(kick_frame=16, run_start_frame=0, run_end_frame=0)
        assert validate_annotation(ann, clip) == []

    def test_all_violations_reported_not_just_first(self, clip):
        ann = make_annotation(
            run_start_frame=50,
            run_end_frame=40,
            kick_frame=10,
            pitch_side="up",
        )
        violations = validate_annotation(ann, clip)
        assert len(violations) >= 3

    def test_run_must_end_before_kick(self, clip):
        ann = make_annotation(run_end_frame=100, kick_frame=100)
        violations = validate_annotation(ann, clip)
        assert any("end before the kick" in v.message for v in violations)


def _flagged_clip(i, viewpoint_ok=True, detection_ok=True, frame_count=200, reached=True):
    return make_clip(
        clip_id=f"clip{i:04d}",
        frame_count=frame_count,
        viewpoint_ok=viewpoint_ok,
        detection_ok=detection_ok,
        annotation=make_annotation(
            outcome_reached_goal=reached,
            kick_frame=min(100, frame_count - 16),
            run_start_frame=1,
            run_end_frame=2,
        ),
    )


class TestExclusionCascade:
    def test_synthetic_cascade_counts(self):
        # 10 clips: 2 bad viewpoint, 1 too short, 1 missed goal -> 10,8,8,7,6
        manifest = (
            [_flagged_clip(i) for i in range(6)]
            + [_flagged_clip(6, viewpoint_ok=False), _flagged_clip(7, viewpoint_ok=False)]
            + [_flagged_clip(8, frame_count=31)]
            + [_flagged_clip(9, reached=False)]
        )
        kept, excluded, counts = apply_exclusion_filters(manifest)
        assert counts == [10, 8, 8, 7, 6]
        assert len(kept) == 6 and len(excluded) == 4
        assert all(rec.exclusion is None for rec in kept)

    def test_short_clip_gets_min_frames_code(self):
        kept, excluded, _ = apply_exclusion_filters([_flagged_clip(0, frame_count=31)])
        assert kept == []
        assert excluded[0].exclusion.code == "MIN_FRAMES"

    def test_threshold_is_exactly_32(self):
        kept, _, _ = apply_exclusion_filters([_flagged_clip(0, frame_count=32)])
        assert len(kept) == 1

    def test_first_failing_rule_wins(self):
        # Bad viewpoint AND too short: the viewpoint code is assigned.
        rec = _flagged_clip(0, viewpoint_ok=False, frame_count=10)
        _, excluded, _ = apply_exclusion_filters([rec])
        assert excluded[0].exclusion.code == "VIEWPOINT"

    def test_missing_flags_are_hard_errors(self):
        rec = make_clip(viewpoint_ok=None)
        with pytest.raises(ManifestInputError) as err:
            apply_exclusion_filters([rec])
        assert "viewpoint" in str(err.value)

    def test_idempotent_on_kept_output(self):
        manifest = [
            _flagged_clip(i, viewpoint_ok=(i % 4 != 0), frame_count=200 if i % 3 else 40)
            for i in range(12)
        ]
        kept, _, _ = apply_exclusion_filters(manifest)
        kept2, excluded2, counts2 = apply_exclusion_filters(kept)
        assert [r.clip_id for r in kept2] == [r.clip_id for r in kept]
        assert excluded2 == []
        assert counts2 == [len(kept)] * 5

    def test_already_excluded_records_pass_through(self):
        rec = make_clip(exclusion=ExclusionReason("VIEWPOINT", "x"))
        kept, excluded, counts = apply_exclusion_filters([rec])
        assert kept == [] and len(excluded) == 1
        assert counts == [0, 0, 0, 0, 0]


class TestEncodeMetadata:
    def test_declared_layout_example_one(self):
        ann = make_annotation(
            pitch_side="left",
            freekick_side="center_of_goal",
            freekick_distance="near_box",
            kicker_foot="right",
        )
        assert encode_metadata(ann).tolist() == [0, 0, 1, 0, 0, 1]

    def test_declared_layout_example_two(self):
        ann = make_annotation(
            pitch_side="right",
            freekick_side="left_of_goal",
            freekick_distance="far_box",
            kicker_foot="left",
        )
        assert encode_metadata(ann).tolist() == [1, 1, 0, 0, 1, 0]

    def test_one_hot_block_sums_to_one(self):
        for side in ("left_of_goal", "center_of_goal", "right_of_goal"):
            vec = encode_metadata(make_annotation(freekick_side=side))
            assert vec[1:4].sum() == 1.0

    def test_injective_over_all_24_combinations(self):
        seen = set()
        combos = itertools.product(
            ("left", "right"),
            ("left_of_goal", "center_of_goal", "right_of_goal"),
            ("near_box", "far_box"),
            ("left", "right"),
        )
        for pitch, side, dist, foot in combos:
            vec = encode_metadata(
                make_annotation(
                    pitch_side=pitch,
                    freekick_side=side,
                    freekick_distance=dist,
                    kicker_foot=foot,
                )
            )
            seen.add(tuple(vec.tolist()))
        assert len(seen) == 24


class TestProjectLabel:
    def test_three_class_center(self):
        assert project_label(make_annotation(bogp_label="center"), LabelSpace.three_class()) == 1

    def test_two_class_center_excluded(self):
        assert project_label(make_annotation(bogp_label="center"), LabelSpace.two_class()) == EXCLUDED

    def test_two_class_right(self):
        assert project_label(make_annotation(bogp_label="right"), LabelSpace.two_class()) == 1

    def test_two_class_corpus_size(self):
        labels = ["left"] * 187 + ["right"] * 181 + ["center"] * 50
        two = [
            project_label(make_annotation(bogp_label=l), LabelSpace.two_class())
            for l in labels
        ]
        assert sum(1 for t in two if t != EXCLUDED) == 187 + 181

    def test_unknown_label_raises(self):
        ann = make_annotation(bogp_label="top")
        with pytest.raises(ValueError):
            project_label(ann, LabelSpace.three_class())


class TestStratifiedKFold:
    def test_perfect_divisibility(self):
        items = [(f"i{i}", i % 2) for i in range(20)]
        folds = stratified_kfold(items, 10, repeat_seed=5)
        for fold in folds:
            labels = [int(i[1:]) % 2 for i in fold]
            assert sorted(labels) == [0, 1]

    def test_partition_property(self):
        items = [(f"i{i}", i % 3) for i in range(29)]
        folds = stratified_kfold(items, 7, repeat_seed=9)
        everything = [i for fold in folds for i in fold]
        assert sorted(everything) == sorted(i for i, _ in items)
        assert len(set(everything)) == len(everything)

    def test_paper_class_distribution(self):
        items = (
            [(f"l{i}", 0) for i in range(187)]
            + [(f"r{i}", 1) for i in range(181)]
            + [(f"c{i}", 2) for i in range(50)]
        )
        folds = stratified_kfold(items, 10, repeat_seed=0)
        for fold in folds:
            left = sum(1 for i in fold if i.startswith("l"))
            right = sum(1 for i in fold if i.startswith("r"))
            center = sum(1 for i in fold if i.startswith("c"))
            assert left in (18, 19)
            assert right in (18, 19)
            assert center == 5

    def test_same_seed_identical_folds(self):
        items = [(f"i{i}", i % 3) for i in range(40)]
        assert stratified_kfold(items, 10, 77) == stratified_kfold(items, 10, 77)

    def test_different_seed_differs(self):
        items = [(f"i{i}", i % 2) for i in range(40)]
        assert stratified_kfold(items, 10, 1) != stratified_kfold(items, 10, 2)

    def test_k_larger_than_items_raises(self):
        with pytest.raises(ValueError):
            stratified_kfold([("a", 0), ("b", 1)], 3, 0)

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError):
            stratified_kfold([("a", 0), ("a", 1), ("b", 0)], 2, 0)

    @settings(max_examples=40, deadline=None)
    @given(
        labels=st.lists(st.integers(min_value=0, max_value=3), min_size=6, max_size=60),
        k=st.integers(min_value=2, max_value=6),
        seed=st.integers(min_value=0, max_value=2**31),
    )
    def test_partition_property_random(self, labels, k, seed):
        if k > len(labels):
            return
        items = [(f"x{i}", lab) for i, lab in enumerate(labels)]
        folds = stratified_kfold(items, k, seed)
        flat = [i for fold in folds for i in fold]
        assert sorted(flat) == sorted(i for i, _ in items)
        # per-class counts within +-1 of each other across folds
        for label in set(labels):
            per_fold = [
                sum(1 for i in fold if labels[int(i[1:])] == label) for fold in folds
            ]
            assert max(per_fold) - min(per_fold) <= 1


class TestManifestRoundTrip:
    def test_unknown_fields_preserved(self, tmp_path):
        rec = make_clip(extra={"scout_notes": "rainy", "camera_rig": 3})
        path = tmp_path / "m.jsonl"
        write_manifest(path, [rec])
        loaded = read_manifest(path)[0]
        assert loaded.extra == {"scout_notes": "rainy", "camera_rig": 3}
        # and a second round-trip emits the same line
        d1 = record_to_dict(rec)
        d2 = record_to_dict(record_from_dict(d1))
        assert d1 == d2

    def test_annotation_round_trip(self, tmp_path):
        rec = make_clip(annotation=make_annotation(kicker_track_id="t12"))
        path = tmp_path / "m.jsonl"
        write_manifest(path, [rec])
        loaded = read_manifest(path)[0]
        assert loaded.annotation == rec.annotation

    def test_exclusion_round_trip(self, tmp_path):
        rec = make_clip(exclusion=ExclusionReason("MIN_FRAMES", "short"))
        path = tmp_path / "m.jsonl"
        write_manifest(path, [rec])
        assert read_manifest(path)[0].exclusion == rec.exclusion

    def test_bad_record_reports_line(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text('{"clip_id": "x"}\n', encoding="utf-8")
        with pytest.raises(ValueError, match="m.jsonl:1"):
            read_manifest(path)

    def test_schema_accepts_any_resolution(self):
        rec = make_clip(width=640, height=360)
        assert rec.width == 640

    def test_invalid_dimensions_rejected(self):
        with pytest.raises(ValueError):
            make_clip(width=0)
        with pytest.raises(ValueError):
            make_clip(frame_count=-1)
