from __future__ import annotations

import numpy as np
import pytest

from bogp.dataset import ClipRecord, FreeKickAnnotation


def make_annotation(**overrides) -> FreeKickAnnotation:
    base = dict(
        pitch_side="left",
        freekick_side="center_of_goal",
        freekick_distance="near_box",
        kicker_foot="right",
        bogp_label="left",
        kick_frame=100,
        run_start_frame=10,
        run_end_frame=80,
        outcome_reached_goal=True,
        barrier_config=4,
        gender="male",
        goalkeeper_zone="center",
        annotator_id="tester",
        timestamp="2024-01-01T00:00:00Z",
    )
    base.update(overrides)
    return FreeKickAnnotation(**base)


def make_clip(**overrides) -> ClipRecord:
    base = dict(
        clip_id="clip0001",
        source_uri="clips/clip0001.npy",
        fps=30.0,
        frame_count=200,
        width=1920,
        height=1080,
        viewpoint_ok=True,
        detection_ok=True,
    )
    base.update(overrides)
    return ClipRecord(**base)


@pytest.fixture
def annotation():
    return make_annotation()


@pytest.fixture
def clip():
    return make_clip()


@pytest.fixture(scope="session")
def mini_corpus():
    """Nine scripted clips (three per class), shared across tests."""
    from bogp.synthetic import scripted_corpus

    return scripted_corpus(n_clips=9, seed=21)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
