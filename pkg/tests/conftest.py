"""Shared fixtures: a tiny configuration and a tiny generated dataset."""

from pathlib import Path

import pytest

from hicom.config import Config
from hicom.synth import build_dataset

TINY = {
    "profile": "desk",
    "seed": 0,
    "crops": {"face_size": [32, 32], "eye_size": [16, 32], "body_size": [48, 32]},
    "scene_motion": {"input_size": [64, 112], "T": 4, "n_scales": 2, "embed_dim": 16, "width": 8},
    "inter_face": {"patch": 8, "width": 16, "heads": 2, "depth": 1, "embed_dim": 16, "pair_cap": 8},
    "gaze": {"width": 4},
    "attributes": {"width": 4},
    "optimizer": {"epochs": 1, "batch_size": 2, "frame_stride": 2},
    "synth": {"n_clips": 10, "n_frames": 4, "canvas": [128, 224]},
}


@pytest.fixture(scope="session")
def tiny_overrides() -> dict:
    return TINY


@pytest.fixture
def tiny_config(tmp_path) -> Config:
    return Config(tmp_path / "missing.toml", overrides=TINY)


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory) -> Path:
    """Ten clips (8 train / 1 val / 1 test), built once per session."""
    root = tmp_path_factory.mktemp("data")
    config = Config(root / "missing.toml", overrides=TINY)
    build_dataset(root, config.synth, master_seed=0)
    return root
