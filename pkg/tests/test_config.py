import pytest

from hicom.config import Config, FusionConfig, section_from_dict
from hicom.errors import ConfigError


def test_desk_profile_defaults(tmp_path):
    config = Config(tmp_path / "missing.toml")
    assert config.has_error
    assert "not found" in config.get_error_message()
    assert config.profile == "desk"
    assert config.optimizer.lr == 1e-3
    assert config.optimizer.epochs == 15
    assert config.optimizer.frame_stride == 4
    assert config.crops.face_size == (64, 64)
    # module inputs follow the crop policy
    assert config.inter_face.input_size == config.crops.face_size
    assert config.gaze.input_size == config.crops.eye_size
    assert config.attributes.body_size == config.crops.body_size


def test_full_profile(tmp_path):
    config = Config(tmp_path / "missing.toml", overrides={"profile": "full"})
    assert config.optimizer.lr == 1e-4
    assert config.optimizer.epochs == 120
    assert config.scene_motion.input_size == (720, 1280)
    assert config.crops.face_size == (224, 224)


def test_toml_file(tmp_path):
    path = tmp_path / "config.toml"
    path.write_text(
        'profile = "desk"\nseed = 7\ndata_dir = "somewhere"\n'
        "[fusion]\nmode = \"weighted_score\"\n"
        "[synth]\nn_clips = 20\ncanvas = [128, 224]\n"
    )
    config = Config(path)
    assert not config.has_error
    assert config.seed == 7
    assert config.data_dir.name == "somewhere"
    assert config.fusion.mode == "weighted_score"
    assert config.synth.canvas == (128, 224)
    assert config.synth.n_clips == 20


def test_bad_values_raise(tmp_path):
    with pytest.raises(ConfigError):
        Config(tmp_path / "missing.toml", overrides={"fusion": {"bogus": 1}})
    with pytest.raises(ConfigError):
        Config(tmp_path / "missing.toml", overrides={"fusion": {"mode": "majority"}})
    with pytest.raises(ConfigError):
        Config(tmp_path / "missing.toml", overrides={"profile": "cluster"})
    broken = tmp_path / "broken.toml"
    broken.write_text("[fusion\n")
    with pytest.raises(ConfigError):
        Config(broken)


def test_fusion_weights_are_renormalized():
    weights = FusionConfig(weights=(2.0, 1.0, 1.0, 0.0)).weights
    assert weights == pytest.approx((0.5, 0.25, 0.25, 0.0))
    assert sum(FusionConfig().weights) == pytest.approx(1.0)


def test_with_overrides_leaves_original(tmp_path):
    config = Config(tmp_path / "missing.toml")
    other = config.with_overrides({"seed": 3, "optimizer": {"epochs": 2}})
    assert other.seed == 3 and other.optimizer.epochs == 2
    assert other.optimizer.lr == 1e-3
    assert config.seed == 0 and config.optimizer.epochs == 15


def test_to_dict_rebuilds_sections(tiny_config):
    data = tiny_config.to_dict()
    for name in ("crops", "scene_motion", "inter_face", "gaze", "attributes", "optimizer", "synth"):
        assert section_from_dict(name, data[name]) == getattr(tiny_config, name)
    fusion = section_from_dict("fusion", data["fusion"])
    assert fusion.mode == tiny_config.fusion.mode
    assert fusion.weights == pytest.approx(tiny_config.fusion.weights)
    with pytest.raises(ConfigError):
        section_from_dict("nope", {})
