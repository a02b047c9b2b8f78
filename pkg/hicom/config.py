"""Configuration management for hicom."""

import copy
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Tuple

from hicom.errors import ConfigError

# Use tomllib for Python 3.11+, tomli for older versions
if sys.version_info >= (3, 11):
    import tomllib
else:
    try:
        import tomli as tomllib
    except ImportError:
        tomllib = None  # type: ignore


Size = Tuple[int, int]


@dataclass(frozen=True)
class CropPolicy:
    """Crop geometry and module input sizes, all (height, width)."""

    face_size: Size = (224, 224)
    eye_size: Size = (224, 224)
    body_size: Size = (224, 224)
    eye_height_frac: float = 0.4
    eye_lateral_expand: float = 0.1
    body_width_scale: float = 3.0
    body_height_scale: float = 5.0
    min_box: float = 4.0


@dataclass(frozen=True)
class SceneMotionConfig:
    input_size: Size = (720, 1280)
    T: int = 8
    n_scales: int = 3
    roi_output: int = 7
    embed_dim: int = 128
    width: int = 16
    lambda_fa: float = 0.5
    lambda_fr: float = 0.5

    def __post_init__(self):
        if self.T < 1 or self.n_scales < 1:
            raise ConfigError("scene_motion: T and n_scales must be >= 1")
        if self.lambda_fa < 0 or self.lambda_fr < 0:
            raise ConfigError("scene_motion: loss weights must be >= 0")


@dataclass(frozen=True)
class InterFaceConfig:
    input_size: Size = (224, 224)
    patch: int = 16
    width: int = 64
    heads: int = 2
    depth: int = 4
    embed_dim: int = 64
    margin: float = 1.0
    lambda_comp: float = 0.3
    pair_cap: int = 32

    def __post_init__(self):
        if self.margin <= 0:
            raise ConfigError("inter_face: margin must be > 0")
        if self.lambda_comp < 0:
            raise ConfigError("inter_face: lambda_comp must be >= 0")
        if self.input_size[0] % self.patch or self.input_size[1] % self.patch:
            raise ConfigError("inter_face: input size must be a multiple of the patch size")


@dataclass(frozen=True)
class GazeConfig:
    input_size: Size = (224, 224)
    width: int = 16
    threshold: float = 0.5


@dataclass(frozen=True)
class AttributeConfig:
    face_size: Size = (224, 224)
    body_size: Size = (224, 224)
    width: int = 16
    blur_sigma_scale: float = 0.25
    max_face_fraction: float = 0.9
    confidence_floor: Optional[float] = None


@dataclass(frozen=True)
class FusionConfig:
    mode: str = "any_anomaly"
    m1_threshold: float = 0.5
    m2_threshold: float = 0.5
    label_threshold: float = 0.5
    # Human-study cue prevalences, renormalized to sum to one.
    weights: Tuple[float, float, float, float] = (0.342, 0.315, 0.250, 0.075)

    def __post_init__(self):
        if self.mode not in ("any_anomaly", "weighted_score"):
            raise ConfigError(f"fusion: unknown mode '{self.mode}'")
        if len(self.weights) != 4 or any(w < 0 for w in self.weights):
            raise ConfigError("fusion: need four non-negative weights")
        total = sum(self.weights)
        if total <= 0:
            raise ConfigError("fusion: weights sum to zero")
        object.__setattr__(self, "weights", tuple(float(w) / total for w in self.weights))


@dataclass(frozen=True)
class OptimizerConfig:
    lr: float = 1e-4
    epochs: int = 120
    decay_every: int = 10
    decay_factor: float = 1.0 / 3.0
    batch_size: int = 8
    # Per-frame modules train on every n-th frame of a clip.
    frame_stride: int = 1

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("optimizer: epochs must be >= 1")
        if self.lr <= 0:
            raise ConfigError("optimizer: lr must be > 0")
        if self.batch_size < 1 or self.frame_stride < 1:
            raise ConfigError("optimizer: batch_size and frame_stride must be >= 1")


@dataclass(frozen=True)
class SynthConfig:
    n_clips: int = 1000
    split_ratios: Tuple[float, float, float] = (0.8, 0.1, 0.1)
    n_frames: int = 8
    canvas: Size = (256, 448)
    fake_fraction: float = 0.6
    workers: int = 1

    def __post_init__(self):
        if abs(sum(self.split_ratios) - 1.0) > 1e-9:
            raise ConfigError("synth: split_ratios must sum to 1")


PROFILES = {
    "desk": {
        "crops": {"face_size": (64, 64), "eye_size": (32, 64), "body_size": (96, 64)},
        "scene_motion": {"input_size": (180, 320), "embed_dim": 64},
        "inter_face": {"input_size": (64, 64)},
        "optimizer": {"lr": 1e-3, "epochs": 15, "frame_stride": 4},
    },
    "full": {},
}

SECTIONS = {
    "crops": CropPolicy,
    "scene_motion": SceneMotionConfig,
    "inter_face": InterFaceConfig,
    "gaze": GazeConfig,
    "attributes": AttributeConfig,
    "fusion": FusionConfig,
    "optimizer": OptimizerConfig,
    "synth": SynthConfig,
}


def _build(cls, values: dict):
    """Instantiate a config dataclass, turning TOML lists into tuples."""
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"Unknown keys for [{cls.__name__}]: {', '.join(sorted(unknown))}")
    kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in values.items()}
    try:
        return cls(**kwargs)
    except TypeError as e:
        raise ConfigError(f"Invalid values for [{cls.__name__}]: {e}") from e


def section_from_dict(name: str, values: dict):
    """Rebuild one section from `Config.to_dict()` output (e.g. a checkpoint)."""
    if name not in SECTIONS:
        raise ConfigError(f"Unknown config section '{name}'")
    return _build(SECTIONS[name], values)


class Config:
    """Application configuration: a profile plus overrides from a TOML file."""

    DEFAULT_CONFIG_FILE = Path.home() / ".config" / "hicom" / "config.toml"
    DEFAULT_DATA_DIR = "data"
    DEFAULT_OUTPUT_DIR = "runs/default"

    def __init__(self, config_file: Optional[Path] = None, overrides: Optional[dict] = None):
        """Initialize configuration.

        Args:
            config_file: TOML file; defaults to ~/.config/hicom/config.toml
            overrides: already-parsed values layered over the file (CLI flags, tests)
        """
        self.config_file = Path(config_file) if config_file else self.DEFAULT_CONFIG_FILE
        self.config_error: Optional[str] = None
        self._config = self._load_config()
        if overrides:
            self._config = _merge(self._config, overrides)
        self.profile = self._config.get("profile", "desk")
        if self.profile not in PROFILES:
            raise ConfigError(f"Unknown profile '{self.profile}' (choose from {', '.join(PROFILES)})")
        self._sections = self._resolve_sections()

    def _load_config(self) -> dict:
        """Load configuration from file."""
        if not self.config_file.exists():
            self.config_error = f"Config file {self.config_file} not found, using defaults."
            return {}
        if tomllib is None:
            raise ConfigError("Config file found but tomli/tomllib not available")
        try:
            with open(self.config_file, "rb") as f:
                return tomllib.load(f)
        except Exception as e:
            raise ConfigError(f"Could not parse config file {self.config_file}: {e}") from e

    def _resolve_sections(self) -> dict:
        profile = PROFILES[self.profile]
        resolved = {}
        for name, cls in SECTIONS.items():
            values = dict(profile.get(name, {}))
            section = self._config.get(name, {})
            if not isinstance(section, dict):
                raise ConfigError(f"[{name}] must be a table")
            values.update(section)
            resolved[name] = _build(cls, values)

        # Module input sizes follow the crop policy.
        crops = resolved["crops"]
        resolved["inter_face"] = _build(
            InterFaceConfig, {**asdict(resolved["inter_face"]), "input_size": crops.face_size}
        )
        resolved["gaze"] = _build(GazeConfig, {**asdict(resolved["gaze"]), "input_size": crops.eye_size})
        resolved["attributes"] = _build(
            AttributeConfig,
            {**asdict(resolved["attributes"]), "face_size": crops.face_size, "body_size": crops.body_size},
        )
        return resolved

    @property
    def has_error(self) -> bool:
        """Check if loading the file produced a (non-fatal) problem."""
        return self.config_error is not None

    def get_error_message(self) -> str:
        """Get the configuration error message."""
        if not self.has_error:
            return ""
        msg = f"{self.config_error}\n\n"
        msg += "To customize, copy the example config:\n"
        msg += f"   mkdir -p {self.config_file.parent}\n"
        msg += f"   cp config.example.toml {self.config_file}"
        return msg

    @property
    def crops(self) -> CropPolicy:
        return self._sections["crops"]

    @property
    def scene_motion(self) -> SceneMotionConfig:
        return self._sections["scene_motion"]

    @property
    def inter_face(self) -> InterFaceConfig:
        return self._sections["inter_face"]

    @property
    def gaze(self) -> GazeConfig:
        return self._sections["gaze"]

    @property
    def attributes(self) -> AttributeConfig:
        return self._sections["attributes"]

    @property
    def fusion(self) -> FusionConfig:
        return self._sections["fusion"]

    @property
    def optimizer(self) -> OptimizerConfig:
        return self._sections["optimizer"]

    @property
    def synth(self) -> SynthConfig:
        return self._sections["synth"]

    @property
    def seed(self) -> int:
        return int(self._config.get("seed", 0))

    @property
    def data_dir(self) -> Path:
        return Path(os.path.expanduser(self._config.get("data_dir", self.DEFAULT_DATA_DIR)))

    @property
    def output_dir(self) -> Path:
        return Path(os.path.expanduser(self._config.get("output_dir", self.DEFAULT_OUTPUT_DIR)))

    @property
    def llm_endpoint(self) -> Optional[str]:
        return self._config.get("llm_endpoint")

    def with_overrides(self, overrides: dict) -> "Config":
        """Return a new Config with extra values layered on top."""
        clone = copy.copy(self)
        clone._config = _merge(self._config, overrides)
        clone.profile = clone._config.get("profile", self.profile)
        clone._sections = clone._resolve_sections()
        return clone

    def to_dict(self) -> dict:
        """Effective configuration, JSON/TOML friendly."""
        data = {
            "profile": self.profile,
            "seed": self.seed,
            "data_dir": str(self.data_dir),
            "output_dir": str(self.output_dir),
        }
        for name, section in self._sections.items():
            data[name] = {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(section).items()}
        return data


def _merge(base: dict, extra: dict) -> dict:
    merged = dict(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


# Global config instance
_config_instance: Optional[Config] = None


def get_config() -> Config:
    """Get or create the global config instance."""
    global _config_instance
    if _config_instance is None:
        _config_instance = Config()
    return _config_instance


def set_config(config: Config) -> None:
    """Install the config built by the CLI as the global instance."""
    global _config_instance
    _config_instance = config
