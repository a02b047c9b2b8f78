"""Generative description of a synthetic multi-face scene."""

from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import FrozenSet, Optional, Tuple

from hicom.models.sample import AgeClass, GenderClass


class AnomalyKind(str, Enum):
    """Anomalies the generator can inject into a fake face, one per cue."""

    MOTION_JITTER = "motion_jitter"
    APPEARANCE_MISMATCH = "appearance_mismatch"
    GAZE_OUTLIER = "gaze_outlier"
    BODY_FACE_MISMATCH = "body_face_mismatch"


class PerturbationKind(str, Enum):
    """Whole-frame robustness transforms."""

    COLOR_MANIPULATION = "color_manipulation"
    EDGE_MANIPULATION = "edge_manipulation"
    BLOCKWISE_DISTORTION = "blockwise_distortion"
    IMAGE_CORRUPTION = "image_corruption"
    CONVOLUTION_MASK = "convolution_mask"
    EXTERNAL_EFFECTS = "external_effects"


class GazeMode(str, Enum):
    """Scene-wide gaze behaviour of the real faces."""

    CAMERA = "camera"        # everyone looks at the camera
    ELSEWHERE = "elsewhere"  # everyone looks away; the gaze rule abstains


@dataclass(frozen=True)
class FaceSpec:
    """One actor: identity cues, placement, and injected anomalies."""

    age: AgeClass
    gender: GenderClass
    x: float  # head box top-left at t=0
    y: float
    width: float
    hue: float  # skin hue in [0, 1)
    illumination: float = 1.0
    resolution: float = 1.0  # 1.0 = full detail, lower = downsampled face
    gaze_offset: Optional[float] = None  # degrees; None = looking at the camera
    sway_phase: float = 0.0
    sway_amplitude: float = 2.0
    fake: bool = False
    anomalies: FrozenSet[AnomalyKind] = field(default_factory=frozenset)
    anomaly_strength: float = 1.0
    # Rendered face attributes; differ from (age, gender) under body_face_mismatch.
    face_age: Optional[AgeClass] = None
    face_gender: Optional[GenderClass] = None

    def __post_init__(self):
        if self.fake and not self.anomalies:
            raise ValueError("A fake face must carry at least one anomaly kind")
        if not self.fake and self.anomalies:
            raise ValueError("A real face carries no anomalies")

    @property
    def height(self) -> float:
        return self.width * 1.25

    @property
    def gaze_locked(self) -> int:
        return int(self.gaze_offset is None)

    @property
    def rendered_age(self) -> AgeClass:
        return self.face_age or self.age

    @property
    def rendered_gender(self) -> GenderClass:
        return self.face_gender or self.gender

    def to_dict(self) -> dict:
        data = asdict(self)
        data["anomalies"] = sorted(a.value for a in self.anomalies)
        for key in ("age", "gender", "face_age", "face_gender"):
            data[key] = data[key].value if data[key] is not None else None
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "FaceSpec":
        data = dict(data)
        data["anomalies"] = frozenset(AnomalyKind(a) for a in data.get("anomalies", []))
        data["age"] = AgeClass(data["age"])
        data["gender"] = GenderClass(data["gender"])
        data["face_age"] = AgeClass(data["face_age"]) if data.get("face_age") else None
        data["face_gender"] = GenderClass(data["face_gender"]) if data.get("face_gender") else None
        return cls(**data)


@dataclass(frozen=True)
class SceneSpec:
    """Seed-deterministic description of one synthetic clip.

    Generation is a pure function of this object; `seed` drives the residual
    randomness (background texture, jitter offsets).
    """

    seed: int
    faces: Tuple[FaceSpec, ...]
    n_frames: int = 8
    canvas: Tuple[int, int] = (256, 448)  # (height, width)
    fps: float = 25.0
    gaze_mode: GazeMode = GazeMode.CAMERA
    pan_speed: float = 1.5  # pixels per frame
    background_hue: float = 0.55

    def __post_init__(self):
        if not 2 <= len(self.faces) <= 8:
            raise ValueError(f"SceneSpec needs 2..8 faces, got {len(self.faces)}")
        if self.n_frames < 1:
            raise ValueError("SceneSpec needs at least one frame")

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def anomaly_kinds(self) -> FrozenSet[AnomalyKind]:
        kinds = set()
        for face in self.faces:
            kinds |= face.anomalies
        return frozenset(kinds)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "faces": [f.to_dict() for f in self.faces],
            "n_frames": self.n_frames,
            "canvas": list(self.canvas),
            "fps": self.fps,
            "gaze_mode": self.gaze_mode.value,
            "pan_speed": self.pan_speed,
            "background_hue": self.background_hue,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SceneSpec":
        return cls(
            seed=int(data["seed"]),
            faces=tuple(FaceSpec.from_dict(f) for f in data["faces"]),
            n_frames=int(data["n_frames"]),
            canvas=tuple(data["canvas"]),
            fps=float(data["fps"]),
            gaze_mode=GazeMode(data["gaze_mode"]),
            pan_speed=float(data["pan_speed"]),
            background_hue=float(data["background_hue"]),
        )
