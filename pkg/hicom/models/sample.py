"""Face, frame and clip data models."""

from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Optional, Tuple

import numpy as np


class AgeClass(str, Enum):
    """Coarse age groups shared by the face and body attribute heads."""

    CHILD = "child"
    MIDDLE = "middle"
    SENIOR = "senior"

    @property
    def index(self) -> int:
        return list(AgeClass).index(self)


class GenderClass(str, Enum):
    """Gender classes predicted by the attribute heads."""

    MALE = "male"
    FEMALE = "female"

    @property
    def index(self) -> int:
        return list(GenderClass).index(self)


@dataclass(frozen=True)
class FaceBox:
    """Axis-aligned face box in pixels, (x, y) is the top-left corner."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"FaceBox needs positive size, got w={self.w} h={self.h}")

    @classmethod
    def from_list(cls, values) -> "FaceBox":
        x, y, w, h = values
        return cls(float(x), float(y), float(w), float(h))

    def to_list(self) -> list:
        return [self.x, self.y, self.w, self.h]

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def center(self) -> Tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def xyxy(self) -> Tuple[float, float, float, float]:
        return (self.x, self.y, self.x2, self.y2)

    def scale(self, sx: float, sy: float) -> "FaceBox":
        """Rescale into a resized frame."""
        return FaceBox(self.x * sx, self.y * sy, self.w * sx, self.h * sy)

    def shift(self, dx: float, dy: float) -> "FaceBox":
        return FaceBox(self.x + dx, self.y + dy, self.w, self.h)

    def dilate(self, factor: float) -> "FaceBox":
        """Grow around the center by `factor` in both dimensions."""
        cx, cy = self.center
        w, h = self.w * factor, self.h * factor
        return FaceBox(cx - w / 2.0, cy - h / 2.0, w, h)

    def clamp(self, width: int, height: int) -> Optional["FaceBox"]:
        """Intersect with the frame; None when nothing is left."""
        x1 = min(max(self.x, 0.0), float(width))
        y1 = min(max(self.y, 0.0), float(height))
        x2 = min(max(self.x2, 0.0), float(width))
        y2 = min(max(self.y2, 0.0), float(height))
        if x2 - x1 <= 0 or y2 - y1 <= 0:
            return None
        return FaceBox(x1, y1, x2 - x1, y2 - y1)

    def iou(self, other: "FaceBox") -> float:
        ix = max(0.0, min(self.x2, other.x2) - max(self.x, other.x))
        iy = max(0.0, min(self.y2, other.y2) - max(self.y, other.y))
        inter = ix * iy
        union = self.area + other.area - inter
        return inter / union if union > 0 else 0.0


@dataclass(frozen=True)
class FaceSample:
    """One face in one frame with its ground truth.

    Crops are not stored: they are derived from (frame image, box, CropPolicy)
    by `hicom.core.crops`, which keeps them deterministic.
    """

    face_id: str
    box: FaceBox
    label: int  # y_fa: 0 real, 1 fake
    gaze_locked: Optional[int] = None
    age: Optional[AgeClass] = None
    gender: Optional[GenderClass] = None
    # Attributes as rendered on the face when they differ from the body.
    face_age: Optional[AgeClass] = None
    face_gender: Optional[GenderClass] = None

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"Face {self.face_id}: label must be 0 or 1, got {self.label}")

    @property
    def is_fake(self) -> bool:
        return self.label == 1

    @property
    def face_attributes(self) -> Tuple[Optional[AgeClass], Optional[GenderClass]]:
        return (self.face_age or self.age, self.face_gender or self.gender)


@dataclass(frozen=True)
class FrameSample:
    """A frame image (H x W x 3, float in [0, 1]) and its ordered faces.

    `image` may be None for frames read from a manifest before their pixels
    are loaded; `image_path` then points to the raster on disk.
    """

    frame_id: str
    faces: Tuple[FaceSample, ...]
    image: Optional[np.ndarray] = None
    image_path: Optional[Path] = None

    @property
    def y_fr(self) -> int:
        """Frame label: 1 iff any face in the frame is fake."""
        return int(any(f.label == 1 for f in self.faces))

    @property
    def size(self) -> Tuple[int, int]:
        """(height, width) of the loaded image."""
        if self.image is None:
            raise ValueError(f"Frame {self.frame_id} has no image loaded")
        return (int(self.image.shape[0]), int(self.image.shape[1]))

    def with_image(self, image: np.ndarray) -> "FrameSample":
        return replace(self, image=image)


@dataclass(frozen=True)
class ClipSample:
    """A temporally ordered sequence of frames sharing face ids."""

    clip_id: str
    frames: Tuple[FrameSample, ...]
    fps: float = 25.0
    truth_path: Optional[Path] = None
    face_ids: Tuple[str, ...] = field(init=False)

    def __post_init__(self):
        if not self.frames:
            raise ValueError(f"Clip {self.clip_id} has no frames")
        ids = tuple(f.face_id for f in self.frames[0].faces)
        for frame in self.frames[1:]:
            if tuple(f.face_id for f in frame.faces) != ids:
                raise ValueError(
                    f"Clip {self.clip_id}: face ids differ in frame {frame.frame_id}"
                )
        object.__setattr__(self, "face_ids", ids)

    def __len__(self) -> int:
        return len(self.frames)
