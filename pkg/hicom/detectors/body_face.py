"""M4: face-body age/gender consistency.

Age and gender are predicted twice: from the face crop and from the body
crop with the face blurred away. Any disagreement flags the face.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn as nn
from scipy.ndimage import gaussian_filter

from hicom.config import AttributeConfig, CropPolicy
from hicom.core.crops import crop_body_raw, resize_image
from hicom.detectors.backbone import SmallResNet, to_batch
from hicom.errors import UnusableFaceError
from hicom.models import AgeClass, FaceBox, GenderClass

AGES = list(AgeClass)
GENDERS = list(GenderClass)
NO_EVIDENCE = "no-evidence"


@dataclass(frozen=True)
class AttributeGuess:
    """Age and gender from one source with their softmax confidences."""

    age: AgeClass
    gender: GenderClass
    age_confidence: Tuple[float, ...]
    gender_confidence: Tuple[float, ...]

    @property
    def age_score(self) -> float:
        return max(self.age_confidence)

    @property
    def gender_score(self) -> float:
        return max(self.gender_confidence)


@dataclass(frozen=True)
class AttributePrediction:
    face: AttributeGuess
    body: Optional[AttributeGuess]


class AttributeNet(nn.Module):
    """Residual convnet with independent age (3-way) and gender (2-way) heads."""

    def __init__(self, width: int = 16):
        super().__init__()
        self.backbone = SmallResNet(width)
        self.age_head = nn.Linear(self.backbone.out_features, len(AGES))
        self.gender_head = nn.Linear(self.backbone.out_features, len(GENDERS))

    def forward(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        features = self.backbone(x)
        return self.age_head(features), self.gender_head(features)


def block_face_in_body(
    body_crop: np.ndarray,
    face_box: FaceBox,
    sigma_scale: float = 0.25,
    max_face_fraction: float = 0.9,
) -> np.ndarray:
    """Gaussian-blur the face box inside a body crop; other pixels stay untouched.

    sigma = sigma_scale * face width, kernel truncated at 3 sigma.
    """
    height, width = body_crop.shape[:2]
    inside = face_box.clamp(width, height)
    if inside is None:
        raise UnusableFaceError("face box lies outside the body crop")
    if inside.area > max_face_fraction * width * height:
        raise UnusableFaceError("face covers too much of the body crop to leave body evidence")
    x1, y1 = int(math.floor(inside.x)), int(math.floor(inside.y))
    x2, y2 = int(math.ceil(inside.x2)), int(math.ceil(inside.y2))
    sigma = sigma_scale * face_box.w
    out = np.array(body_crop, dtype=np.float32, copy=True)
    patch = out[y1:y2, x1:x2]
    out[y1:y2, x1:x2] = gaussian_filter(patch, sigma=(sigma, sigma, 0), truncate=3.0, mode="reflect")
    return out


def prepare_body_input(image: np.ndarray, box: FaceBox, policy: CropPolicy, cfg: AttributeConfig) -> np.ndarray:
    """Body crop with the face blocked, resized to the attribute input size."""
    crop, face_in_body = crop_body_raw(image, box, policy)
    blocked = block_face_in_body(crop, face_in_body, cfg.blur_sigma_scale, cfg.max_face_fraction)
    return resize_image(blocked, policy.body_size)


@torch.no_grad()
def predict_attributes(net: AttributeNet, images: np.ndarray) -> List[AttributeGuess]:
    images = np.asarray(images)
    if images.ndim != 4 or images.shape[0] == 0 or min(images.shape[1:3]) < 8:
        raise UnusableFaceError("attribute classifier needs a non-empty batch of images at least 8 px")
    net.eval()
    age_logits, gender_logits = net(to_batch(images))
    age_p = torch.softmax(age_logits, dim=-1).numpy().astype(float)
    gender_p = torch.softmax(gender_logits, dim=-1).numpy().astype(float)
    return [
        AttributeGuess(
            age=AGES[int(a.argmax())],
            gender=GENDERS[int(g.argmax())],
            age_confidence=tuple(a.tolist()),
            gender_confidence=tuple(g.tolist()),
        )
        for a, g in zip(age_p, gender_p)
    ]


def classify_age(net: AttributeNet, images: np.ndarray) -> List[Tuple[AgeClass, Tuple[float, ...]]]:
    return [(g.age, g.age_confidence) for g in predict_attributes(net, images)]


def classify_gender(net: AttributeNet, images: np.ndarray) -> List[Tuple[GenderClass, Tuple[float, ...]]]:
    return [(g.gender, g.gender_confidence) for g in predict_attributes(net, images)]


def mismatch_rule(pred: AttributePrediction, confidence_floor: Optional[float] = None) -> Tuple[int, str]:
    """1 iff face and body disagree on age or on gender.

    With a confidence floor, a disagreement only counts when both sides are
    at least that confident. Without body evidence the verdict is 0.
    """
    if pred.body is None:
        return 0, NO_EVIDENCE
    face, body = pred.face, pred.body

    def confident(a: float, b: float) -> bool:
        return confidence_floor is None or (a >= confidence_floor and b >= confidence_floor)

    reasons = []
    if face.age != body.age and confident(face.age_score, body.age_score):
        reasons.append("age")
    if face.gender != body.gender and confident(face.gender_score, body.gender_score):
        reasons.append("gender")
    return int(bool(reasons)), ",".join(reasons)


def attributes_mismatch(face: Sequence, body: Sequence) -> int:
    """The rule on plain (age, gender) pairs, e.g. generator truth."""
    return int(tuple(face) != tuple(body))
