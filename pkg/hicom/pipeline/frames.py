"""Per-frame crop extraction shared by training and evaluation."""

import logging
from typing import Callable, List, Tuple

import numpy as np

from hicom.config import AttributeConfig, CropPolicy
from hicom.core.crops import crop_eyes, crop_face
from hicom.detectors.body_face import prepare_body_input
from hicom.errors import UnusableFaceError
from hicom.models import FaceBox, FrameSample

logger = logging.getLogger(__name__)

CropFn = Callable[[np.ndarray, FaceBox], np.ndarray]


def usable_crops(frame: FrameSample, crop: CropFn) -> Tuple[List[int], np.ndarray]:
    """Crop every face of a loaded frame; unusable faces are skipped.

    Returns the indices of the kept faces and an N x H x W x 3 array.
    """
    kept, crops = [], []
    for index, face in enumerate(frame.faces):
        try:
            crops.append(crop(frame.image, face.box))
        except UnusableFaceError as e:
            logger.debug("Skipping face %s in frame %s: %s", face.face_id, frame.frame_id, e)
            continue
        kept.append(index)
    if not crops:
        return kept, np.zeros((0, 1, 1, 3), dtype=np.float32)
    return kept, np.stack(crops)


def face_crops(frame: FrameSample, policy: CropPolicy) -> Tuple[List[int], np.ndarray]:
    return usable_crops(frame, lambda image, box: crop_face(image, box, policy))


def eye_crops(frame: FrameSample, policy: CropPolicy) -> Tuple[List[int], np.ndarray]:
    return usable_crops(frame, lambda image, box: crop_eyes(image, box, policy))


def body_crops(frame: FrameSample, policy: CropPolicy, cfg: AttributeConfig) -> Tuple[List[int], np.ndarray]:
    """Body crops with the face blurred out."""
    return usable_crops(frame, lambda image, box: prepare_body_input(image, box, policy, cfg))


def to_uint8(crops: np.ndarray) -> np.ndarray:
    return np.clip(np.round(crops * 255.0), 0, 255).astype(np.uint8)


def from_uint8(crops: np.ndarray) -> np.ndarray:
    return crops.astype(np.float32) / 255.0
