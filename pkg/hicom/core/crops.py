"""Deterministic face, eye and body crops."""

import math
from typing import Tuple

import numpy as np
from PIL import Image

from hicom.config import CropPolicy
from hicom.errors import UnusableFaceError
from hicom.models import FaceBox


def resize_image(image: np.ndarray, size: Tuple[int, int]) -> np.ndarray:
    """Bilinear resize of an H x W x C float image to (height, width)."""
    height, width = size
    if image.shape[0] == height and image.shape[1] == width:
        return image.astype(np.float32, copy=True)
    channels = [
        np.asarray(
            Image.fromarray(np.ascontiguousarray(image[..., c], dtype=np.float32)).resize(
                (width, height), Image.BILINEAR
            )
        )
        for c in range(image.shape[2])
    ]
    return np.clip(np.stack(channels, axis=-1), 0.0, 1.0).astype(np.float32)


def _pixel_bounds(box: FaceBox) -> Tuple[int, int, int, int]:
    return (
        int(math.floor(box.x)),
        int(math.floor(box.y)),
        int(math.ceil(box.x2)),
        int(math.ceil(box.y2)),
    )


def _check_box(box: FaceBox, image: np.ndarray, policy: CropPolicy) -> FaceBox:
    height, width = image.shape[:2]
    if box.w < policy.min_box or box.h < policy.min_box:
        raise UnusableFaceError(f"Face box {box.to_list()} is below {policy.min_box} pixels")
    clamped = box.clamp(width, height)
    if clamped is None or clamped.w < policy.min_box or clamped.h < policy.min_box:
        raise UnusableFaceError(f"Face box {box.to_list()} falls outside the {width}x{height} frame")
    return clamped


def crop_region(image: np.ndarray, region: FaceBox) -> np.ndarray:
    """Raw pixels of an already clamped region."""
    x1, y1, x2, y2 = _pixel_bounds(region)
    return image[y1:y2, x1:x2]


def crop_face(image: np.ndarray, box: FaceBox, policy: CropPolicy) -> np.ndarray:
    region = _check_box(box, image, policy)
    return resize_image(crop_region(image, region), policy.face_size)


def eye_region(box: FaceBox, policy: CropPolicy) -> FaceBox:
    """Upper part of the face box, widened by `eye_lateral_expand` of its width."""
    extra = box.w * policy.eye_lateral_expand
    return FaceBox(box.x - extra / 2.0, box.y, box.w + extra, box.h * policy.eye_height_frac)


def crop_eyes(image: np.ndarray, box: FaceBox, policy: CropPolicy) -> np.ndarray:
    _check_box(box, image, policy)
    height, width = image.shape[:2]
    region = eye_region(box, policy).clamp(width, height)
    if region is None:
        raise UnusableFaceError(f"No eye region left for box {box.to_list()}")
    return resize_image(crop_region(image, region), policy.eye_size)


def body_region(box: FaceBox, frame_size: Tuple[int, int], policy: CropPolicy) -> FaceBox:
    """Face box widened around its center and extended downward, clamped to the frame."""
    height, width = frame_size
    cx = box.center[0]
    w = box.w * policy.body_width_scale
    region = FaceBox(cx - w / 2.0, box.y, w, box.h * policy.body_height_scale)
    clamped = region.clamp(width, height)
    if clamped is None:
        raise UnusableFaceError(f"No body region left for box {box.to_list()}")
    return clamped


def face_box_in_region(box: FaceBox, region: FaceBox) -> FaceBox:
    """Face box in the pixel coordinates of a cropped region."""
    x1, y1, _, _ = _pixel_bounds(region)
    return box.shift(-x1, -y1)


def crop_body_raw(image: np.ndarray, box: FaceBox, policy: CropPolicy) -> Tuple[np.ndarray, FaceBox]:
    """Unresized body crop plus the face box expressed inside it."""
    clamped = _check_box(box, image, policy)
    region = body_region(clamped, image.shape[:2], policy)
    crop = crop_region(image, region)
    face_in_body = face_box_in_region(clamped, region).clamp(crop.shape[1], crop.shape[0])
    if face_in_body is None:
        raise UnusableFaceError(f"Face box {box.to_list()} not inside its body crop")
    return crop, face_in_body


def crop_body(image: np.ndarray, box: FaceBox, policy: CropPolicy) -> np.ndarray:
    crop, _ = crop_body_raw(image, box, policy)
    return resize_image(crop, policy.body_size)
