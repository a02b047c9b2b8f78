import numpy as np
import pytest

from hicom.config import CropPolicy
from hicom.core.crops import body_region, crop_body, crop_eyes, crop_face, eye_region, resize_image
from hicom.errors import UnusableFaceError
from hicom.models import FaceBox

POLICY = CropPolicy(face_size=(32, 32), eye_size=(16, 32), body_size=(48, 32))


@pytest.fixture
def image():
    return np.random.default_rng(0).random((120, 200, 3)).astype(np.float32)


def test_crops_are_deterministic(image):
    box = FaceBox(50, 20, 30, 36)
    for crop in (crop_face, crop_eyes, crop_body):
        a, b = crop(image, box, POLICY), crop(image, box, POLICY)
        assert np.array_equal(a, b)


def test_output_sizes(image):
    box = FaceBox(50, 20, 30, 36)
    assert crop_face(image, box, POLICY).shape == (32, 32, 3)
    assert crop_eyes(image, box, POLICY).shape == (16, 32, 3)
    assert crop_body(image, box, POLICY).shape == (48, 32, 3)


def test_corner_box_is_clamped(image):
    box = FaceBox(-10, -10, 30, 30)
    assert crop_face(image, box, POLICY).shape == (32, 32, 3)
    assert crop_body(image, FaceBox(185, 100, 20, 30), POLICY).shape == (48, 32, 3)


def test_full_frame_box_body_is_frame_resized(image):
    box = FaceBox(0, 0, 200, 120)
    expected = resize_image(image, POLICY.body_size)
    assert np.array_equal(crop_body(image, box, POLICY), expected)


def test_eye_region_geometry():
    region = eye_region(FaceBox(10, 20, 40, 50), POLICY)
    assert region.x == pytest.approx(8.0)
    assert region.w == pytest.approx(44.0)
    assert region.y == 20
    assert region.h == pytest.approx(20.0)


def test_body_region_grows_downward():
    region = body_region(FaceBox(90, 10, 20, 20), (200, 200), POLICY)
    assert region.y == 10
    assert region.w == pytest.approx(60.0)
    assert region.h == pytest.approx(100.0)
    assert region.center[0] == pytest.approx(100.0)


@pytest.mark.parametrize("box", [FaceBox(10, 10, 3, 20), FaceBox(10, 10, 20, 3.5), FaceBox(198, 10, 20, 20)])
def test_degenerate_boxes_are_unusable(image, box):
    with pytest.raises(UnusableFaceError):
        crop_face(image, box, POLICY)
