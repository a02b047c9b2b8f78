import numpy as np
import pytest

from hicom.models import ClipSample, FaceBox, FaceSample, FrameSample, PerturbationKind
from hicom.pipeline.evaluation import perturb_clip
from hicom.synth import apply_perturbation, parse_severities, perturbation_grid
from hicom.synth.perturb import perturbation_rng, shuffle_rectangle


@pytest.fixture
def image():
    return np.random.default_rng(0).random((64, 96, 3)).astype(np.float32)


@pytest.mark.parametrize("kind", list(PerturbationKind))
def test_severity_zero_is_identity(image, kind):
    assert np.array_equal(apply_perturbation(image, kind, 0), image)


@pytest.mark.parametrize("kind", list(PerturbationKind))
def test_same_inputs_same_output(image, kind):
    a = apply_perturbation(image, kind, 3, seed=4)
    b = apply_perturbation(image, kind, 3, seed=4)
    assert np.array_equal(a, b)
    assert a.shape == image.shape
    assert a.dtype == np.float32
    assert a.min() >= 0.0 and a.max() <= 1.0
    assert not np.array_equal(a, image)


def test_blockwise_preserves_pixel_multiset(image):
    for severity in range(1, 6):
        out, (y, x, h, w) = shuffle_rectangle(image, severity, perturbation_rng(PerturbationKind.BLOCKWISE_DISTORTION, severity, 0))
        before = np.sort(image[y : y + h, x : x + w].reshape(-1, 3), axis=0)
        after = np.sort(out[y : y + h, x : x + w].reshape(-1, 3), axis=0)
        assert np.array_equal(before, after)
        outside = np.ones(image.shape[:2], dtype=bool)
        outside[y : y + h, x : x + w] = False
        assert np.array_equal(out[outside], image[outside])


def test_severity_out_of_range(image):
    with pytest.raises(ValueError):
        apply_perturbation(image, "color_manipulation", 6)
    with pytest.raises(ValueError):
        apply_perturbation(image, "not_a_kind", 1)


def test_parse_severities():
    assert parse_severities("mid") == [3]
    assert parse_severities("all") == [1, 2, 3, 4, 5]
    assert parse_severities("5,1,3") == [1, 3, 5]
    with pytest.raises(ValueError):
        parse_severities("7")
    with pytest.raises(ValueError):
        parse_severities("high")
    assert len(perturbation_grid([3])) == 6


def test_perturbing_a_clip_keeps_labels_and_boxes(image):
    faces = (FaceSample("f0", FaceBox(4, 4, 20, 24), 1), FaceSample("f1", FaceBox(50, 4, 20, 24), 0))
    clip = ClipSample("c", (FrameSample("000", faces, image=image), FrameSample("001", faces, image=image)))
    out = perturb_clip(clip, PerturbationKind.EXTERNAL_EFFECTS, 3, seed=0)
    assert [f.faces for f in out.frames] == [f.faces for f in clip.frames]
    assert not np.array_equal(out.frames[0].image, image)
