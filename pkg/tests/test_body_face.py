import itertools

import numpy as np
import pytest
import torch

from hicom.config import AttributeConfig, CropPolicy
from hicom.detectors.body_face import (
    NO_EVIDENCE,
    AttributeGuess,
    AttributeNet,
    AttributePrediction,
    block_face_in_body,
    classify_age,
    classify_gender,
    mismatch_rule,
    predict_attributes,
    prepare_body_input,
)
from hicom.errors import UnusableFaceError
from hicom.models import AgeClass, FaceBox, GenderClass

CLASSES = list(itertools.product(AgeClass, GenderClass))


def guess(age, gender, confidence=0.9):
    ages = tuple(confidence if a is age else (1 - confidence) / 2 for a in AgeClass)
    genders = tuple(confidence if g is gender else 1 - confidence for g in GenderClass)
    return AttributeGuess(age, gender, ages, genders)


def test_mismatch_truth_table():
    assert len(CLASSES) * len(CLASSES) == 36
    for (fa, fg), (ba, bg) in itertools.product(CLASSES, CLASSES):
        flag, _ = mismatch_rule(AttributePrediction(guess(fa, fg), guess(ba, bg)))
        assert flag == int(fa != ba or fg != bg)


def test_mismatch_is_symmetric():
    for face, body in itertools.product(CLASSES, CLASSES):
        a = mismatch_rule(AttributePrediction(guess(*face), guess(*body)))[0]
        b = mismatch_rule(AttributePrediction(guess(*body), guess(*face)))[0]
        assert a == b


def test_mismatch_examples():
    assert mismatch_rule(AttributePrediction(guess(AgeClass.CHILD, GenderClass.FEMALE), guess(AgeClass.CHILD, GenderClass.FEMALE)))[0] == 0
    flag, note = mismatch_rule(AttributePrediction(guess(AgeClass.CHILD, GenderClass.MALE), guess(AgeClass.SENIOR, GenderClass.MALE)))
    assert (flag, note) == (1, "age")
    flag, note = mismatch_rule(AttributePrediction(guess(AgeClass.MIDDLE, GenderClass.FEMALE), guess(AgeClass.MIDDLE, GenderClass.MALE)))
    assert (flag, note) == (1, "gender")


def test_missing_body_is_no_evidence():
    assert mismatch_rule(AttributePrediction(guess(AgeClass.CHILD, GenderClass.MALE), None)) == (0, NO_EVIDENCE)


def test_confidence_floor_suppresses_unsure_mismatch():
    pred = AttributePrediction(guess(AgeClass.CHILD, GenderClass.MALE, 0.9), guess(AgeClass.SENIOR, GenderClass.MALE, 0.5))
    assert mismatch_rule(pred)[0] == 1
    assert mismatch_rule(pred, confidence_floor=0.6)[0] == 0
    assert mismatch_rule(pred, confidence_floor=0.4)[0] == 1


def test_block_face_leaves_outside_pixels_untouched():
    crop = np.random.default_rng(0).random((60, 40, 3)).astype(np.float32)
    box = FaceBox(10.0, 5.0, 16.0, 20.0)
    out = block_face_in_body(crop, box)
    mask = np.ones(crop.shape[:2], dtype=bool)
    mask[5:25, 10:26] = False
    assert np.array_equal(out[mask], crop[mask])
    assert not np.array_equal(out[~mask], crop[~mask])


def test_block_face_on_constant_image_is_constant():
    crop = np.full((60, 40, 3), 0.4, dtype=np.float32)
    out = block_face_in_body(crop, FaceBox(10.0, 5.0, 16.0, 20.0))
    np.testing.assert_allclose(out, crop, atol=1e-6)


def test_large_sigma_approaches_mean_color():
    crop = np.random.default_rng(1).random((60, 40, 3)).astype(np.float32)
    out = block_face_in_body(crop, FaceBox(10.0, 5.0, 16.0, 20.0), sigma_scale=50.0)
    patch = crop[5:25, 10:26]
    np.testing.assert_allclose(out[5:25, 10:26], patch.mean(axis=(0, 1)), atol=2 / 255)


def test_block_face_rejects_face_filling_crop():
    crop = np.zeros((20, 20, 3), dtype=np.float32)
    with pytest.raises(UnusableFaceError):
        block_face_in_body(crop, FaceBox(0.0, 0.0, 20.0, 19.5))


def test_prepare_body_input_size():
    policy = CropPolicy(face_size=(32, 32), eye_size=(16, 32), body_size=(48, 32))
    image = np.random.default_rng(2).random((128, 224, 3)).astype(np.float32)
    body = prepare_body_input(image, FaceBox(100, 10, 16, 20), policy, AttributeConfig())
    assert body.shape == (48, 32, 3)


def test_classifiers_are_deterministic():
    torch.manual_seed(0)
    net = AttributeNet(width=4)
    images = np.random.default_rng(3).random((2, 32, 32, 3)).astype(np.float32)
    first = predict_attributes(net, images)
    assert first == predict_attributes(net, images)
    assert [a for a, _ in classify_age(net, images)] == [g.age for g in first]
    assert [g for g, _ in classify_gender(net, images)] == [g.gender for g in first]
    assert sum(first[0].age_confidence) == pytest.approx(1.0)
    with pytest.raises(UnusableFaceError):
        predict_attributes(net, images[:, :4, :4])
