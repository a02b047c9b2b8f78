import numpy as np
import pytest

from hicom.errors import HicomError, SceneLayoutError
from hicom.models import AgeClass, AnomalyKind, FaceSpec, GazeMode, GenderClass, SceneSpec
from hicom.synth import SceneSampler, face_trajectory, generate_clip, truth_record
from hicom.synth import generator
from hicom.synth.generator import expected_verdicts, gaze_outlier_allowed, max_pairwise_iou, render_frames


def five_faces_with_gaze_outlier_on_face_3() -> SceneSpec:
    faces = []
    for i in range(5):
        fake = i == 3
        faces.append(
            FaceSpec(
                age=AgeClass.MIDDLE,
                gender=GenderClass.FEMALE if i % 2 else GenderClass.MALE,
                x=10.0 + 88.0 * i,
                y=30.0,
                width=40.0,
                hue=0.06,
                gaze_offset=120.0 if fake else None,
                fake=fake,
                anomalies=frozenset([AnomalyKind.GAZE_OUTLIER]) if fake else frozenset(),
            )
        )
    return SceneSpec(seed=11, faces=tuple(faces), n_frames=3)


def test_same_spec_renders_identical_clips():
    spec = SceneSampler(canvas=(128, 224), n_frames=3).sample(5, "mixed", 4)
    a, truth_a = generate_clip(spec, "c")
    b, truth_b = generate_clip(spec, "c")
    for fa, fb in zip(a.frames, b.frames):
        assert np.array_equal(fa.image, fb.image)
        assert fa.faces == fb.faces
    assert truth_a == truth_b


def test_sampler_is_seed_deterministic():
    sampler = SceneSampler(canvas=(128, 224), n_frames=3)
    assert sampler.sample(3, "real", 5) == sampler.sample(3, "real", 5)
    assert sampler.sample(3, "real", 5) != sampler.sample(4, "real", 5)


def test_gaze_outlier_on_face_3_of_5():
    spec = five_faces_with_gaze_outlier_on_face_3()
    assert expected_verdicts(spec)["M3"] == [0, 0, 0, 1, 0]
    truth = truth_record(spec)
    assert [f["expected_M3"] for f in truth["faces"]] == [0, 0, 0, 1, 0]


@pytest.mark.parametrize("category", ["real", "motion_jitter", "appearance_mismatch", "gaze_outlier", "body_face_mismatch", "mixed"])
def test_truth_is_self_consistent(category):
    sampler = SceneSampler(canvas=(128, 224), n_frames=3)
    for seed in range(8):
        n_faces = 2 + seed % 7
        if category == "gaze_outlier" and not gaze_outlier_allowed(n_faces, 2):
            n_faces = 8
        spec = sampler.sample(seed, category, n_faces)
        for face in truth_record(spec)["faces"]:
            kinds = set(face["anomalies"])
            assert (face["expected_M3"] == 1) == ("gaze_outlier" in kinds)
            assert face["expected_M4"] == int("body_face_mismatch" in kinds)
            assert face["fake"] == bool(kinds)
        if category == "real":
            assert not spec.anomaly_kinds
        else:
            assert any(f.fake for f in spec.faces)


def test_faces_do_not_overlap_too_much():
    sampler = SceneSampler(canvas=(128, 224), n_frames=4)
    for seed in range(5):
        assert max_pairwise_iou(sampler.sample(seed, "mixed", 8)) <= 0.3


def test_gaze_outlier_scene_keeps_real_faces_on_camera():
    spec = SceneSampler(canvas=(128, 224), n_frames=3).sample(2, "gaze_outlier", 5)
    assert spec.gaze_mode is GazeMode.CAMERA
    assert sum(f.gaze_locked == 0 for f in spec.faces) == sum(f.fake for f in spec.faces)


def test_disallowed_gaze_outlier_is_refused():
    with pytest.raises(ValueError):
        SceneSampler(canvas=(128, 224), n_frames=3).sample(0, "gaze_outlier", 3)


def test_motion_jitter_breaks_smooth_trajectory():
    spec = five_faces_with_gaze_outlier_on_face_3()
    jittered = SceneSpec(
        seed=spec.seed,
        faces=tuple(
            FaceSpec(**{**f.__dict__, "fake": True, "anomalies": frozenset([AnomalyKind.MOTION_JITTER]), "gaze_offset": None})
            if i == 1 else f
            for i, f in enumerate(spec.faces)
        ),
        n_frames=6,
        pan_speed=0.0,
    )
    steady = [b.x for b in face_trajectory(jittered, 0)]
    shaky = [b.x for b in face_trajectory(jittered, 1)]
    assert max(np.abs(np.diff(shaky))) > max(np.abs(np.diff(steady))) + 2.0


def test_rendered_frames_match_canvas_and_boxes():
    spec = SceneSampler(canvas=(128, 224), n_frames=2).sample(1, "real", 3)
    frames, boxes = render_frames(spec)
    assert frames[0].shape == (128, 224, 3)
    assert frames[0].dtype == np.uint8
    assert len(boxes) == 2 and len(boxes[0]) == 3


def test_body_face_mismatch_changes_rendered_attributes():
    spec = SceneSampler(canvas=(128, 224), n_frames=2).sample(6, "body_face_mismatch", 4)
    for face in spec.faces:
        changed = (face.rendered_age, face.rendered_gender) != (face.age, face.gender)
        assert changed == face.fake


def test_unplaceable_scene_raises_a_hicom_error(monkeypatch):
    monkeypatch.setattr(generator, "max_pairwise_iou", lambda spec: 1.0)
    with pytest.raises(SceneLayoutError) as excinfo:
        SceneSampler(canvas=(128, 224), n_frames=2).sample(0, "real", 3)
    assert isinstance(excinfo.value, HicomError)
