import numpy as np
import pytest

from hicom.core.metrics import (
    FrameOutcome,
    auc_rank,
    compute_face_metrics,
    compute_frame_complete_metrics,
    fake_recall,
    flatten_faces,
)


def brute_force_auc(scores, truth):
    pos = [s for s, t in zip(scores, truth) if t == 1]
    neg = [s for s, t in zip(scores, truth) if t == 0]
    if not pos or not neg:
        return None
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


def random_frames(rng, n_frames, faces_per_frame=None):
    frames = []
    for _ in range(n_frames):
        n = faces_per_frame or int(rng.integers(1, 7))
        truth = rng.integers(0, 2, size=n).tolist()
        # coarse scores so ties actually happen
        scores = (rng.integers(0, 11, size=n) / 10.0).tolist()
        labels = [int(s >= 0.5) for s in scores]
        frames.append(FrameOutcome(scores, labels, truth))
    return frames


def test_face_metrics_examples():
    assert compute_face_metrics([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0], [1, 1, 0, 0])[0] == 1.0
    assert compute_face_metrics([0.9, 0.1], [1, 0], [1, 0])[1] == 1.0
    fac, _ = compute_face_metrics([0.9, 0.2, 0.1], [1, 0, 0], [1, 1, 0])
    assert fac == pytest.approx(2 / 3)


def test_single_class_auc_is_undefined_not_zero():
    fac, fau = compute_face_metrics([0.3, 0.7], [0, 1], [1, 1])
    assert fac == 0.5
    assert fau is None


def test_frame_complete_examples():
    frames = [FrameOutcome([0.9, 0.1], [1, 0], [1, 0]), FrameOutcome([0.2], [0], [0])]
    assert compute_frame_complete_metrics(frames)[0] == 1.0

    frames = [FrameOutcome([0.9, 0.8], [1, 1], [1, 0]), FrameOutcome([0.2], [0], [0])]
    scores, labels, truth = flatten_faces(frames)
    fac, _ = compute_face_metrics(scores, labels, truth)
    fcac, _ = compute_frame_complete_metrics(frames)
    assert fac == pytest.approx(2 / 3)
    assert fcac == 0.5


def test_frame_metrics_match_brute_force_oracle():
    rng = np.random.default_rng(0)
    frames = random_frames(rng, 1000)

    complete = [all(p == t for p, t in zip(f.labels, f.truth)) for f in frames]
    expected_fcac = sum(complete) / len(frames)
    expected_fcau = brute_force_auc([max(f.scores) for f in frames], [int(any(f.truth)) for f in frames])

    fcac, fcau = compute_frame_complete_metrics(frames)
    assert fcac == expected_fcac
    assert fcau == pytest.approx(expected_fcau, abs=1e-9)


def test_fcac_never_exceeds_fac_with_equal_face_counts():
    rng = np.random.default_rng(1)
    for _ in range(200):
        frames = random_frames(rng, int(rng.integers(1, 11)), faces_per_frame=int(rng.integers(1, 7)))
        scores, labels, truth = flatten_faces(frames)
        fac, _ = compute_face_metrics(scores, labels, truth)
        fcac, _ = compute_frame_complete_metrics(frames)
        assert fcac <= fac + 1e-12


def test_fac_pools_faces_across_unequal_frames():
    # one small correct frame and one large wrong frame: FCAC exceeds pooled FAC
    frames = [FrameOutcome([0.1], [0], [0]), FrameOutcome([0.1] * 9, [0] * 9, [1] * 9)]
    scores, labels, truth = flatten_faces(frames)
    fac, _ = compute_face_metrics(scores, labels, truth)
    fcac, _ = compute_frame_complete_metrics(frames)
    assert fac == pytest.approx(0.1)
    assert fcac == 0.5


def test_metrics_are_permutation_invariant():
    rng = np.random.default_rng(2)
    frames = random_frames(rng, 50)
    shuffled = [
        FrameOutcome(*(list(np.asarray(seq)[perm]) for seq in (f.scores, f.labels, f.truth)))
        for f, perm in ((f, rng.permutation(len(f.truth))) for f in frames)
    ]
    shuffled = [shuffled[i] for i in rng.permutation(len(shuffled))]
    assert compute_frame_complete_metrics(frames) == pytest.approx(compute_frame_complete_metrics(shuffled))


def test_auc_rank_averages_ties():
    assert auc_rank([0.5, 0.5], [1, 0]) == 0.5


def test_fake_recall():
    assert fake_recall([1, 0, 1], [1, 1, 0]) == 0.5
    assert fake_recall([0, 0], [0, 0]) is None


def test_input_validation():
    with pytest.raises(ValueError):
        compute_face_metrics([0.1], [0, 1], [0])
    with pytest.raises(ValueError):
        compute_frame_complete_metrics([])
    with pytest.raises(ValueError):
        FrameOutcome([], [], [])
