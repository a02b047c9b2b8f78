import itertools

import numpy as np
import pytest
import torch

from hicom.config import GazeConfig
from hicom.detectors.gaze import GazeCounts, GazeNet, classify_gaze, gaze_rule, locked_from_probability
from hicom.errors import UnusableFaceError


def oracle(flags):
    """Case analysis written out face by face."""
    n_locked = sum(flags)
    n_off = len(flags) - n_locked
    if n_off > n_locked:
        return [None] * len(flags)
    verdict = []
    for flag in flags:
        if flag == 1:
            verdict.append(0)
        elif n_locked - n_off > 1 or len(flags) == 2:
            verdict.append(1)
        else:
            verdict.append(0)
    return verdict


def test_rule_matches_exhaustive_oracle():
    mismatches = 0
    for n in range(1, 7):
        for flags in itertools.product((0, 1), repeat=n):
            mismatches += gaze_rule(list(flags)) != oracle(list(flags))
    assert mismatches == 0


@pytest.mark.parametrize(
    "flags, expected",
    [
        ([1, 1, 1, 0, 1], [0, 0, 0, 1, 0]),
        ([1, 0], [0, 1]),
        ([1, 0, 0], [None, None, None]),
        ([1, 1, 0], [0, 0, 0]),
    ],
)
def test_rule_examples(flags, expected):
    assert gaze_rule(flags) == expected


def test_na_covers_the_whole_frame():
    for flags in itertools.product((0, 1), repeat=5):
        verdict = gaze_rule(list(flags))
        assert all(v is None for v in verdict) or not any(v is None for v in verdict)


def test_rule_is_permutation_equivariant():
    flags = [1, 1, 1, 1, 0, 1]
    perm = [5, 2, 4, 0, 3, 1]
    assert gaze_rule([flags[i] for i in perm]) == [gaze_rule(flags)[i] for i in perm]


def test_rule_needs_a_face():
    with pytest.raises(ValueError):
        gaze_rule([])


def test_counts():
    counts = GazeCounts.from_flags([1, 0, 1])
    assert (counts.n_L, counts.n_O, counts.n_T) == (2, 1, 3)
    assert locked_from_probability([0.2, 0.5, 0.9]) == [0, 1, 1]


def test_classifier_is_deterministic_and_checks_size():
    torch.manual_seed(0)
    net = GazeNet(GazeConfig(input_size=(16, 32), width=4))
    crops = np.random.default_rng(0).random((3, 16, 32, 3)).astype(np.float32)
    p = classify_gaze(net, crops)
    assert p.shape == (3,)
    assert np.all((p >= 0) & (p <= 1))
    assert np.array_equal(p, classify_gaze(net, crops))
    with pytest.raises(UnusableFaceError):
        classify_gaze(net, crops[:, :8])
