import itertools

import pytest

from hicom.config import FusionConfig
from hicom.core.fusion import ABLATION_STACKS, ablation_stack, fuse
from hicom.models import ModuleName, ModuleVerdict

M1, M2, M3, M4 = ModuleName
CFG = FusionConfig()


def verdicts(f1, f2, f3, f4, s1=None, s2=None):
    return {
        M1: ModuleVerdict(M1, f1, 0.9 if f1 else 0.2 if s1 is None else s1),
        M2: ModuleVerdict(M2, f2, 0.9 if f2 else 0.3 if s2 is None else s2),
        M3: ModuleVerdict(M3, f3),
        M4: ModuleVerdict(M4, f4),
    }


def test_fuse_examples():
    result = fuse(verdicts(0, 0, None, 0), CFG)
    assert result.label == 0 and result.attribution == frozenset()

    result = fuse(verdicts(0, 0, None, 1), CFG)
    assert result.label == 1 and result.attribution == {M4}

    result = fuse(verdicts(1, 1, 0, 0), CFG)
    assert result.label == 1 and result.attribution == {M1, M2}


def test_fused_score_is_max_evidence():
    assert fuse(verdicts(0, 0, None, 0), CFG).score == pytest.approx(0.3)
    assert fuse(verdicts(0, 0, 1, 0), CFG).score == 1.0


def test_fuse_needs_m1_and_m2():
    v = verdicts(0, 0, 0, 0)
    del v[M2]
    with pytest.raises(ValueError):
        fuse(v, CFG)


def test_ablation_subsets_validate():
    v = verdicts(0, 0, 0, 0)
    with pytest.raises(ValueError):
        ablation_stack(v, [], CFG)
    with pytest.raises(ValueError):
        ablation_stack(v, [M2, M3], CFG)


def test_full_stack_equals_fuse():
    for pattern in itertools.product((0, 1), (0, 1), (0, 1, None), (0, 1)):
        v = verdicts(*pattern)
        assert ablation_stack(v, list(ModuleName), CFG) == fuse(v, CFG)


def test_ablation_is_monotone_with_exact_attribution():
    for pattern in itertools.product((0, 1), (0, 1), (0, 1, None), (0, 1)):
        v = verdicts(*pattern)
        previous = 0
        for stack in ABLATION_STACKS:
            result = ablation_stack(v, stack, CFG)
            expected = {m for m, flag in zip(ModuleName, pattern) if m in stack and flag == 1}
            assert result.attribution == expected
            assert result.label == int(bool(expected))
            assert result.label >= previous
            previous = result.label


def test_na_gaze_equals_gaze_absent():
    for pattern in itertools.product((0, 1), (0, 1), (0, 1)):
        v = verdicts(pattern[0], pattern[1], None, pattern[2])
        without = {m: x for m, x in v.items() if m is not M3}
        assert ablation_stack(v, list(ModuleName), CFG).label == ablation_stack(without, [M1, M2, M4], CFG).label


def test_m1_threshold_applies_to_score():
    v = verdicts(0, 0, 0, 0, s1=0.45)
    assert fuse(v, FusionConfig(m1_threshold=0.4)).attribution == {M1}
    assert fuse(v, CFG).label == 0


def test_weighted_mode_with_equal_evidence_returns_it():
    cfg = FusionConfig(mode="weighted_score")
    v = {
        M1: ModuleVerdict(M1, 1, 1.0),
        M2: ModuleVerdict(M2, 1, 1.0),
        M3: ModuleVerdict(M3, None),
        M4: ModuleVerdict(M4, 1),
    }
    result = fuse(v, cfg)
    assert result.score == pytest.approx(1.0)
    assert result.label == 1


def test_weights_are_renormalized():
    assert sum(FusionConfig(weights=(1, 1, 1, 1)).weights) == pytest.approx(1.0)
