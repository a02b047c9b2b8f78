"""Combination of the four per-face module verdicts.

In `any_anomaly` mode a face is fake as soon as one non-NA module flags it
(an OR, even though the method description calls it XOR). `weighted_score`
mode averages module evidence with cue-prevalence weights instead.
"""

from typing import Iterable, Mapping, Sequence, Tuple

from hicom.config import FusionConfig
from hicom.models import FusionResult, ModuleName, ModuleVerdict

MODULE_ORDER: Tuple[ModuleName, ...] = (ModuleName.M1, ModuleName.M2, ModuleName.M3, ModuleName.M4)

# Cumulative subsets reported in the ablation table, in order.
ABLATION_STACKS: Tuple[Tuple[ModuleName, ...], ...] = (
    (ModuleName.M1,),
    (ModuleName.M1, ModuleName.M2),
    (ModuleName.M1, ModuleName.M2, ModuleName.M3),
    (ModuleName.M1, ModuleName.M2, ModuleName.M3, ModuleName.M4),
)

Verdicts = Mapping[ModuleName, ModuleVerdict]


def stack_name(modules: Iterable[ModuleName]) -> str:
    return "+".join(m.value for m in sorted(modules, key=MODULE_ORDER.index))


def _module_flag(verdict: ModuleVerdict, cfg: FusionConfig):
    """Flag after applying the fusion thresholds to M1/M2 scores."""
    if verdict.module is ModuleName.M1:
        return int(verdict.score >= cfg.m1_threshold)
    if verdict.module is ModuleName.M2:
        return int(verdict.score >= cfg.m2_threshold)
    return verdict.flag


def _fuse_subset(verdicts: Verdicts, subset: Sequence[ModuleName], cfg: FusionConfig) -> FusionResult:
    present = [verdicts[m] for m in subset if m in verdicts]

    if cfg.mode == "weighted_score":
        total, weight_sum = 0.0, 0.0
        for verdict in present:
            evidence = verdict.evidence
            if evidence is None:
                continue
            w = cfg.weights[MODULE_ORDER.index(verdict.module)]
            total += w * evidence
            weight_sum += w
        score = total / weight_sum if weight_sum > 0 else 0.0
        label = int(score >= cfg.label_threshold)
        attribution = frozenset(
            v.module for v in present if not v.is_na and _module_flag(v, cfg) == 1
        ) if label else frozenset()
        return FusionResult(label=label, score=score, attribution=attribution)

    attribution = frozenset(v.module for v in present if not v.is_na and _module_flag(v, cfg) == 1)
    evidence = [v.evidence for v in present if v.evidence is not None]
    score = max(evidence) if evidence else 0.0
    return FusionResult(label=int(bool(attribution)), score=float(score), attribution=attribution)


def fuse(verdicts: Verdicts, cfg: FusionConfig) -> FusionResult:
    """Fuse one face's verdicts over all available modules."""
    for required in (ModuleName.M1, ModuleName.M2):
        if required not in verdicts:
            raise ValueError(f"fuse needs a {required.value} verdict")
    return _fuse_subset(verdicts, MODULE_ORDER, cfg)


def ablation_stack(verdicts: Verdicts, subset: Iterable[ModuleName], cfg: FusionConfig) -> FusionResult:
    """Fuse restricted to `subset`, which must contain M1."""
    subset = tuple(sorted(set(subset), key=MODULE_ORDER.index))
    if not subset:
        raise ValueError("ablation subset is empty")
    if ModuleName.M1 not in subset:
        raise ValueError("ablation stacks start at M1")
    missing = [m.value for m in subset if m not in verdicts]
    if missing:
        raise ValueError(f"no verdict for module(s) {', '.join(missing)}")
    return _fuse_subset(verdicts, subset, cfg)
