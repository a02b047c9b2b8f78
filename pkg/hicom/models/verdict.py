"""Per-module verdicts and fused predictions."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Optional


class ModuleName(str, Enum):
    """The four cue detectors, in ablation order."""

    M1 = "M1"  # scene-motion coherence
    M2 = "M2"  # inter-face appearance compatibility
    M3 = "M3"  # interpersonal gaze consensus
    M4 = "M4"  # face-body age/gender consistency

    @property
    def cue(self) -> str:
        return MODULE_CUES[self]


MODULE_CUES: Dict[ModuleName, str] = {
    ModuleName.M1: "scene-motion incoherence",
    ModuleName.M2: "inter-face appearance incompatibility",
    ModuleName.M3: "gaze outlier against the group",
    ModuleName.M4: "face-body age/gender mismatch",
}

# NA is encoded as None wherever a flag is Optional[int].
NA = None


@dataclass(frozen=True)
class ModuleVerdict:
    """One module's output for one face.

    M1/M2 always carry a score. M3 and M4 carry a flag only; M3 may be NA.
    """

    module: ModuleName
    flag: Optional[int]
    score: Optional[float] = None
    note: str = ""

    def __post_init__(self):
        if self.flag not in (0, 1, None):
            raise ValueError(f"{self.module.value}: flag must be 0, 1 or NA, got {self.flag}")
        if self.score is not None and not (0.0 <= self.score <= 1.0):
            raise ValueError(f"{self.module.value}: score {self.score} outside [0, 1]")
        if self.module in (ModuleName.M1, ModuleName.M2) and self.score is None:
            raise ValueError(f"{self.module.value} verdicts must carry a score")
        if self.module is not ModuleName.M3 and self.flag is None:
            raise ValueError(f"{self.module.value} never abstains")

    @classmethod
    def from_score(cls, module: ModuleName, score: float, threshold: float = 0.5) -> "ModuleVerdict":
        score = min(max(float(score), 0.0), 1.0)
        return cls(module=module, flag=int(score >= threshold), score=score)

    @property
    def is_na(self) -> bool:
        return self.flag is None

    @property
    def evidence(self) -> Optional[float]:
        """Continuous evidence used for the fused score; None for NA."""
        if self.score is not None:
            return self.score
        if self.flag is None:
            return None
        return float(self.flag)

    def to_dict(self) -> dict:
        return {"module": self.module.value, "flag": self.flag, "score": self.score, "note": self.note}

    @classmethod
    def from_dict(cls, data: dict) -> "ModuleVerdict":
        return cls(
            module=ModuleName(data["module"]),
            flag=data.get("flag"),
            score=data.get("score"),
            note=data.get("note", ""),
        )


@dataclass(frozen=True)
class FusionResult:
    """Fused decision for one face."""

    label: int
    score: float
    attribution: FrozenSet[ModuleName] = field(default_factory=frozenset)

    @property
    def attribution_names(self) -> list:
        return sorted(m.value for m in self.attribution)
