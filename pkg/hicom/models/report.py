"""Evaluation report and explanation records."""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional


@dataclass
class AblationRow:
    """Metrics for one cumulative module subset (M1, M1+M2, ...)."""

    name: str
    modules: List[str]
    FAC: float
    FAU: Optional[float]
    FCAC: float
    FCAU: Optional[float]
    fake_recall: Optional[float] = None


@dataclass
class PerturbationRow:
    """Metrics of one ablation row on a perturbed copy of the split."""

    kind: str
    severity: int
    row: str
    FAC: float
    FCAC: float
    FAC_drop: float
    FCAC_drop: float


@dataclass
class MetricsReport:
    """Top-level evaluation result.

    FAU/FCAU are None when the truth holds a single class (AUC undefined).
    """

    FAC: float
    FAU: Optional[float]
    FCAC: float
    FCAU: Optional[float]
    n_faces: int
    n_frames: int
    ablation: List[AblationRow] = field(default_factory=list)
    perturbations: List[PerturbationRow] = field(default_factory=list)
    anomaly_recall: Dict[str, Dict[str, Optional[float]]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsReport":
        data = dict(data)
        data["ablation"] = [AblationRow(**row) for row in data.get("ablation", [])]
        data["perturbations"] = [PerturbationRow(**row) for row in data.get("perturbations", [])]
        data.setdefault("anomaly_recall", {})
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MetricsReport":
        return cls.from_dict(json.loads(text))

    def save(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            f.write(self.to_json())

    @classmethod
    def load(cls, path: Path) -> "MetricsReport":
        with open(path, "r") as f:
            return cls.from_json(f.read())


@dataclass
class ExplanationRecord:
    """Human-readable explanation for one face decision."""

    clip_id: str
    frame_id: str
    face_id: str
    label: int
    attribution: List[str]
    scores: Dict[str, Optional[float]]
    flags: Dict[str, Optional[int]]
    text: str
    source: str = "template"  # "template" or "llm"
    degraded: bool = False
    llm_response: Optional[str] = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExplanationRecord":
        return cls(**data)
