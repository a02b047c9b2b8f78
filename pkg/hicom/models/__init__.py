"""Data models for hicom."""

from .sample import AgeClass, GenderClass, FaceBox, FaceSample, FrameSample, ClipSample
from .verdict import ModuleName, ModuleVerdict, FusionResult, NA, MODULE_CUES
from .report import AblationRow, PerturbationRow, MetricsReport, ExplanationRecord
from .scene import AnomalyKind, PerturbationKind, GazeMode, FaceSpec, SceneSpec

__all__ = [
    "AgeClass", "GenderClass", "FaceBox", "FaceSample", "FrameSample", "ClipSample",
    "ModuleName", "ModuleVerdict", "FusionResult", "NA", "MODULE_CUES",
    "AblationRow", "PerturbationRow", "MetricsReport", "ExplanationRecord",
    "AnomalyKind", "PerturbationKind", "GazeMode", "FaceSpec", "SceneSpec",
]
