"""Synthetic multi-face scenes, perturbations and dataset building."""

from hicom.synth.dataset import DatasetSummary, build_dataset, split_sizes
from hicom.synth.generator import SceneSampler, face_trajectory, generate_clip, truth_record
from hicom.synth.perturb import apply_perturbation, parse_severities, perturbation_grid

__all__ = [
    "DatasetSummary",
    "SceneSampler",
    "apply_perturbation",
    "build_dataset",
    "face_trajectory",
    "generate_clip",
    "parse_severities",
    "perturbation_grid",
    "split_sizes",
    "truth_record",
]
