"""M3: interpersonal gaze consensus.

An eye-region classifier decides whether each face looks at the camera; the
group rule then flags off-camera faces only when the group clearly agrees on
looking at the camera.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import torch
import torch.nn as nn

from hicom.config import GazeConfig
from hicom.detectors.backbone import SmallResNet, to_batch
from hicom.errors import UnusableFaceError


@dataclass(frozen=True)
class GazeCounts:
    n_L: int  # looking at the camera
    n_O: int  # looking elsewhere

    @property
    def n_T(self) -> int:
        return self.n_L + self.n_O

    @classmethod
    def from_flags(cls, locked_flags: Sequence[int]) -> "GazeCounts":
        n_l = sum(1 for f in locked_flags if int(f) == 1)
        return cls(n_L=n_l, n_O=len(locked_flags) - n_l)


class GazeNet(nn.Module):
    """Binary eye-crop classifier; class 1 means gaze locked on the camera."""

    def __init__(self, cfg: GazeConfig):
        super().__init__()
        self.cfg = cfg
        self.backbone = SmallResNet(cfg.width)
        self.classifier = nn.Linear(self.backbone.out_features, 2)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.classifier(self.backbone(x))


def _check_crops(crops: np.ndarray, size) -> None:
    if crops.ndim != 4 or crops.shape[0] == 0:
        raise UnusableFaceError("classify_gaze needs a non-empty N x H x W x 3 batch")
    if tuple(crops.shape[1:3]) != tuple(size):
        raise UnusableFaceError(f"eye crops must be {tuple(size)}, got {tuple(crops.shape[1:3])}")


@torch.no_grad()
def classify_gaze(net: GazeNet, eye_crops: np.ndarray) -> np.ndarray:
    """Probability that each eye crop looks at the camera."""
    eye_crops = np.asarray(eye_crops)
    _check_crops(eye_crops, net.cfg.input_size)
    net.eval()
    return torch.softmax(net(to_batch(eye_crops)), dim=-1)[:, 1].numpy().astype(float)


def gaze_rule(locked_flags: Sequence[int]) -> List[Optional[int]]:
    """Group-consensus verdict per face; None is NA.

    - more faces look away than at the camera: every face NA
    - a face looking at the camera: 0
    - an off-camera face: 1 iff n_L - n_O > 1 or exactly two faces, else 0
    """
    if len(locked_flags) == 0:
        raise ValueError("gaze_rule needs at least one face")
    counts = GazeCounts.from_flags(locked_flags)
    if counts.n_O > counts.n_L:
        return [None] * counts.n_T
    outlier = counts.n_L - counts.n_O > 1 or counts.n_T == 2
    return [0 if int(f) == 1 else int(outlier) for f in locked_flags]


def locked_from_probability(p_locked: Sequence[float], threshold: float = 0.5) -> List[int]:
    return [int(p >= threshold) for p in p_locked]
