"""Face-level and frame-level complete evaluation metrics.

FAC/FAU score every face on its own. FCAC counts a frame as correct only when
every face in it is classified correctly; FCAU ranks frames by their most
suspicious face against the any-fake frame label.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.stats import rankdata

# AUC is undefined when the truth holds one class; reported as None, never 0.
UNDEFINED = None


@dataclass(frozen=True)
class FrameOutcome:
    """Per-face predictions and truths for one frame."""

    scores: Sequence[float]
    labels: Sequence[int]
    truth: Sequence[int]

    def __post_init__(self):
        if not (len(self.scores) == len(self.labels) == len(self.truth)):
            raise ValueError("scores, labels and truth must have the same length")
        if len(self.truth) == 0:
            raise ValueError("every frame needs at least one face")

    @property
    def complete(self) -> bool:
        return all(int(p) == int(t) for p, t in zip(self.labels, self.truth))

    @property
    def frame_score(self) -> float:
        return float(max(self.scores))

    @property
    def frame_label(self) -> int:
        return int(any(int(t) == 1 for t in self.truth))


def auc_rank(scores: Sequence[float], truth: Sequence[int]) -> Optional[float]:
    """ROC AUC via the Mann-Whitney rank statistic, ties get averaged ranks."""
    y = np.asarray(truth, dtype=int)
    s = np.asarray(scores, dtype=float)
    if y.shape != s.shape:
        raise ValueError("scores and truth must have the same length")
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        return UNDEFINED
    ranks = rankdata(s, method="average")
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def compute_face_metrics(
    pred_scores: Sequence[float], pred_labels: Sequence[int], truth: Sequence[int]
) -> Tuple[float, Optional[float]]:
    """Return (FAC, FAU) over independently scored faces."""
    if not (len(pred_scores) == len(pred_labels) == len(truth)):
        raise ValueError("pred_scores, pred_labels and truth must have the same length")
    if len(truth) == 0:
        raise ValueError("need at least one face")
    labels = np.asarray(pred_labels, dtype=int)
    y = np.asarray(truth, dtype=int)
    fac = float((labels == y).mean())
    return fac, auc_rank(pred_scores, truth)


def compute_frame_complete_metrics(frames: Sequence[FrameOutcome]) -> Tuple[float, Optional[float]]:
    """Return (FCAC, FCAU) over frames."""
    if len(frames) == 0:
        raise ValueError("need at least one frame")
    complete = np.array([f.complete for f in frames], dtype=float)
    fcac = float(complete.mean())
    fcau = auc_rank([f.frame_score for f in frames], [f.frame_label for f in frames])
    return fcac, fcau


def flatten_faces(frames: Sequence[FrameOutcome]) -> Tuple[list, list, list]:
    """Concatenate per-face scores, labels and truths across frames."""
    scores, labels, truth = [], [], []
    for frame in frames:
        scores.extend(float(s) for s in frame.scores)
        labels.extend(int(p) for p in frame.labels)
        truth.extend(int(t) for t in frame.truth)
    return scores, labels, truth


def fake_recall(labels: Sequence[int], truth: Sequence[int]) -> Optional[float]:
    """Fraction of fake faces predicted fake; None without fakes."""
    y = np.asarray(truth, dtype=int)
    p = np.asarray(labels, dtype=int)
    n_fake = int((y == 1).sum())
    if n_fake == 0:
        return None
    return float(((p == 1) & (y == 1)).sum() / n_fake)
