"""M2: inter-face appearance compatibility.

Every face crop of a frame goes through a patch-token transformer. Training
pairs faces of the same frame: faces with the same real/fake label are pulled
together, faces with different labels are pushed at least `margin` apart.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from hicom.config import InterFaceConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FacePair:
    """Two faces (i < j) of one frame; y_pl = 1 when their labels agree."""

    i: int
    j: int
    y_pl: int

    def __post_init__(self):
        if not self.i < self.j:
            raise ValueError(f"FacePair needs i < j, got ({self.i}, {self.j})")


class InterFaceEncoder(nn.Module):
    """Patch-token transformer returning an embedding and 2-class logits per crop."""

    def __init__(self, cfg: InterFaceConfig):
        super().__init__()
        self.cfg = cfg
        height, width = cfg.input_size
        n_tokens = (height // cfg.patch) * (width // cfg.patch)
        self.patchify = nn.Conv2d(3, cfg.width, kernel_size=cfg.patch, stride=cfg.patch)
        self.cls_token = nn.Parameter(torch.zeros(1, 1, cfg.width))
        self.position = nn.Parameter(torch.randn(1, n_tokens + 1, cfg.width) * 0.02)
        layer = nn.TransformerEncoderLayer(
            d_model=cfg.width,
            nhead=cfg.heads,
            dim_feedforward=2 * cfg.width,
            dropout=0.0,
            activation="gelu",
            batch_first=True,
            norm_first=True,
        )
        self.blocks = nn.TransformerEncoder(layer, num_layers=cfg.depth, enable_nested_tensor=False)
        self.norm = nn.LayerNorm(cfg.width)
        self.embed = nn.Linear(cfg.width, cfg.embed_dim)
        self.classifier = nn.Linear(cfg.embed_dim, 2)

    def forward(self, crops: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        """crops: N x 3 x H x W in [0, 1]. Returns (N x embed_dim, N x 2)."""
        expected = tuple(self.cfg.input_size)
        if crops.ndim != 4 or tuple(crops.shape[-2:]) != expected:
            raise ValueError(f"M2 expects N x 3 x {expected[0]} x {expected[1]} crops, got {tuple(crops.shape)}")
        tokens = self.patchify(crops).flatten(2).transpose(1, 2)
        cls = self.cls_token.expand(tokens.shape[0], -1, -1)
        tokens = torch.cat([cls, tokens], dim=1) + self.position
        tokens = self.blocks(tokens)
        embedding = self.embed(self.norm(tokens[:, 0]))
        return embedding, self.classifier(F.gelu(embedding))


@torch.no_grad()
def embed_faces(net: InterFaceEncoder, crops: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Embeddings and fake probabilities for N x H x W x 3 crops."""
    if len(crops) < 1:
        raise ValueError("embed_faces needs at least one crop")
    net.eval()
    batch = torch.from_numpy(np.ascontiguousarray(crops, dtype=np.float32)).permute(0, 3, 1, 2)
    embedding, logits = net(batch)
    return embedding.numpy(), torch.softmax(logits, dim=-1)[:, 1].numpy().astype(float)


def sample_pairs(labels: Sequence[int], pair_cap: int, seed: int) -> List[FacePair]:
    """Within-frame pairs; a seeded subsample when there are more than `pair_cap`.

    The subsample keeps at least one dissimilar pair whenever one exists.
    """
    labels = [int(v) for v in labels]
    pairs = [FacePair(i, j, int(labels[i] == labels[j])) for i, j in itertools.combinations(range(len(labels)), 2)]
    if len(pairs) <= pair_cap:
        return pairs
    rng = np.random.default_rng(seed)
    chosen = sorted(rng.choice(len(pairs), size=pair_cap, replace=False).tolist())
    dissimilar = [k for k, p in enumerate(pairs) if p.y_pl == 0]
    if dissimilar and not any(pairs[k].y_pl == 0 for k in chosen):
        chosen[int(rng.integers(len(chosen)))] = dissimilar[int(rng.integers(len(dissimilar)))]
        chosen.sort()
    return [pairs[k] for k in chosen]


def pair_distances(embeddings: torch.Tensor, pairs: Sequence[FacePair]) -> torch.Tensor:
    """Euclidean distance of raw (unnormalized) embeddings for each pair."""
    i = torch.tensor([p.i for p in pairs], dtype=torch.long)
    j = torch.tensor([p.j for p in pairs], dtype=torch.long)
    return torch.linalg.vector_norm(embeddings[i] - embeddings[j], dim=-1)


def contrastive_term(distances: torch.Tensor, y_pl: torch.Tensor, margin: float) -> torch.Tensor:
    """Mean of y * d + (1 - y) * max(0, margin - d); zero for no pairs.

    The similar-pair term uses the distance itself, not its square.
    """
    if distances.numel() == 0:
        return distances.new_zeros(())
    y = y_pl.to(distances.dtype)
    return (y * distances + (1.0 - y) * torch.clamp(margin - distances, min=0.0)).mean()


def loss_app(
    face_logits: torch.Tensor,
    y_fa: torch.Tensor,
    embeddings: torch.Tensor,
    pairs: Sequence[FacePair],
    cfg: InterFaceConfig,
) -> torch.Tensor:
    """Face cross entropy plus lambda_comp times the pair term."""
    ce = F.cross_entropy(face_logits, y_fa)
    if cfg.lambda_comp == 0 or not pairs:
        return ce
    distances = pair_distances(embeddings, pairs)
    y_pl = torch.tensor([p.y_pl for p in pairs])
    return ce + cfg.lambda_comp * contrastive_term(distances, y_pl, cfg.margin)
