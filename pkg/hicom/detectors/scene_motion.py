"""M1: scene-motion coherence.

A strided conv trunk builds a feature pyramid for every frame of a window,
RoIAlign pools each face and the ring of background around it, and a small
temporal transformer looks for faces whose motion does not follow the scene.
"""

import logging
from typing import List, Sequence, Tuple

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F
from torchvision.ops import roi_align

from hicom.config import SceneMotionConfig
from hicom.core.crops import resize_image
from hicom.errors import TrainingDivergedError
from hicom.models import FaceBox, FrameSample

logger = logging.getLogger(__name__)

BASE_STRIDE = 4
GEOM_DIM = 4
BACKGROUND_DILATION = 2.0


def _norm(channels: int) -> nn.GroupNorm:
    return nn.GroupNorm(min(8, channels), channels)


def _conv(cin: int, cout: int, stride: int) -> nn.Sequential:
    return nn.Sequential(nn.Conv2d(cin, cout, 3, stride=stride, padding=1), _norm(cout), nn.GELU())


class SceneMotionTrunk(nn.Module):
    """Strided conv pyramid with maps at strides 4, 8, 16, ..."""

    def __init__(self, width: int, n_scales: int):
        super().__init__()
        self.stem = nn.Sequential(_conv(3, width, 2), _conv(width, width, 2))
        self.stages = nn.ModuleList()
        self.channels = [width]
        c = width
        for _ in range(n_scales - 1):
            self.stages.append(nn.Sequential(_conv(c, 2 * c, 2), _conv(2 * c, 2 * c, 1)))
            c *= 2
            self.channels.append(c)
        self.strides = [BASE_STRIDE * 2 ** k for k in range(n_scales)]

    def forward(self, x: torch.Tensor) -> List[torch.Tensor]:
        maps = [self.stem(x)]
        for stage in self.stages:
            maps.append(stage(maps[-1]))
        return maps


def background_mask(roi_output: int, dilation: float = BACKGROUND_DILATION) -> torch.Tensor:
    """Grid cells of a dilated box that fall outside the original face box."""
    lo = roi_output * (1.0 - 1.0 / dilation) / 2.0
    hi = roi_output - lo
    centers = torch.arange(roi_output, dtype=torch.float32) + 0.5
    inside = (centers >= lo) & (centers <= hi)
    return (~(inside[:, None] & inside[None, :])).float()


def roi_grid(feature_map: torch.Tensor, rois: torch.Tensor, roi_output: int, stride: int) -> torch.Tensor:
    """Bilinear RoIAlign of boxes (K x 5: batch index, x1, y1, x2, y2 in input pixels)."""
    widths = (rois[:, 3] - rois[:, 1]) / stride
    heights = (rois[:, 4] - rois[:, 2]) / stride
    if bool(((widths <= 0) | (heights <= 0)).any()):
        raise ValueError("RoI has zero area on the feature map")
    return roi_align(
        feature_map, rois, output_size=roi_output, spatial_scale=1.0 / stride, sampling_ratio=-1, aligned=True
    )


def pool_region(
    feature_map: torch.Tensor,
    box: FaceBox,
    roi_output: int,
    stride: int = 1,
    projection: nn.Module = None,
) -> torch.Tensor:
    """Pool one box of a C x H x W map to a flat vector, optionally projected."""
    x1, y1, x2, y2 = box.xyxy()
    rois = torch.tensor([[0.0, x1, y1, x2, y2]], dtype=feature_map.dtype)
    grid = roi_grid(feature_map.unsqueeze(0), rois, roi_output, stride).flatten(1)
    if projection is not None:
        grid = projection(grid)
    return grid[0]


class RegionPooler(nn.Module):
    """Face and background RegionFeatures from every pyramid level."""

    def __init__(self, channels: Sequence[int], strides: Sequence[int], roi_output: int, embed_dim: int):
        super().__init__()
        self.strides = list(strides)
        self.roi_output = roi_output
        flat = sum(c * roi_output * roi_output for c in channels)
        self.face_proj = nn.Linear(flat, embed_dim)
        self.background_proj = nn.Linear(flat, embed_dim)
        self.register_buffer("ring", background_mask(roi_output), persistent=False)

    def forward(self, maps: List[torch.Tensor], boxes: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        """boxes: F x T x 4 (x1, y1, x2, y2). Returns face and background features, F x T x E."""
        n_faces, t = boxes.shape[:2]
        frame_index = torch.arange(t, dtype=boxes.dtype).repeat(n_faces)[:, None]
        flat = boxes.reshape(-1, 4)
        face_rois = torch.cat([frame_index, flat], dim=1)
        centers = (flat[:, :2] + flat[:, 2:]) / 2.0
        half = (flat[:, 2:] - flat[:, :2]) * BACKGROUND_DILATION / 2.0
        bg_rois = torch.cat([frame_index, centers - half, centers + half], dim=1)

        face_parts, bg_parts = [], []
        for fmap, stride in zip(maps, self.strides):
            face_parts.append(roi_grid(fmap, face_rois, self.roi_output, stride).flatten(1))
            bg = roi_grid(fmap, bg_rois, self.roi_output, stride) * self.ring.to(fmap.dtype)
            bg_parts.append(bg.flatten(1))
        face = self.face_proj(torch.cat(face_parts, dim=1)).reshape(n_faces, t, -1)
        background = self.background_proj(torch.cat(bg_parts, dim=1)).reshape(n_faces, t, -1)
        return face, background


class SceneMotionHead(nn.Module):
    """Temporal inference over face tracks plus attention pooling for the frame."""

    def __init__(self, embed_dim: int, T: int):
        super().__init__()
        in_dim = 3 * embed_dim + 2 * GEOM_DIM
        self.token = nn.Sequential(nn.Linear(in_dim, embed_dim), nn.GELU())
        self.position = nn.Parameter(torch.zeros(T, embed_dim))
        self.temporal = nn.TransformerEncoderLayer(
            d_model=embed_dim,
            nhead=2,
            dim_feedforward=2 * embed_dim,
            dropout=0.0,
            activation="gelu",
            batch_first=True,
        )
        self.face_classifier = nn.Linear(embed_dim, 2)
        self.background_token = nn.Linear(embed_dim, embed_dim)
        self.attention = nn.Linear(embed_dim, 1)
        self.frame_classifier = nn.Linear(embed_dim, 2)

    def forward(
        self, face: torch.Tensor, background: torch.Tensor, geom: torch.Tensor
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        """face/background: F x T x E, geom: F x T x 4 normalized boxes."""
        d_face = torch.cat([torch.zeros_like(face[:, :1]), face[:, 1:] - face[:, :-1]], dim=1)
        d_geom = torch.cat([torch.zeros_like(geom[:, :1]), geom[:, 1:] - geom[:, :-1]], dim=1)
        # Motion relative to the group separates actor jitter from camera motion.
        rel_motion = d_geom - d_geom.mean(dim=0, keepdim=True)
        tokens = self.token(torch.cat([face, background, d_face, geom, rel_motion], dim=-1))
        tokens = self.temporal(tokens + self.position[: tokens.shape[1]])
        face_logits = self.face_classifier(tokens.mean(dim=1))

        context = torch.cat([tokens, self.background_token(background)], dim=0).reshape(-1, tokens.shape[-1])
        weights = torch.softmax(self.attention(context).squeeze(-1), dim=0)
        frame_logits = self.frame_classifier((weights[:, None] * context).sum(dim=0))
        return face_logits, frame_logits


class SceneMotionNet(nn.Module):
    """Complete M1 network for one window of T frames."""

    def __init__(self, cfg: SceneMotionConfig):
        super().__init__()
        self.cfg = cfg
        self.trunk = SceneMotionTrunk(cfg.width, cfg.n_scales)
        self.pooler = RegionPooler(self.trunk.channels, self.trunk.strides, cfg.roi_output, cfg.embed_dim)
        self.head = SceneMotionHead(cfg.embed_dim, cfg.T)

    def extract_multiscale_features(self, frames: torch.Tensor) -> List[torch.Tensor]:
        maps = self.trunk(frames)
        for level, fmap in enumerate(maps):
            if not torch.isfinite(fmap).all():
                raise TrainingDivergedError(f"Non-finite activations in M1 pyramid level {level}")
        return maps

    def forward(self, frames: torch.Tensor, boxes: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        """frames: T x 3 x H x W in [0, 1]; boxes: F x T x 4 in input pixels."""
        if boxes.shape[0] < 1:
            raise ValueError("M1 needs at least one face track")
        maps = self.extract_multiscale_features(frames)
        face, background = self.pooler(maps, boxes)
        height, width = frames.shape[-2:]
        scale = boxes.new_tensor([width, height, width, height])
        xyxy = boxes / scale
        geom = torch.stack(
            [
                (xyxy[..., 0] + xyxy[..., 2]) / 2.0,
                (xyxy[..., 1] + xyxy[..., 3]) / 2.0,
                xyxy[..., 2] - xyxy[..., 0],
                xyxy[..., 3] - xyxy[..., 1],
            ],
            dim=-1,
        )
        return self.head(face, background, geom)


def extract_multiscale_features(net: SceneMotionNet, frames: torch.Tensor) -> List[torch.Tensor]:
    """Per-frame feature pyramid for a T x 3 x H x W window."""
    return net.extract_multiscale_features(frames)


def loss_sp(
    face_logits: torch.Tensor,
    frame_logits: torch.Tensor,
    y_fa: torch.Tensor,
    y_fr: int,
    lambda_fa: float = 0.5,
    lambda_fr: float = 0.5,
) -> torch.Tensor:
    """Weighted face-level plus frame-level cross entropy."""
    if face_logits.shape[0] == 0:
        raise ValueError("loss_sp needs at least one face")
    face_ce = F.cross_entropy(face_logits, y_fa)
    frame_ce = F.cross_entropy(frame_logits.reshape(1, -1), torch.tensor([int(y_fr)]))
    return lambda_fa * face_ce + lambda_fr * frame_ce


def window_indices(n_frames: int, T: int) -> List[List[int]]:
    """Consecutive windows of T frame indices; the tail is padded with its last frame."""
    windows = []
    for start in range(0, n_frames, T):
        idx = list(range(start, min(start + T, n_frames)))
        idx += [idx[-1]] * (T - len(idx))
        windows.append(idx)
    return windows


def track_count(frames: Sequence[FrameSample]) -> int:
    """Number of face tracks in a window; 0 when a frame is faceless or the face sets differ."""
    counts = {len(frame.faces) for frame in frames}
    if len(counts) != 1:
        return 0
    return counts.pop()


def prepare_window(frames: Sequence[FrameSample], cfg: SceneMotionConfig) -> Tuple[torch.Tensor, torch.Tensor]:
    """Resize loaded frames to the M1 input and stack the face tracks.

    Returns (T x 3 x H x W, F x T x 4). Shorter sequences (a still image, a
    short clip) are padded by repeating the last frame. A window without
    usable tracks comes back with F = 0.
    """
    frames = list(frames)
    frames += [frames[-1]] * (cfg.T - len(frames))
    height, width = cfg.input_size
    n_tracks = track_count(frames)
    images, boxes = [], []
    for frame in frames:
        fh, fw = frame.size
        sx, sy = width / fw, height / fh
        images.append(resize_image(frame.image, cfg.input_size))
        if n_tracks:
            boxes.append([list(face.box.scale(sx, sy).xyxy()) for face in frame.faces])
    pixels = torch.from_numpy(np.stack(images)).permute(0, 3, 1, 2).contiguous()
    if not n_tracks:
        return pixels, torch.zeros((0, cfg.T, 4), dtype=torch.float32)
    tracks = torch.tensor(boxes, dtype=torch.float32).permute(1, 0, 2).contiguous()
    return pixels, tracks


@torch.no_grad()
def infer_scene_motion(net: SceneMotionNet, frames: torch.Tensor, boxes: torch.Tensor) -> Tuple[np.ndarray, float]:
    """Per-face and frame fake probabilities for one window."""
    net.eval()
    face_logits, frame_logits = net(frames, boxes)
    face_p = torch.softmax(face_logits, dim=-1)[:, 1]
    frame_p = torch.softmax(frame_logits, dim=-1)[1]
    return face_p.numpy().astype(float), float(frame_p)
