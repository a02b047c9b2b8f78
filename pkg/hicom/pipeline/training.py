"""Per-module training with Adam, step decay and min-validation-loss selection."""

import copy
import json
import logging
import math
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from hicom.config import Config
from hicom.core.checkpoint import Checkpoint
from hicom.core.manifest import load_frame, read_manifest
from hicom.detectors.inter_face import loss_app, sample_pairs
from hicom.detectors.scene_motion import loss_sp, prepare_window, track_count, window_indices
from hicom.detectors.backbone import to_batch
from hicom.errors import TrainingDivergedError
from hicom.models import ClipSample, ModuleName
from hicom.pipeline.frames import body_crops, eye_crops, face_crops, from_uint8, to_uint8
from hicom.pipeline.modules import CHECKPOINT_NAMES, checkpoint_path, networks_from_config

logger = logging.getLogger(__name__)


def item_seed(seed: int, key: str) -> int:
    return (seed * 1_000_003 + zlib.crc32(key.encode())) % (2 ** 32)


@dataclass
class WindowItem:
    clip: ClipSample
    indices: List[int]


@dataclass
class CropItem:
    """Cached uint8 crops of one frame with their per-face targets."""

    key: str
    crops: np.ndarray
    targets: np.ndarray  # one row of integer targets per crop
    net: str = "net"


class ModuleTrainer:
    """Shared epoch loop; subclasses supply items and a per-item loss."""

    module: ModuleName

    def __init__(self, config: Config, train_clips: Sequence[ClipSample], val_clips: Sequence[ClipSample], seed: int):
        self.config = config
        self.seed = seed
        self.opt = config.optimizer
        torch.manual_seed(seed)
        self.nets: Dict[str, nn.Module] = networks_from_config(self.module, config)
        self.train_items = self.items(train_clips)
        self.val_items = self.items(val_clips)
        logger.info("%s: %d train / %d val items", self.name, len(self.train_items), len(self.val_items))

    @property
    def name(self) -> str:
        return CHECKPOINT_NAMES[self.module]

    def items(self, clips: Sequence[ClipSample]) -> list:
        raise NotImplementedError

    def loss(self, item) -> torch.Tensor:
        raise NotImplementedError

    def _frames(self, clip: ClipSample):
        return [load_frame(f) for f in clip.frames[:: self.opt.frame_stride]]

    def _set_mode(self, train: bool) -> None:
        for net in self.nets.values():
            net.train(train)

    def fit(self, log_path: Optional[Path] = None) -> Checkpoint:
        if not self.train_items:
            raise TrainingDivergedError(f"{self.name}: no training items")
        params = [p for net in self.nets.values() for p in net.parameters()]
        optimizer = torch.optim.Adam(params, lr=self.opt.lr)
        scheduler = torch.optim.lr_scheduler.StepLR(optimizer, step_size=self.opt.decay_every, gamma=self.opt.decay_factor)
        if log_path is not None:
            log_path.parent.mkdir(parents=True, exist_ok=True)
            log_path.write_text("")

        history = []
        best_loss, best_epoch, best_state = math.inf, 0, None
        for epoch in range(1, self.opt.epochs + 1):
            lr = optimizer.param_groups[0]["lr"]
            train_loss = self._train_epoch(optimizer, epoch)
            val_loss = self._validate() if self.val_items else None
            scheduler.step()

            selection = val_loss if val_loss is not None else train_loss
            if selection < best_loss:
                best_loss, best_epoch = selection, epoch
                best_state = {k: copy.deepcopy(net.state_dict()) for k, net in self.nets.items()}
            entry = {"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss, "lr": lr}
            history.append(entry)
            logger.info(
                "%s epoch %d/%d: train %.4f, val %s, lr %.2e",
                self.name, epoch, self.opt.epochs, train_loss,
                "n/a" if val_loss is None else f"{val_loss:.4f}", lr,
            )
            if log_path is not None:
                with open(log_path, "a") as f:
                    f.write(json.dumps(entry) + "\n")

        if not self.val_items:
            logger.warning("%s: no validation items, selected by training loss", self.name)
        return Checkpoint(
            module=self.name,
            config=self.config.to_dict(),
            state=best_state,
            seed=self.seed,
            epoch=best_epoch,
            val_loss=best_loss if self.val_items else None,
            history=history,
        )

    def _train_epoch(self, optimizer: torch.optim.Optimizer, epoch: int) -> float:
        self._set_mode(True)
        generator = torch.Generator().manual_seed(item_seed(self.seed, f"epoch-{epoch}"))
        order = torch.randperm(len(self.train_items), generator=generator).tolist()
        total = 0.0
        for start in range(0, len(order), self.opt.batch_size):
            batch = [self.train_items[i] for i in order[start : start + self.opt.batch_size]]
            optimizer.zero_grad()
            loss = torch.stack([self.loss(item) for item in batch]).mean()
            if not torch.isfinite(loss):
                raise TrainingDivergedError(f"{self.name}: non-finite loss at epoch {epoch}, batch {start // self.opt.batch_size}")
            loss.backward()
            optimizer.step()
            total += loss.item() * len(batch)
        return total / len(order)

    @torch.no_grad()
    def _validate(self) -> float:
        self._set_mode(False)
        losses = [float(self.loss(item)) for item in self.val_items]
        value = float(np.mean(losses))
        if not math.isfinite(value):
            raise TrainingDivergedError(f"{self.name}: non-finite validation loss")
        return value


class SceneMotionTrainer(ModuleTrainer):
    module = ModuleName.M1

    def items(self, clips):
        cfg = self.config.scene_motion
        items = []
        for clip in clips:
            for idx in window_indices(len(clip.frames), cfg.T):
                if track_count([clip.frames[i] for i in idx]):
                    items.append(WindowItem(clip, idx))
        return items

    def loss(self, item: WindowItem) -> torch.Tensor:
        cfg = self.config.scene_motion
        frames = [load_frame(item.clip.frames[i]) for i in item.indices]
        pixels, tracks = prepare_window(frames, cfg)
        face_logits, frame_logits = self.nets["net"](pixels, tracks)
        y_fa = torch.tensor([max(f.faces[k].label for f in frames) for k in range(len(frames[0].faces))])
        y_fr = int(y_fa.max())
        return loss_sp(face_logits, frame_logits, y_fa, y_fr, cfg.lambda_fa, cfg.lambda_fr)


class InterFaceTrainer(ModuleTrainer):
    module = ModuleName.M2

    def items(self, clips):
        items = []
        for clip in clips:
            for frame in self._frames(clip):
                kept, crops = face_crops(frame, self.config.crops)
                if not kept:
                    continue
                labels = np.array([[frame.faces[i].label] for i in kept])
                items.append(CropItem(f"{clip.clip_id}/{frame.frame_id}", to_uint8(crops), labels))
        return items

    def loss(self, item: CropItem) -> torch.Tensor:
        cfg = self.config.inter_face
        labels = item.targets[:, 0]
        embeddings, logits = self.nets["net"](to_batch(from_uint8(item.crops)))
        pairs = sample_pairs(labels.tolist(), cfg.pair_cap, item_seed(self.seed, item.key))
        return loss_app(logits, torch.from_numpy(labels).long(), embeddings, pairs, cfg)


class GazeTrainer(ModuleTrainer):
    module = ModuleName.M3

    def items(self, clips):
        items = []
        for clip in clips:
            for frame in self._frames(clip):
                kept, crops = eye_crops(frame, self.config.crops)
                keep = [k for k, i in enumerate(kept) if frame.faces[i].gaze_locked is not None]
                if not keep:
                    continue
                targets = np.array([[frame.faces[kept[k]].gaze_locked] for k in keep])
                items.append(CropItem(f"{clip.clip_id}/{frame.frame_id}", to_uint8(crops[keep]), targets))
        return items

    def loss(self, item: CropItem) -> torch.Tensor:
        logits = self.nets["net"](to_batch(from_uint8(item.crops)))
        return F.cross_entropy(logits, torch.from_numpy(item.targets[:, 0]).long())


class AgeGenderTrainer(ModuleTrainer):
    """Face and body attribute networks trained side by side."""

    module = ModuleName.M4

    def items(self, clips):
        items = []
        for clip in clips:
            for frame in self._frames(clip):
                key = f"{clip.clip_id}/{frame.frame_id}"
                kept, crops = face_crops(frame, self.config.crops)
                rows = [(k, frame.faces[i].face_attributes) for k, i in enumerate(kept)]
                rows = [(k, a, g) for k, (a, g) in rows if a is not None and g is not None]
                if rows:
                    targets = np.array([[a.index, g.index] for _, a, g in rows])
                    items.append(CropItem(key + "/face", to_uint8(crops[[k for k, _, _ in rows]]), targets, "face"))
                kept, crops = body_crops(frame, self.config.crops, self.config.attributes)
                rows = [(k, frame.faces[i]) for k, i in enumerate(kept)]
                rows = [(k, f) for k, f in rows if f.age is not None and f.gender is not None]
                if rows:
                    targets = np.array([[f.age.index, f.gender.index] for _, f in rows])
                    items.append(CropItem(key + "/body", to_uint8(crops[[k for k, _ in rows]]), targets, "body"))
        return items

    def loss(self, item: CropItem) -> torch.Tensor:
        age_logits, gender_logits = self.nets[item.net](to_batch(from_uint8(item.crops)))
        targets = torch.from_numpy(item.targets).long()
        return F.cross_entropy(age_logits, targets[:, 0]) + F.cross_entropy(gender_logits, targets[:, 1])


TRAINERS = {
    ModuleName.M1: SceneMotionTrainer,
    ModuleName.M2: InterFaceTrainer,
    ModuleName.M3: GazeTrainer,
    ModuleName.M4: AgeGenderTrainer,
}


def train_modules(config: Config, data_dir: Path, out_dir: Path, modules: Sequence[ModuleName], seed: int) -> Dict[ModuleName, Path]:
    """Train each requested module and write its checkpoint and epoch log."""
    data_dir, out_dir = Path(data_dir), Path(out_dir)
    train_clips = read_manifest(data_dir / "train" / "manifest.jsonl")
    val_path = data_dir / "val" / "manifest.jsonl"
    val_clips = read_manifest(val_path) if val_path.exists() else []
    written = {}
    for module in modules:
        trainer = TRAINERS[module](config, train_clips, val_clips, seed)
        checkpoint = trainer.fit(out_dir / "logs" / f"{trainer.name}.jsonl")
        path = checkpoint_path(out_dir, module)
        checkpoint.save(path)
        written[module] = path
    return written
