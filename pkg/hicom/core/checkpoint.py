"""Self-describing checkpoint container shared by all detector modules."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import torch

from hicom.errors import CheckpointError

logger = logging.getLogger(__name__)

FORMAT = "hicom-checkpoint"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    """Weights plus everything needed to rebuild and audit them."""

    module: str
    config: dict
    state: Dict[str, dict]  # network name -> state_dict
    seed: int
    epoch: int
    val_loss: Optional[float] = None
    history: List[dict] = field(default_factory=list)

    def save(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        torch.save(
            {
                "format": FORMAT,
                "version": FORMAT_VERSION,
                "module": self.module,
                "config": self.config,
                "state": self.state,
                "seed": self.seed,
                "epoch": self.epoch,
                "val_loss": self.val_loss,
                "history": self.history,
            },
            path,
        )
        logger.info("Saved %s checkpoint (epoch %d) to %s", self.module, self.epoch, path)

    @classmethod
    def load(cls, path: Path, module: Optional[str] = None) -> "Checkpoint":
        path = Path(path)
        if not path.exists():
            raise CheckpointError(f"Checkpoint not found: {path}")
        try:
            data = torch.load(path, map_location="cpu", weights_only=True)
        except Exception as e:
            raise CheckpointError(f"Could not read checkpoint {path}: {e}") from e
        if data.get("format") != FORMAT or data.get("version") != FORMAT_VERSION:
            raise CheckpointError(f"{path} is not a {FORMAT} v{FORMAT_VERSION} file")
        if module is not None and data["module"] != module:
            raise CheckpointError(f"{path} holds module '{data['module']}', expected '{module}'")
        return cls(
            module=data["module"],
            config=data["config"],
            state=data["state"],
            seed=data["seed"],
            epoch=data["epoch"],
            val_loss=data.get("val_loss"),
            history=data.get("history", []),
        )
