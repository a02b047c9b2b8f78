"""Which networks each detector module owns and where they are stored."""

import logging
from pathlib import Path
from typing import Dict, List

import torch.nn as nn

from hicom.config import Config, section_from_dict
from hicom.core.checkpoint import Checkpoint
from hicom.detectors.body_face import AttributeNet
from hicom.detectors.gaze import GazeNet
from hicom.detectors.inter_face import InterFaceEncoder
from hicom.detectors.scene_motion import SceneMotionNet
from hicom.errors import ConfigError
from hicom.models import ModuleName

logger = logging.getLogger(__name__)

CHECKPOINT_NAMES: Dict[ModuleName, str] = {
    ModuleName.M1: "scene_motion",
    ModuleName.M2: "inter_face",
    ModuleName.M3: "gaze",
    ModuleName.M4: "agegender",
}

MODULE_ALIASES: Dict[str, ModuleName] = {
    "m1": ModuleName.M1,
    "scene_motion": ModuleName.M1,
    "m2": ModuleName.M2,
    "inter_face": ModuleName.M2,
    "m3": ModuleName.M3,
    "gaze": ModuleName.M3,
    "m4": ModuleName.M4,
    "agegender": ModuleName.M4,
}

# Config sections each module needs to rebuild its networks and crops.
MODULE_SECTIONS: Dict[ModuleName, tuple] = {
    ModuleName.M1: ("scene_motion",),
    ModuleName.M2: ("crops", "inter_face"),
    ModuleName.M3: ("crops", "gaze"),
    ModuleName.M4: ("crops", "attributes"),
}


def parse_modules(value: str) -> List[ModuleName]:
    """'all' or a comma list of M1..M4 / scene_motion, inter_face, gaze, agegender."""
    value = (value or "all").strip().lower()
    if value == "all":
        return list(CHECKPOINT_NAMES)
    modules = []
    for part in value.split(","):
        part = part.strip()
        if not part:
            continue
        if part not in MODULE_ALIASES:
            raise ConfigError(f"Unknown module '{part}' (choose from M1, M2, gaze, agegender, all)")
        if MODULE_ALIASES[part] not in modules:
            modules.append(MODULE_ALIASES[part])
    if not modules:
        raise ConfigError("No modules selected")
    return sorted(modules, key=list(CHECKPOINT_NAMES).index)


def checkpoint_path(run_dir: Path, module: ModuleName) -> Path:
    return Path(run_dir) / "checkpoints" / f"{CHECKPOINT_NAMES[module]}.pt"


def sections_for(module: ModuleName, config_dict: dict) -> dict:
    """Section dataclasses of `module` from a `Config.to_dict()`-shaped dict."""
    return {name: section_from_dict(name, config_dict[name]) for name in MODULE_SECTIONS[module]}


def build_networks(module: ModuleName, sections: dict) -> Dict[str, nn.Module]:
    if module is ModuleName.M1:
        return {"net": SceneMotionNet(sections["scene_motion"])}
    if module is ModuleName.M2:
        return {"net": InterFaceEncoder(sections["inter_face"])}
    if module is ModuleName.M3:
        return {"net": GazeNet(sections["gaze"])}
    width = sections["attributes"].width
    return {"face": AttributeNet(width), "body": AttributeNet(width)}


def networks_from_config(module: ModuleName, config: Config) -> Dict[str, nn.Module]:
    return build_networks(module, sections_for(module, config.to_dict()))


def load_module(run_dir: Path, module: ModuleName):
    """Rebuild a trained module from its checkpoint.

    Returns (networks, sections): the sections come from the checkpoint so the
    crops match what the networks were trained on.
    """
    ckpt = Checkpoint.load(checkpoint_path(run_dir, module), CHECKPOINT_NAMES[module])
    sections = sections_for(module, ckpt.config)
    nets = build_networks(module, sections)
    for name, net in nets.items():
        net.load_state_dict(ckpt.state[name])
        net.eval()
    logger.info("Loaded %s from epoch %d (val loss %s)", CHECKPOINT_NAMES[module], ckpt.epoch, ckpt.val_loss)
    return nets, sections
