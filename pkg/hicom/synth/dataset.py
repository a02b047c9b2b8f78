"""Build the train/val/test synthetic dataset on disk."""

import hashlib
import json
import logging
import math
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from hicom.config import SynthConfig
from hicom.core.manifest import clip_to_record, save_image, write_records
from hicom.errors import OutputExistsError
from hicom.models import AnomalyKind, ClipSample, FrameSample
from hicom.synth.generator import SceneSampler, gaze_outlier_allowed, generate_clip

logger = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")
FAKE_CATEGORIES = tuple(k.value for k in AnomalyKind) + ("mixed",)
SEED_STRIDE = 1_000_000
MIN_FACES, MAX_FACES = 2, 8


@dataclass
class DatasetSummary:
    """What build_dataset wrote: manifest per split and the audit."""

    root: Path
    manifests: Dict[str, Path] = field(default_factory=dict)
    audit: dict = field(default_factory=dict)

    @property
    def audit_path(self) -> Path:
        return self.root / "audit.json"


def split_sizes(n_clips: int, ratios: Tuple[float, float, float]) -> Dict[str, int]:
    """Rounded split sizes; rounding slack goes to the last split."""
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"split ratios must sum to 1, got {ratios}")
    train = int(round(n_clips * ratios[0]))
    val = min(int(round(n_clips * ratios[1])), n_clips - train)
    return {"train": train, "val": val, "test": n_clips - train - val}


def split_seed(master_seed: int, split: str, index: int) -> int:
    """Seeds of different splits never collide."""
    return master_seed * SEED_STRIDE * len(SPLITS) + SPLITS.index(split) * SEED_STRIDE + index


def clip_plan(index: int, fake_fraction: float) -> Tuple[str, int]:
    """(category, n_faces) for the index-th clip of a split.

    Real clips are spread evenly at rate 1 - fake_fraction; fake clips cycle
    through every anomaly kind plus mixed, face counts cycle 2..8.
    """
    real_rate = 1.0 - fake_fraction
    is_real = math.floor((index + 1) * real_rate) > math.floor(index * real_rate)
    n_faces = MIN_FACES + index % (MAX_FACES - MIN_FACES + 1)
    if is_real:
        return "real", n_faces
    n_fake_before = index - math.floor(index * real_rate)
    category = FAKE_CATEGORIES[n_fake_before % len(FAKE_CATEGORIES)]
    if category == AnomalyKind.GAZE_OUTLIER.value and not gaze_outlier_allowed(n_faces, 1):
        n_faces += 1
    return category, n_faces


def _render_one(job: Tuple[Path, str, int, int, str, int, Tuple[int, int], int]) -> dict:
    root, split, index, seed, category, n_faces, canvas, n_frames = job
    clip_id = f"{split}_{index:05d}"
    clip_dir = root / split / clip_id
    if clip_dir.exists():
        raise OutputExistsError(f"Clip directory already exists: {clip_dir}")
    spec = SceneSampler(canvas=canvas, n_frames=n_frames).sample(seed, category, n_faces)
    clip, truth = generate_clip(spec, clip_id)
    clip_dir.mkdir(parents=True)
    frames = []
    for frame in clip.frames:
        path = clip_dir / f"frame_{frame.frame_id}.png"
        save_image(path, frame.image)
        frames.append(FrameSample(frame_id=frame.frame_id, faces=frame.faces, image_path=path))
    truth_path = clip_dir / "truth.json"
    truth["category"] = category
    with open(truth_path, "w") as f:
        json.dump(truth, f, indent=2, sort_keys=True)
    stored = ClipSample(clip_id=clip_id, frames=tuple(frames), fps=clip.fps, truth_path=truth_path)
    record = clip_to_record(stored, root / split)
    return {"record": record, "category": category, "n_faces": n_faces, "kinds": sorted(a.value for a in spec.anomaly_kinds)}


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def build_dataset(
    out_dir: Path,
    cfg: SynthConfig,
    master_seed: int = 0,
    n_clips: Optional[int] = None,
    force: bool = False,
) -> DatasetSummary:
    """Render every split, write the manifests and the stratification audit."""
    out_dir = Path(out_dir)
    n_clips = cfg.n_clips if n_clips is None else n_clips
    sizes = split_sizes(n_clips, cfg.split_ratios)
    if out_dir.exists() and any(out_dir.iterdir()):
        if not force:
            raise OutputExistsError(f"{out_dir} already holds data; pass --force to overwrite")
        logger.warning("Removing existing dataset at %s", out_dir)
        shutil.rmtree(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    summary = DatasetSummary(root=out_dir)
    audit = {"master_seed": master_seed, "n_clips": n_clips, "splits": {}}
    for split in SPLITS:
        jobs = []
        for index in range(sizes[split]):
            category, n_faces = clip_plan(index, cfg.fake_fraction)
            jobs.append((out_dir, split, index, split_seed(master_seed, split, index), category, n_faces, tuple(cfg.canvas), cfg.n_frames))
        if cfg.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                results = list(pool.map(_render_one, jobs, chunksize=8))
        else:
            results = [_render_one(job) for job in jobs]

        manifest = out_dir / split / "manifest.jsonl"
        write_records(manifest, [r["record"] for r in results])
        summary.manifests[split] = manifest
        audit["splits"][split] = _split_audit(results, manifest)
        logger.info("Wrote %d %s clips to %s", len(results), split, manifest)

    with open(summary.audit_path, "w") as f:
        json.dump(audit, f, indent=2, sort_keys=True)
    summary.audit = audit
    return summary


def _split_audit(results: List[dict], manifest: Path) -> dict:
    kinds = {k.value: 0 for k in AnomalyKind}
    faces = {str(n): 0 for n in range(MIN_FACES, MAX_FACES + 1)}
    real = 0
    for r in results:
        faces[str(r["n_faces"])] += 1
        real += int(not r["kinds"])
        for kind in r["kinds"]:
            kinds[kind] += 1
    return {
        "clips": len(results),
        "real_clips": real,
        "anomaly_kinds": kinds,
        "n_faces": faces,
        "sha256": file_sha256(manifest),
    }
