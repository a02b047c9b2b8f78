"""JSON-lines dataset manifest: one clip per line.

Record layout::

    {"clip_id": str, "fps": float, "truth_path": str | null,
     "frames": [{"frame_id": str, "image_path": str,
                 "faces": [{"face_id": str, "box": [x, y, w, h], "label": 0 | 1,
                            "gaze_locked": 0 | 1 | null, "age": str | null,
                            "gender": str | null, "face_age": str | null,
                            "face_gender": str | null}]}]}

Paths are relative to the manifest's directory.
"""

import json
import logging
from pathlib import Path
from typing import Iterable, Iterator, List, Optional

import numpy as np
from PIL import Image

from hicom.errors import ManifestError
from hicom.models import AgeClass, ClipSample, FaceBox, FaceSample, FrameSample, GenderClass

logger = logging.getLogger(__name__)

FACE_KEYS = ("face_id", "box", "label", "gaze_locked", "age", "gender", "face_age", "face_gender")


def _enum_or_none(cls, value):
    return cls(value) if value is not None else None


def face_to_dict(face: FaceSample) -> dict:
    return {
        "face_id": face.face_id,
        "box": face.box.to_list(),
        "label": face.label,
        "gaze_locked": face.gaze_locked,
        "age": face.age.value if face.age else None,
        "gender": face.gender.value if face.gender else None,
        "face_age": face.face_age.value if face.face_age else None,
        "face_gender": face.face_gender.value if face.face_gender else None,
    }


def face_from_dict(data: dict) -> FaceSample:
    try:
        return FaceSample(
            face_id=str(data["face_id"]),
            box=FaceBox.from_list(data["box"]),
            label=int(data["label"]),
            gaze_locked=data.get("gaze_locked"),
            age=_enum_or_none(AgeClass, data.get("age")),
            gender=_enum_or_none(GenderClass, data.get("gender")),
            face_age=_enum_or_none(AgeClass, data.get("face_age")),
            face_gender=_enum_or_none(GenderClass, data.get("face_gender")),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ManifestError(f"Bad face record {data!r}: {e}") from e


def clip_to_record(clip: ClipSample, root: Path) -> dict:
    """Serialize a clip; image and truth paths are made relative to `root`."""

    def rel(path: Optional[Path]) -> Optional[str]:
        if path is None:
            return None
        return Path(path).resolve().relative_to(root.resolve()).as_posix()

    return {
        "clip_id": clip.clip_id,
        "fps": clip.fps,
        "truth_path": rel(clip.truth_path),
        "frames": [
            {
                "frame_id": frame.frame_id,
                "image_path": rel(frame.image_path),
                "faces": [face_to_dict(f) for f in frame.faces],
            }
            for frame in clip.frames
        ],
    }


def record_to_clip(record: dict, root: Path) -> ClipSample:
    """Parse one manifest record; images are not loaded."""
    try:
        frames = tuple(
            FrameSample(
                frame_id=str(frame["frame_id"]),
                image_path=root / frame["image_path"],
                faces=tuple(face_from_dict(f) for f in frame["faces"]),
            )
            for frame in record["frames"]
        )
        truth = record.get("truth_path")
        return ClipSample(
            clip_id=str(record["clip_id"]),
            frames=frames,
            fps=float(record.get("fps", 25.0)),
            truth_path=root / truth if truth else None,
        )
    except ManifestError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise ManifestError(f"Bad clip record {record.get('clip_id', '?')}: {e}") from e


def write_manifest(path: Path, clips: Iterable[ClipSample]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    root = path.parent
    with open(path, "w") as f:
        for clip in clips:
            f.write(json.dumps(clip_to_record(clip, root), sort_keys=True) + "\n")


def write_records(path: Path, records: Iterable[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        for record in records:
            f.write(json.dumps(record, sort_keys=True) + "\n")


def iter_records(path: Path) -> Iterator[dict]:
    with open(path, "r") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as e:
                raise ManifestError(f"{path}:{lineno} is not valid JSON: {e}") from e


def read_manifest(path: Path) -> List[ClipSample]:
    """Read every clip of a manifest (frames without pixels)."""
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"Manifest not found: {path}")
    clips = [record_to_clip(record, path.parent) for record in iter_records(path)]
    logger.debug("Read %d clips from %s", len(clips), path)
    return clips


def load_image(path: Path) -> np.ndarray:
    """Read an RGB raster as float32 in [0, 1]."""
    if not Path(path).exists():
        raise ManifestError(f"Image not found: {path}")
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0


def save_image(path: Path, image: np.ndarray) -> None:
    """Write a float [0, 1] image as lossless PNG."""
    path.parent.mkdir(parents=True, exist_ok=True)
    pixels = np.clip(np.round(image * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(pixels).save(path, format="PNG")


def load_frame(frame: FrameSample) -> FrameSample:
    if frame.image is not None:
        return frame
    if frame.image_path is None:
        raise ManifestError(f"Frame {frame.frame_id} has neither pixels nor an image path")
    return frame.with_image(load_image(frame.image_path))


def load_clip(clip: ClipSample) -> ClipSample:
    """Return the clip with every frame's pixels loaded."""
    return ClipSample(
        clip_id=clip.clip_id,
        frames=tuple(load_frame(f) for f in clip.frames),
        fps=clip.fps,
        truth_path=clip.truth_path,
    )


def read_truth(clip: ClipSample) -> Optional[dict]:
    """Generator truth sidecar for a clip, if the dataset has one."""
    if clip.truth_path is None or not Path(clip.truth_path).exists():
        return None
    with open(clip.truth_path, "r") as f:
        return json.load(f)
