"""Normalize external face-forgery annotations into the hicom manifest."""

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional, Tuple

from hicom.core.manifest import face_to_dict, record_to_clip, write_records
from hicom.errors import ManifestError

logger = logging.getLogger(__name__)

LAYOUTS = ("jsonl", "ffiw_like")
ANNOTATION_FILE = "annotation.json"


@dataclass
class IngestResult:
    """Normalized manifest location plus the records that were turned away."""

    out_path: Path
    n_clips: int = 0
    rejections: List[Tuple[str, str]] = field(default_factory=list)


class ManifestIngestor:
    """Reads one external layout and writes a normalized JSONL manifest.

    Broken records are collected as rejections and the run continues; only a
    source where every record fails is an error.
    """

    def __init__(self, source: Path, layout: str):
        if layout not in LAYOUTS:
            raise ManifestError(f"Unknown layout {layout!r}; expected one of {', '.join(LAYOUTS)}")
        self.source = Path(source).expanduser()
        self.layout = layout
        if not self.source.exists():
            raise ManifestError(f"Nothing to ingest at {self.source}")

    def ingest(self, out_path: Path) -> IngestResult:
        out_path = Path(out_path)
        result = IngestResult(out_path=out_path)
        normalized = []
        reader = self._read_jsonl if self.layout == "jsonl" else self._read_ffiw_like
        for clip_id, record, src_root in reader(result):
            try:
                normalized.append(self._normalize(record, src_root, out_path.parent))
            except ManifestError as e:
                result.rejections.append((clip_id, str(e)))

        if not normalized and result.rejections:
            raise ManifestError(
                f"No usable records in {self.source}:\n" + "\n".join(f"{c}: {r}" for c, r in result.rejections)
            )
        write_records(out_path, normalized)
        result.n_clips = len(normalized)

        for clip_id, reason in result.rejections:
            logger.warning("Rejected %s: %s", clip_id, reason)
        logger.info("Ingested %d clips into %s (%d rejected)", result.n_clips, out_path, len(result.rejections))
        return result

    def _read_jsonl(self, result: IngestResult) -> Iterator[Tuple[str, dict, Path]]:
        root = self.source.parent
        with open(self.source, "r") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as e:
                    result.rejections.append((f"line-{lineno}", f"not valid JSON: {e}"))
                    continue
                if not isinstance(record, dict):
                    result.rejections.append((f"line-{lineno}", "not a JSON object"))
                    continue
                yield str(record.get("clip_id", f"line-{lineno}")), record, root

    def _read_ffiw_like(self, result: IngestResult) -> Iterator[Tuple[str, dict, Path]]:
        """Tree of <video>/annotation.json files; one clip per run of frames with the same faces."""
        for annotation in sorted(self.source.glob(f"*/{ANNOTATION_FILE}")):
            video_dir = annotation.parent
            try:
                with open(annotation, "r") as f:
                    data = json.load(f)
                frames = sorted(data["frames"], key=lambda fr: int(fr["index"]))
            except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                result.rejections.append((video_dir.name, f"unreadable annotation: {e}"))
                continue
            fps = float(data.get("fps", 25.0))
            for k, run in enumerate(_runs_by_tracks(frames)):
                clip_id = f"{video_dir.name}_{k}"
                if not _track_ids(run[0]):
                    result.rejections.append((clip_id, f"no face tracks in frames {run[0].get('index')}-{run[-1].get('index')}"))
                    continue
                try:
                    record = _ffiw_clip_record(clip_id, run, fps)
                except (KeyError, TypeError, ValueError) as e:
                    result.rejections.append((clip_id, f"bad frame entry: {e}"))
                    continue
                yield clip_id, record, video_dir

    @staticmethod
    def _normalize(record: dict, src_root: Path, out_root: Path) -> dict:
        _check_required(record)
        clip = record_to_clip(record, src_root)

        def rel(path: Optional[Path]) -> Optional[str]:
            if path is None:
                return None
            return Path(os.path.relpath(Path(path).resolve(), out_root.resolve())).as_posix()

        return {
            "clip_id": clip.clip_id,
            "fps": clip.fps,
            "truth_path": rel(clip.truth_path),
            "frames": [
                {
                    "frame_id": frame.frame_id,
                    "image_path": rel(frame.image_path),
                    "faces": [face_to_dict(face) for face in frame.faces],
                }
                for frame in clip.frames
            ],
        }


def _check_required(record: dict) -> None:
    for frame in record.get("frames", []):
        for face in frame.get("faces", []):
            fid = face.get("face_id", "?")
            if face.get("box") is None:
                raise ManifestError(f"face {fid} in frame {frame.get('frame_id', '?')} has no box")
            if face.get("label") is None:
                raise ManifestError(f"face {fid} in frame {frame.get('frame_id', '?')} has no label")


def _track_ids(frame: dict) -> Tuple[str, ...]:
    return tuple(sorted(str(face.get("track")) for face in frame.get("faces", [])))


def _runs_by_tracks(frames: List[dict]) -> List[List[dict]]:
    runs: List[List[dict]] = []
    for frame in frames:
        if runs and _track_ids(runs[-1][-1]) == _track_ids(frame):
            runs[-1].append(frame)
        else:
            runs.append([frame])
    return runs


def _ffiw_face(face: dict) -> dict:
    bbox = face.get("bbox")
    box = None
    if bbox is not None:
        x1, y1, x2, y2 = (float(v) for v in bbox)
        box = [x1, y1, x2 - x1, y2 - y1]
    fake = face.get("fake")
    return {
        "face_id": str(face.get("track")),
        "box": box,
        "label": int(fake) if fake is not None else None,
        "gaze_locked": face.get("gaze_locked"),
        "age": face.get("age"),
        "gender": face.get("gender"),
        "face_age": None,
        "face_gender": None,
    }


def _ffiw_clip_record(clip_id: str, frames: List[dict], fps: float) -> dict:
    return {
        "clip_id": clip_id,
        "fps": fps,
        "truth_path": None,
        "frames": [
            {
                "frame_id": f"{int(frame['index']):05d}",
                "image_path": frame["file"],
                "faces": [_ffiw_face(face) for face in sorted(frame.get("faces", []), key=lambda fc: str(fc.get("track")))],
            }
            for frame in frames
        ],
    }


def ingest_external_manifest(path: Path, layout: str, out_path: Path) -> IngestResult:
    """Normalize `path` (a JSONL manifest or an ffiw_like tree) into `out_path`."""
    return ManifestIngestor(path, layout).ingest(out_path)
