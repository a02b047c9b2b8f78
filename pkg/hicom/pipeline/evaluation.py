"""Run trained modules over a split, fuse, and score the ablation stacks."""

import json
import logging
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from hicom.config import FusionConfig
from hicom.core.fusion import ABLATION_STACKS, ablation_stack, stack_name
from hicom.core.manifest import load_clip, read_manifest, read_truth
from hicom.core.metrics import FrameOutcome, compute_face_metrics, compute_frame_complete_metrics, fake_recall, flatten_faces
from hicom.detectors.body_face import AttributePrediction, mismatch_rule, predict_attributes
from hicom.detectors.gaze import classify_gaze, gaze_rule, locked_from_probability
from hicom.detectors.inter_face import embed_faces
from hicom.detectors.scene_motion import infer_scene_motion, prepare_window, track_count, window_indices
from hicom.errors import ConfigError, ManifestError
from hicom.models import (
    AblationRow,
    AnomalyKind,
    ClipSample,
    FrameSample,
    MetricsReport,
    ModuleName,
    ModuleVerdict,
    PerturbationKind,
    PerturbationRow,
)
from hicom.pipeline.frames import body_crops, eye_crops, face_crops
from hicom.pipeline.modules import load_module
from hicom.synth.perturb import apply_perturbation

logger = logging.getLogger(__name__)

# per frame: face_id -> verdict
FrameVerdicts = Dict[str, ModuleVerdict]


@dataclass
class FaceDetection:
    """Everything known about one face after the detectors ran."""

    clip_id: str
    frame_id: str
    face_id: str
    truth: int
    verdicts: Dict[ModuleName, ModuleVerdict]
    anomalies: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "frame_id": self.frame_id,
            "face_id": self.face_id,
            "truth": self.truth,
            "anomalies": self.anomalies,
            "verdicts": {m.value: v.to_dict() for m, v in self.verdicts.items()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FaceDetection":
        return cls(
            clip_id=data["clip_id"],
            frame_id=data["frame_id"],
            face_id=data["face_id"],
            truth=int(data["truth"]),
            anomalies=list(data.get("anomalies", [])),
            verdicts={ModuleName(k): ModuleVerdict.from_dict(v) for k, v in data["verdicts"].items()},
        )


class SceneMotionRunner:
    """M1 per window; the verdict applies to every frame of the window."""

    def __init__(self, nets, sections, threshold: float):
        self.net = nets["net"]
        self.cfg = sections["scene_motion"]
        self.threshold = threshold

    def run(self, clip: ClipSample) -> List[FrameVerdicts]:
        out: List[FrameVerdicts] = [{} for _ in clip.frames]
        for indices in window_indices(len(clip.frames), self.cfg.T):
            window = [clip.frames[i] for i in indices]
            if not track_count(window):
                logger.warning("M1 skipped %s frames %d-%d: no consistent face tracks", clip.clip_id, indices[0], indices[-1])
                continue
            pixels, tracks = prepare_window(window, self.cfg)
            face_p, _ = infer_scene_motion(self.net, pixels, tracks)
            for i in set(indices):
                for face, p in zip(clip.frames[i].faces, face_p):
                    out[i][face.face_id] = ModuleVerdict.from_score(ModuleName.M1, float(p), self.threshold)
        return out


class FrameRunner:
    """Modules that look at one frame at a time."""

    def run(self, clip: ClipSample) -> List[FrameVerdicts]:
        return [self.run_frame(frame) for frame in clip.frames]

    def run_frame(self, frame: FrameSample) -> FrameVerdicts:
        raise NotImplementedError


class InterFaceRunner(FrameRunner):
    def __init__(self, nets, sections, threshold: float):
        self.net = nets["net"]
        self.policy = sections["crops"]
        self.threshold = threshold

    def run_frame(self, frame):
        kept, crops = face_crops(frame, self.policy)
        if not kept:
            return {}
        _, p_fake = embed_faces(self.net, crops)
        return {
            frame.faces[i].face_id: ModuleVerdict.from_score(ModuleName.M2, float(p), self.threshold)
            for i, p in zip(kept, p_fake)
        }


class GazeRunner(FrameRunner):
    """Eye classifier, then the group rule over the faces that could be cropped."""

    def __init__(self, nets, sections):
        self.net = nets["net"]
        self.policy = sections["crops"]
        self.threshold = sections["gaze"].threshold

    def run_frame(self, frame):
        kept, crops = eye_crops(frame, self.policy)
        if not kept:
            return {}
        locked = locked_from_probability(classify_gaze(self.net, crops), self.threshold)
        flags = gaze_rule(locked)
        return {
            frame.faces[i].face_id: ModuleVerdict(ModuleName.M3, flag, note="locked" if lk else "off-camera")
            for i, flag, lk in zip(kept, flags, locked)
        }


class AgeGenderRunner(FrameRunner):
    def __init__(self, nets, sections):
        self.face_net = nets["face"]
        self.body_net = nets["body"]
        self.policy = sections["crops"]
        self.cfg = sections["attributes"]

    def run_frame(self, frame):
        kept, crops = face_crops(frame, self.policy)
        if not kept:
            return {}
        faces = dict(zip(kept, predict_attributes(self.face_net, crops)))
        body_kept, bodies = body_crops(frame, self.policy, self.cfg)
        body = dict(zip(body_kept, predict_attributes(self.body_net, bodies))) if body_kept else {}
        out = {}
        for i, guess in faces.items():
            flag, note = mismatch_rule(AttributePrediction(guess, body.get(i)), self.cfg.confidence_floor)
            out[frame.faces[i].face_id] = ModuleVerdict(ModuleName.M4, flag, note=note)
        return out


class OracleRunner:
    """Generator truth turned into verdicts; fusing them must be perfect."""

    KIND = {
        ModuleName.M1: AnomalyKind.MOTION_JITTER.value,
        ModuleName.M2: AnomalyKind.APPEARANCE_MISMATCH.value,
    }

    def __init__(self, module: ModuleName):
        self.module = module

    def run(self, clip: ClipSample) -> List[FrameVerdicts]:
        truth = read_truth(clip)
        if truth is None:
            raise ManifestError(f"Clip {clip.clip_id} has no truth sidecar; --oracle needs generated data")
        verdicts = {}
        for face in truth["faces"]:
            if self.module in self.KIND:
                score = 1.0 if self.KIND[self.module] in face["anomalies"] else 0.0
                verdicts[face["face_id"]] = ModuleVerdict.from_score(self.module, score)
            else:
                verdicts[face["face_id"]] = ModuleVerdict(self.module, face[f"expected_{self.module.value}"], note="oracle")
        return [dict(verdicts) for _ in clip.frames]


def build_runners(run_dir: Path, modules: Sequence[ModuleName], fusion: FusionConfig, oracle: bool = False) -> dict:
    if ModuleName.M1 not in modules:
        raise ConfigError("Evaluation needs M1: every ablation stack starts there")
    runners = {}
    for module in modules:
        if oracle:
            runners[module] = OracleRunner(module)
            continue
        nets, sections = load_module(run_dir, module)
        if module is ModuleName.M1:
            runners[module] = SceneMotionRunner(nets, sections, fusion.m1_threshold)
        elif module is ModuleName.M2:
            runners[module] = InterFaceRunner(nets, sections, fusion.m2_threshold)
        elif module is ModuleName.M3:
            runners[module] = GazeRunner(nets, sections)
        else:
            runners[module] = AgeGenderRunner(nets, sections)
    return runners


def frame_seed(seed: int, clip_id: str, frame_id: str) -> int:
    return (seed + zlib.crc32(f"{clip_id}/{frame_id}".encode())) % (2 ** 32)


def perturb_clip(clip: ClipSample, kind: PerturbationKind, severity: int, seed: int) -> ClipSample:
    """Perturbed pixels; faces, boxes and labels stay as they are."""
    frames = tuple(
        f.with_image(apply_perturbation(f.image, kind, severity, frame_seed(seed, clip.clip_id, f.frame_id)))
        for f in clip.frames
    )
    return ClipSample(clip_id=clip.clip_id, frames=frames, fps=clip.fps, truth_path=clip.truth_path)


def detect_clip(clip: ClipSample, runners: dict) -> List[FaceDetection]:
    """Run every module over a loaded clip; faces any module could not score are dropped."""
    per_module = {module: runner.run(clip) for module, runner in runners.items()}
    truth = read_truth(clip)
    anomalies = {f["face_id"]: list(f["anomalies"]) for f in truth["faces"]} if truth else {}
    detections = []
    for t, frame in enumerate(clip.frames):
        for face in frame.faces:
            verdicts = {m: per_module[m][t].get(face.face_id) for m in runners}
            if any(v is None for v in verdicts.values()):
                logger.warning("Dropping unusable face %s in %s/%s", face.face_id, clip.clip_id, frame.frame_id)
                continue
            detections.append(
                FaceDetection(clip.clip_id, frame.frame_id, face.face_id, face.label, verdicts, anomalies.get(face.face_id, []))
            )
    return detections


def detect(clips: Iterable[ClipSample], runners: dict, perturbation: Optional[Tuple[PerturbationKind, int]] = None, seed: int = 0) -> List[FaceDetection]:
    detections = []
    for clip in clips:
        loaded = load_clip(clip)
        if perturbation is not None:
            loaded = perturb_clip(loaded, perturbation[0], perturbation[1], seed)
        detections.extend(detect_clip(loaded, runners))
    return detections


def _frames_of(detections: Sequence[FaceDetection]) -> Dict[Tuple[str, str], List[FaceDetection]]:
    frames: Dict[Tuple[str, str], List[FaceDetection]] = {}
    for d in detections:
        frames.setdefault((d.clip_id, d.frame_id), []).append(d)
    return frames


def available_stacks(modules: Sequence[ModuleName]) -> List[Tuple[ModuleName, ...]]:
    return [stack for stack in ABLATION_STACKS if set(stack) <= set(modules)]


def score_stack(detections: Sequence[FaceDetection], stack: Sequence[ModuleName], fusion: FusionConfig) -> Tuple[AblationRow, List[int]]:
    """Metrics of one module subset, plus the fused label of every detection."""
    fused = [ablation_stack(d.verdicts, stack, fusion) for d in detections]
    by_frame: Dict[Tuple[str, str], list] = {}
    for d, result in zip(detections, fused):
        by_frame.setdefault((d.clip_id, d.frame_id), []).append((d, result))
    outcomes = [
        FrameOutcome([r.score for _, r in pairs], [r.label for _, r in pairs], [d.truth for d, _ in pairs])
        for pairs in by_frame.values()
    ]
    scores, predicted, truth = flatten_faces(outcomes)
    fac, fau = compute_face_metrics(scores, predicted, truth)
    fcac, fcau = compute_frame_complete_metrics(outcomes)
    row = AblationRow(
        name=stack_name(stack),
        modules=[m.value for m in stack],
        FAC=fac,
        FAU=fau,
        FCAC=fcac,
        FCAU=fcau,
        fake_recall=fake_recall(predicted, truth),
    )
    return row, [r.label for r in fused]


def anomaly_recall(detections: Sequence[FaceDetection], labels_by_row: Dict[str, List[int]]) -> Dict[str, Dict[str, Optional[float]]]:
    """Per anomaly kind and ablation row: share of faces carrying the kind that were flagged."""
    out = {}
    for kind in AnomalyKind:
        carriers = [k for k, d in enumerate(detections) if kind.value in d.anomalies]
        out[kind.value] = {
            row: (float(np.mean([labels[k] for k in carriers])) if carriers else None)
            for row, labels in labels_by_row.items()
        }
    return out


def build_report(detections: Sequence[FaceDetection], modules: Sequence[ModuleName], fusion: FusionConfig) -> MetricsReport:
    if not detections:
        raise ManifestError("Nothing to evaluate: no usable faces")
    rows, labels_by_row = [], {}
    for stack in available_stacks(modules):
        row, labels = score_stack(detections, stack, fusion)
        rows.append(row)
        labels_by_row[row.name] = labels
    full = rows[-1]
    return MetricsReport(
        FAC=full.FAC,
        FAU=full.FAU,
        FCAC=full.FCAC,
        FCAU=full.FCAU,
        n_faces=len(detections),
        n_frames=len(_frames_of(detections)),
        ablation=rows,
        anomaly_recall=anomaly_recall(detections, labels_by_row),
    )


def perturbation_rows(
    clips: Sequence[ClipSample],
    runners: dict,
    modules: Sequence[ModuleName],
    fusion: FusionConfig,
    clean: MetricsReport,
    grid: Sequence[Tuple[PerturbationKind, int]],
    seed: int,
) -> List[PerturbationRow]:
    baseline = {row.name: row for row in clean.ablation}
    rows = []
    for kind, severity in grid:
        logger.info("Perturbation %s at severity %d", kind.value, severity)
        detections = detect(clips, runners, (kind, severity), seed)
        for stack in available_stacks(modules):
            row, _ = score_stack(detections, stack, fusion)
            base = baseline[row.name]
            rows.append(
                PerturbationRow(
                    kind=kind.value,
                    severity=severity,
                    row=row.name,
                    FAC=row.FAC,
                    FCAC=row.FCAC,
                    FAC_drop=base.FAC - row.FAC,
                    FCAC_drop=base.FCAC - row.FCAC,
                )
            )
    return rows


def write_detections(path: Path, detections: Sequence[FaceDetection]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        for d in detections:
            f.write(json.dumps(d.to_dict(), sort_keys=True) + "\n")


def read_detections(path: Path) -> List[FaceDetection]:
    if not Path(path).exists():
        raise ManifestError(f"No detections at {path}; run `hicom evaluate` first")
    with open(path, "r") as f:
        return [FaceDetection.from_dict(json.loads(line)) for line in f if line.strip()]


def evaluate_run(
    manifest: Path,
    run_dir: Path,
    out_dir: Path,
    modules: Sequence[ModuleName],
    fusion: FusionConfig,
    grid: Sequence[Tuple[PerturbationKind, int]] = (),
    oracle: bool = False,
    seed: int = 0,
) -> MetricsReport:
    """Evaluate checkpoints in `run_dir` on `manifest`; writes report and detections to `out_dir`."""
    clips = read_manifest(manifest)
    runners = build_runners(run_dir, modules, fusion, oracle)
    detections = detect(clips, runners)
    report = build_report(detections, modules, fusion)
    if grid:
        report.perturbations = perturbation_rows(clips, runners, modules, fusion, report, grid, seed)
    out_dir = Path(out_dir)
    report.save(out_dir / "report.json")
    write_detections(out_dir / "detections.jsonl", detections)
    logger.info("Evaluated %d faces in %d frames: FCAC %.4f", report.n_faces, report.n_frames, report.FCAC)
    return report
