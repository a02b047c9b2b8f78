"""Seed-deterministic multi-face scene generator.

Faces are parametric glyphs: a head ellipse whose hair, eyes and wrinkles
carry the rendered age/gender, pupils that encode gaze, and a body polygon
whose size, cut and palette carry the identity's age/gender. Anomalies are
injected per fake face, one kind per detector cue.
"""

import colorsys
import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np
from PIL import Image, ImageDraw

from hicom.detectors.body_face import attributes_mismatch
from hicom.detectors.gaze import gaze_rule
from hicom.errors import SceneLayoutError
from hicom.models import (
    AgeClass,
    AnomalyKind,
    ClipSample,
    FaceBox,
    FaceSample,
    FaceSpec,
    FrameSample,
    GazeMode,
    GenderClass,
    SceneSpec,
)

logger = logging.getLogger(__name__)

MAX_IOU = 0.3
MAX_RESAMPLE = 50
REAL_HUE_RANGE = (0.03, 0.10)

HAIR_COLORS = {
    AgeClass.CHILD: [(196, 150, 80), (150, 100, 50)],
    AgeClass.MIDDLE: [(40, 28, 20), (70, 45, 25)],
    AgeClass.SENIOR: [(215, 215, 215), (175, 175, 180)],
}
BODY_COLORS = {
    AgeClass.CHILD: [(240, 200, 40), (230, 90, 60), (90, 200, 90)],
    AgeClass.MIDDLE: [(40, 70, 150), (60, 60, 70), (30, 110, 100)],
    AgeClass.SENIOR: [(130, 95, 60), (190, 170, 130), (110, 90, 100)],
}
# (torso width, torso height) in head widths / head heights
BODY_SHAPE = {AgeClass.CHILD: (1.5, 1.7), AgeClass.MIDDLE: (2.3, 3.0), AgeClass.SENIOR: (2.0, 2.6)}


class SceneSampler:
    """Draws SceneSpecs for a category ('real', an AnomalyKind value, or 'mixed')."""

    def __init__(self, canvas: Tuple[int, int] = (256, 448), n_frames: int = 8):
        self.canvas = canvas
        self.n_frames = n_frames

    def sample(self, seed: int, category: str, n_faces: int) -> SceneSpec:
        rng = np.random.default_rng(seed)
        for _ in range(MAX_RESAMPLE):
            spec = self._draw(rng, seed, category, n_faces)
            if max_pairwise_iou(spec) <= MAX_IOU:
                return spec
        raise SceneLayoutError(f"Could not place {n_faces} faces without overlap (seed {seed})")

    def _draw(self, rng: np.random.Generator, seed: int, category: str, n_faces: int) -> SceneSpec:
        height, width = self.canvas
        kinds = self._fake_kinds(rng, category, n_faces)
        gaze_outlier = any(AnomalyKind.GAZE_OUTLIER in k for k in kinds.values())
        gaze_mode = GazeMode.CAMERA if gaze_outlier or rng.random() < 0.75 else GazeMode.ELSEWHERE
        shared_gaze = float(rng.uniform(0, 360))

        slot = width / n_faces
        base_hue = float(rng.uniform(*REAL_HUE_RANGE))
        base_light = float(rng.uniform(0.9, 1.1))
        faces = []
        for i in range(n_faces):
            face_w = float(rng.uniform(0.8, 1.0) * min(0.55 * slot, 54.0))
            x = i * slot + (slot - face_w) / 2.0 + float(rng.uniform(-0.12, 0.12)) * slot
            y = float(rng.uniform(0.05, 0.25)) * height
            age = AgeClass(rng.choice([a.value for a in AgeClass]))
            gender = GenderClass(rng.choice([g.value for g in GenderClass]))
            anomalies = kinds.get(i, frozenset())
            strength = float(rng.uniform(0.8, 1.2))

            hue = float(np.clip(base_hue + rng.normal(0, 0.008), *REAL_HUE_RANGE))
            light = base_light + float(rng.uniform(-0.03, 0.03))
            resolution = 1.0
            if AnomalyKind.APPEARANCE_MISMATCH in anomalies:
                hue = (hue + float(rng.uniform(0.25, 0.45)) * strength) % 1.0
                light *= float(rng.choice([0.65, 1.35]))
                resolution = 0.3

            gaze_offset = None
            if gaze_mode is GazeMode.ELSEWHERE:
                gaze_offset = (shared_gaze + float(rng.uniform(-25, 25))) % 360
            if AnomalyKind.GAZE_OUTLIER in anomalies:
                gaze_offset = float(rng.uniform(0, 360))

            face_age, face_gender = None, None
            if AnomalyKind.BODY_FACE_MISMATCH in anomalies:
                change = rng.choice(["age", "gender", "both"])
                if change in ("age", "both"):
                    face_age = AgeClass(rng.choice([a.value for a in AgeClass if a is not age]))
                if change in ("gender", "both"):
                    face_gender = next(g for g in GenderClass if g is not gender)

            faces.append(
                FaceSpec(
                    age=age,
                    gender=gender,
                    x=x,
                    y=y,
                    width=face_w,
                    hue=hue,
                    illumination=light,
                    resolution=resolution,
                    gaze_offset=gaze_offset,
                    sway_phase=float(rng.uniform(0, 2 * math.pi)),
                    sway_amplitude=float(rng.uniform(1.0, 3.0)),
                    fake=bool(anomalies),
                    anomalies=anomalies,
                    anomaly_strength=strength,
                    face_age=face_age,
                    face_gender=face_gender,
                )
            )
        return SceneSpec(
            seed=seed,
            faces=tuple(faces),
            n_frames=self.n_frames,
            canvas=self.canvas,
            gaze_mode=gaze_mode,
            pan_speed=float(rng.uniform(-1.5, 1.5)),
            background_hue=float(rng.uniform(0, 1)),
        )

    @staticmethod
    def _fake_kinds(rng: np.random.Generator, category: str, n_faces: int) -> Dict[int, frozenset]:
        if category == "real":
            return {}
        all_kinds = list(AnomalyKind)
        n_fake = 2 if n_faces >= 6 and rng.random() < 0.3 else 1
        fake_idx = sorted(rng.choice(n_faces, size=n_fake, replace=False).tolist())
        kinds = {}
        for idx in fake_idx:
            if category == "mixed":
                pool = [k for k in all_kinds if gaze_outlier_allowed(n_faces, n_fake) or k is not AnomalyKind.GAZE_OUTLIER]
                picks = rng.choice(len(pool), size=2, replace=False)
                kinds[idx] = frozenset(pool[int(p)] for p in picks)
            else:
                kind = AnomalyKind(category)
                if kind is AnomalyKind.GAZE_OUTLIER and not gaze_outlier_allowed(n_faces, n_fake):
                    raise ValueError(f"gaze_outlier cannot be flagged with {n_faces} faces and {n_fake} fakes")
                kinds[idx] = frozenset([kind])
        return kinds


def gaze_outlier_allowed(n_faces: int, n_outliers: int) -> bool:
    """Whether the consensus rule would flag `n_outliers` off-camera faces."""
    return n_faces == 2 or (n_faces - n_outliers) - n_outliers > 1


def face_trajectory(spec: SceneSpec, index: int) -> List[FaceBox]:
    """Head box of one face in every frame."""
    face = spec.faces[index]
    height, width = spec.canvas
    jitter_rng = np.random.default_rng([spec.seed, index, 7])
    boxes = []
    for t in range(spec.n_frames):
        dx = spec.pan_speed * t + face.sway_amplitude * math.sin(0.6 * t + face.sway_phase)
        dy = 0.5 * face.sway_amplitude * math.cos(0.45 * t + face.sway_phase)
        if AnomalyKind.MOTION_JITTER in face.anomalies:
            dx += (-1) ** t * float(jitter_rng.uniform(3.0, 6.0)) * face.anomaly_strength
            dy += float(jitter_rng.normal(0.0, 2.0)) * face.anomaly_strength
        x = min(max(face.x + dx, 0.0), width - face.width)
        y = min(max(face.y + dy, 0.0), height - face.height)
        boxes.append(FaceBox(round(x, 3), round(y, 3), round(face.width, 3), round(face.height, 3)))
    return boxes


def max_pairwise_iou(spec: SceneSpec) -> float:
    tracks = [face_trajectory(spec, i) for i in range(spec.n_faces)]
    worst = 0.0
    for t in range(spec.n_frames):
        for a in range(spec.n_faces):
            for b in range(a + 1, spec.n_faces):
                worst = max(worst, tracks[a][t].iou(tracks[b][t]))
    return worst


def _rgb(h: float, s: float, v: float) -> Tuple[int, int, int]:
    r, g, b = colorsys.hsv_to_rgb(h % 1.0, min(max(s, 0.0), 1.0), min(max(v, 0.0), 1.0))
    return (int(r * 255), int(g * 255), int(b * 255))


def _background(spec: SceneSpec, margin: int) -> np.ndarray:
    height, width = spec.canvas
    rng = np.random.default_rng([spec.seed, 1])
    yy, xx = np.mgrid[0:height, 0 : width + 2 * margin].astype(np.float32)
    base = np.array(_rgb(spec.background_hue, 0.25, 0.75), dtype=np.float32) / 255.0
    pattern = 0.08 * np.sin(2 * np.pi * xx / rng.uniform(30, 60)) * np.cos(2 * np.pi * yy / rng.uniform(40, 80))
    gradient = 0.1 * (yy / height - 0.5)
    image = np.clip(base[None, None, :] + (pattern + gradient)[..., None], 0.0, 1.0)
    canvas = Image.fromarray((image * 255).astype(np.uint8))
    draw = ImageDraw.Draw(canvas)
    for _ in range(6):
        x0 = float(rng.uniform(0, width + 2 * margin))
        y0 = float(rng.uniform(0, height))
        w, h = float(rng.uniform(20, 80)), float(rng.uniform(20, 60))
        draw.rectangle([x0, y0, x0 + w, y0 + h], fill=_rgb(float(rng.uniform(0, 1)), 0.3, 0.6))
    return np.asarray(canvas)


def _draw_body(draw: ImageDraw.ImageDraw, box: FaceBox, face: FaceSpec, color_pick: int) -> None:
    tw, th = BODY_SHAPE[face.age]
    cx = box.center[0]
    top = box.y2 - 0.05 * box.h
    torso_w, torso_h = tw * box.w, th * box.h
    color = BODY_COLORS[face.age][color_pick % len(BODY_COLORS[face.age])]
    neck = 0.25 * box.w
    draw.rectangle([cx - neck / 2, box.y2 - 0.1 * box.h, cx + neck / 2, top + 0.15 * box.h], fill=_rgb(face.hue, 0.45, 0.8))
    if face.gender is GenderClass.MALE:
        # broad shoulders, straight torso
        draw.polygon(
            [
                (cx - torso_w / 2, top + 0.1 * box.h),
                (cx + torso_w / 2, top + 0.1 * box.h),
                (cx + 0.38 * torso_w, top + torso_h),
                (cx - 0.38 * torso_w, top + torso_h),
            ],
            fill=color,
        )
        draw.line([(cx, top + 0.1 * box.h), (cx, top + 0.5 * torso_h)], fill=(20, 20, 20), width=2)
    else:
        # narrow shoulders widening into a dress
        draw.polygon(
            [
                (cx - 0.3 * torso_w, top + 0.1 * box.h),
                (cx + 0.3 * torso_w, top + 0.1 * box.h),
                (cx + 0.65 * torso_w, top + torso_h),
                (cx - 0.65 * torso_w, top + torso_h),
            ],
            fill=color,
        )
        draw.ellipse([cx - 0.12 * torso_w, top + 0.3 * torso_h, cx + 0.12 * torso_w, top + 0.4 * torso_h], fill=(250, 250, 250))
    if face.age is AgeClass.SENIOR:
        x = cx + 0.6 * torso_w
        draw.line([(x, top + 0.3 * torso_h), (x, top + 1.1 * torso_h)], fill=(60, 40, 20), width=3)


def _draw_head(draw: ImageDraw.ImageDraw, box: FaceBox, face: FaceSpec, hair_pick: int) -> None:
    x, y, w, h = box.x, box.y, box.w, box.h
    age, gender = face.rendered_age, face.rendered_gender
    hair = HAIR_COLORS[age][hair_pick % 2]
    skin = _rgb(face.hue, 0.45, 0.85 * face.illumination)

    if gender is GenderClass.FEMALE:
        draw.ellipse([x - 0.12 * w, y - 0.05 * h, x + 1.12 * w, y + 1.15 * h], fill=hair)
    draw.ellipse([x, y, x + w, y + h], fill=skin)
    # hair cap
    cap = 0.22 if gender is GenderClass.FEMALE else 0.16
    draw.chord([x, y, x + w, y + 2 * cap * h], start=180, end=360, fill=hair)

    eye_rx = (0.14 if age is AgeClass.CHILD else 0.1) * w
    eye_ry = (0.1 if age is AgeClass.CHILD else 0.075) * h
    eye_y = y + 0.27 * h
    for ex in (x + 0.32 * w, x + 0.68 * w):
        draw.ellipse([ex - eye_rx, eye_y - eye_ry, ex + eye_rx, eye_y + eye_ry], fill=(250, 250, 250))
        px, py = ex, eye_y
        if face.gaze_offset is not None:
            angle = math.radians(face.gaze_offset)
            px += 0.55 * eye_rx * math.cos(angle)
            py += 0.55 * eye_ry * math.sin(angle)
        r = 0.5 * eye_ry
        draw.ellipse([px - r, py - r, px + r, py + r], fill=(15, 15, 30))
        if gender is GenderClass.MALE:
            draw.line([(ex - eye_rx, eye_y - 1.8 * eye_ry), (ex + eye_rx, eye_y - 1.8 * eye_ry)], fill=hair if age is not AgeClass.SENIOR else (120, 120, 120), width=2)
        else:
            # lashes
            draw.line([(ex + eye_rx, eye_y - 0.5 * eye_ry), (ex + 1.4 * eye_rx, eye_y - 1.2 * eye_ry)], fill=(20, 20, 20), width=1)

    if age is AgeClass.SENIOR:
        for k in (0.62, 0.68):
            draw.arc([x + 0.25 * w, y + (k - 0.08) * h, x + 0.75 * w, y + (k + 0.02) * h], start=200, end=340, fill=(110, 80, 70), width=1)
    mouth_w = 0.18 if age is AgeClass.CHILD else 0.25
    mouth_color = (200, 60, 80) if gender is GenderClass.FEMALE else (120, 50, 50)
    draw.line([(x + (0.5 - mouth_w) * w, y + 0.78 * h), (x + (0.5 + mouth_w) * w, y + 0.78 * h)], fill=mouth_color, width=2)
    if gender is GenderClass.MALE and age is not AgeClass.CHILD:
        beard = (90, 70, 60) if age is AgeClass.MIDDLE else (200, 200, 200)
        draw.chord([x + 0.15 * w, y + 0.6 * h, x + 0.85 * w, y + 1.0 * h], start=0, end=180, fill=beard)


def _degrade(pixels: np.ndarray, box: FaceBox, factor: float) -> None:
    """Downsample-upsample the face box in place."""
    x1, y1 = int(math.floor(box.x)), int(math.floor(box.y))
    x2, y2 = int(math.ceil(box.x2)), int(math.ceil(box.y2))
    region = Image.fromarray(pixels[y1:y2, x1:x2])
    small = region.resize((max(2, int((x2 - x1) * factor)), max(2, int((y2 - y1) * factor))), Image.BILINEAR)
    pixels[y1:y2, x1:x2] = np.asarray(small.resize((x2 - x1, y2 - y1), Image.NEAREST))


def render_frames(spec: SceneSpec) -> Tuple[List[np.ndarray], List[List[FaceBox]]]:
    """Render every frame (uint8) and return the per-frame head boxes."""
    height, width = spec.canvas
    margin = int(abs(spec.pan_speed) * spec.n_frames) + 2
    background = _background(spec, margin)
    tracks = [face_trajectory(spec, i) for i in range(spec.n_faces)]
    picks = np.random.default_rng([spec.seed, 2]).integers(0, 6, size=(spec.n_faces, 2))
    order = sorted(range(spec.n_faces), key=lambda i: spec.faces[i].y)

    frames, boxes = [], []
    for t in range(spec.n_frames):
        offset = margin + int(round(spec.pan_speed * t))
        canvas = Image.fromarray(np.ascontiguousarray(background[:, offset : offset + width]))
        draw = ImageDraw.Draw(canvas)
        for i in order:
            _draw_body(draw, tracks[i][t], spec.faces[i], int(picks[i, 0]))
        for i in order:
            _draw_head(draw, tracks[i][t], spec.faces[i], int(picks[i, 1]))
        pixels = np.array(canvas)
        for i, face in enumerate(spec.faces):
            if face.resolution < 1.0:
                _degrade(pixels, tracks[i][t], face.resolution)
        frames.append(pixels)
        boxes.append([tracks[i][t] for i in range(spec.n_faces)])
    return frames, boxes


def expected_verdicts(spec: SceneSpec) -> Dict[str, List[Optional[int]]]:
    """Gaze and face-body rules applied to generator truth."""
    locked = [f.gaze_locked for f in spec.faces]
    return {
        "M3": gaze_rule(locked),
        "M4": [
            attributes_mismatch((f.rendered_age, f.rendered_gender), (f.age, f.gender)) for f in spec.faces
        ],
    }


def truth_record(spec: SceneSpec) -> dict:
    """Sidecar truth: the scene description plus per-face oracle verdicts."""
    expected = expected_verdicts(spec)
    return {
        "spec": spec.to_dict(),
        "faces": [
            {
                "face_id": face_id(i),
                "fake": face.fake,
                "anomalies": sorted(a.value for a in face.anomalies),
                "expected_M3": expected["M3"][i],
                "expected_M4": expected["M4"][i],
            }
            for i, face in enumerate(spec.faces)
        ],
    }


def face_id(index: int) -> str:
    return f"f{index}"


def generate_clip(spec: SceneSpec, clip_id: str = "clip") -> Tuple[ClipSample, dict]:
    """Render a clip in memory together with its truth record."""
    frames, boxes = render_frames(spec)
    samples = []
    for t, (pixels, frame_boxes) in enumerate(zip(frames, boxes)):
        faces = tuple(
            FaceSample(
                face_id=face_id(i),
                box=frame_boxes[i],
                label=int(face.fake),
                gaze_locked=face.gaze_locked,
                age=face.age,
                gender=face.gender,
                face_age=face.face_age,
                face_gender=face.face_gender,
            )
            for i, face in enumerate(spec.faces)
        )
        samples.append(FrameSample(frame_id=f"{t:03d}", faces=faces, image=pixels.astype(np.float32) / 255.0))
    return ClipSample(clip_id=clip_id, frames=tuple(samples), fps=spec.fps), truth_record(spec)
