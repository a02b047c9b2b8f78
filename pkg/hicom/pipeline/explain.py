"""Per-face explanations: a fixed offline template, optionally sent to an LLM endpoint."""

import asyncio
import json
import logging
from pathlib import Path
from typing import List, Optional, Sequence
from urllib.parse import urlparse

import httpx

from hicom.config import FusionConfig
from hicom.core.fusion import ablation_stack
from hicom.errors import EndpointConfigError
from hicom.models import ExplanationRecord, ModuleName
from hicom.pipeline.evaluation import FaceDetection, read_detections

logger = logging.getLogger(__name__)

MODULE_ORDER = list(ModuleName)


def _evidence(detection: FaceDetection, module: ModuleName) -> str:
    verdict = detection.verdicts[module]
    if verdict.score is not None:
        return f"score {verdict.score:.2f}"
    return "rule flag"


def template_text(detection: FaceDetection, label: int, attribution: Sequence[ModuleName]) -> str:
    """Deterministic explanation naming each attributed module exactly once."""
    where = f"Face {detection.face_id} in frame {detection.frame_id} of clip {detection.clip_id}"
    if not label:
        return f"{where} looks real: no cue detector found an anomaly."
    cues = [f"{m.value} found {m.cue} ({_evidence(detection, m)})" for m in sorted(attribution, key=MODULE_ORDER.index)]
    if not cues:
        return f"{where} looks fake by combined evidence, though no single cue detector flagged it."
    return f"{where} looks fake: " + "; ".join(cues) + "."


def explain_detection(detection: FaceDetection, fusion: FusionConfig) -> ExplanationRecord:
    result = ablation_stack(detection.verdicts, detection.verdicts.keys(), fusion)
    return ExplanationRecord(
        clip_id=detection.clip_id,
        frame_id=detection.frame_id,
        face_id=detection.face_id,
        label=result.label,
        attribution=result.attribution_names,
        scores={m.value: v.score for m, v in detection.verdicts.items()},
        flags={m.value: v.flag for m, v in detection.verdicts.items()},
        text=template_text(detection, result.label, result.attribution),
    )


def explain_offline(detections: Sequence[FaceDetection], fusion: FusionConfig) -> List[ExplanationRecord]:
    return [explain_detection(d, fusion) for d in detections]


def validate_endpoint(url: Optional[str]) -> str:
    """Reject anything that is not an absolute http(s) URL."""
    parsed = urlparse(url or "")
    if parsed.scheme not in ("http", "https") or not parsed.netloc:
        raise EndpointConfigError(f"LLM endpoint must be an http(s) URL, got {url!r}")
    return url


def llm_prompt(record: ExplanationRecord) -> dict:
    """Request body: the template as prompt plus the structured module outputs."""
    return {
        "prompt": (
            "Explain to a non-expert why this face was judged "
            f"{'fake' if record.label else 'real'}, using only the detector outputs given. "
            f"Draft: {record.text}"
        ),
        "face": {
            "clip_id": record.clip_id,
            "frame_id": record.frame_id,
            "face_id": record.face_id,
            "label": record.label,
            "attribution": record.attribution,
            "scores": record.scores,
            "flags": record.flags,
        },
    }


async def explain_with_llm(
    records: List[ExplanationRecord],
    endpoint: str,
    transport: Optional[httpx.AsyncBaseTransport] = None,
    timeout: float = 30.0,
) -> List[ExplanationRecord]:
    """Ask the endpoint about every flagged face; failures keep the template and mark the record degraded."""
    endpoint = validate_endpoint(endpoint)
    errors = []
    async with httpx.AsyncClient(transport=transport, timeout=timeout) as client:
        for record in records:
            if not record.label:
                continue
            try:
                response = await client.post(endpoint, json=llm_prompt(record))
                response.raise_for_status()
                record.llm_response = response.text
                record.source = "llm"
            except httpx.HTTPError as e:
                record.degraded = True
                errors.append(f"{record.clip_id}/{record.frame_id}/{record.face_id}: {e}")

    for error in errors:
        logger.warning("LLM explanation failed, kept template: %s", error)
    return records


def write_explanations(path: Path, records: Sequence[ExplanationRecord]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        for record in records:
            f.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")


def read_explanations(path: Path) -> List[ExplanationRecord]:
    with open(path, "r") as f:
        return [ExplanationRecord.from_dict(json.loads(line)) for line in f if line.strip()]


def explain_run(run_dir: Path, fusion: FusionConfig, endpoint: Optional[str] = None) -> Path:
    """Explain every face of a finished evaluation; LLM mode when `endpoint` is set."""
    if endpoint is not None:
        validate_endpoint(endpoint)
    records = explain_offline(read_detections(Path(run_dir) / "detections.jsonl"), fusion)
    if endpoint is not None:
        records = asyncio.run(explain_with_llm(records, endpoint))
    path = Path(run_dir) / "explanations.jsonl"
    write_explanations(path, records)
    logger.info("Wrote %d explanations to %s", len(records), path)
    return path
