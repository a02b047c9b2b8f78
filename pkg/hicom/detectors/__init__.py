"""The four cue detectors (M1-M4)."""

from .scene_motion import SceneMotionNet, loss_sp, infer_scene_motion, pool_region
from .inter_face import InterFaceEncoder, FacePair, contrastive_term, loss_app, sample_pairs, embed_faces
from .gaze import GazeNet, GazeCounts, classify_gaze, gaze_rule
from .body_face import AttributeNet, AttributePrediction, block_face_in_body, mismatch_rule, predict_attributes

__all__ = [
    "SceneMotionNet", "loss_sp", "infer_scene_motion", "pool_region",
    "InterFaceEncoder", "FacePair", "contrastive_term", "loss_app", "sample_pairs", "embed_faces",
    "GazeNet", "GazeCounts", "classify_gaze", "gaze_rule",
    "AttributeNet", "AttributePrediction", "block_face_in_body", "mismatch_rule", "predict_attributes",
]
