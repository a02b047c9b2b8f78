"""hicom: multi-face deepfake detection from contextual human cues."""

__version__ = "0.1.0"
