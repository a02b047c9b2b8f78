"""Exception hierarchy for hicom."""


class HicomError(Exception):
    """Base class for every error hicom raises on purpose."""


class ConfigError(HicomError, ValueError):
    """Configuration file could not be parsed or holds invalid values."""


class UnusableFaceError(HicomError, ValueError):
    """A face box is too small or too degenerate to crop."""


class TrainingDivergedError(HicomError, RuntimeError):
    """Non-finite activations or loss during training or inference."""


class ManifestError(HicomError, ValueError):
    """A dataset manifest record is malformed or references a missing file."""


class CheckpointError(HicomError, RuntimeError):
    """A checkpoint is missing or does not match the requested module."""


class OutputExistsError(HicomError, FileExistsError):
    """Refusing to overwrite existing output without --force."""


class EndpointConfigError(HicomError, ValueError):
    """The LLM endpoint setting is not a usable http(s) URL."""


class SceneLayoutError(HicomError, RuntimeError):
    """Faces of a synthetic scene could not be placed within the overlap cap."""
