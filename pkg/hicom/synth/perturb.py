"""Whole-frame robustness perturbations.

Every transform takes an H x W x 3 float image in [0, 1] and returns a new
one; labels and boxes are never touched. Severity 0 is the identity, 1-5 grow
in strength. All randomness comes from (seed, kind, severity).
"""

from typing import Callable, Dict, List, Sequence, Tuple, Union

import numpy as np
from matplotlib.colors import hsv_to_rgb, rgb_to_hsv
from PIL import Image, ImageDraw
from scipy.ndimage import convolve, gaussian_filter, uniform_filter

from hicom.models import PerturbationKind

MAX_SEVERITY = 5
MID_SEVERITY = 3

EMBOSS = np.array([[-2.0, -1.0, 0.0], [-1.0, 1.0, 1.0], [0.0, 1.0, 2.0]])
IDENTITY = np.array([[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]])


def _color(image: np.ndarray, severity: int, rng: np.random.Generator) -> np.ndarray:
    hsv = rgb_to_hsv(image)
    direction = rng.choice([-1.0, 1.0])
    hsv[..., 0] = (hsv[..., 0] + direction * 0.04 * severity) % 1.0
    hsv[..., 1] = np.clip(hsv[..., 1] * (1.0 + 0.15 * severity * rng.choice([-1.0, 1.0])), 0.0, 1.0)
    return hsv_to_rgb(hsv)


def _edge(image: np.ndarray, severity: int, rng: np.random.Generator) -> np.ndarray:
    # unsharp mask
    blurred = gaussian_filter(image, sigma=(1.5, 1.5, 0), truncate=3.0)
    return image + 0.4 * severity * (image - blurred)


def shuffle_rectangle(image: np.ndarray, severity: int, rng: np.random.Generator) -> Tuple[np.ndarray, Tuple[int, int, int, int]]:
    """Permute the k x k blocks of a random rectangle; returns (image, (y, x, h, w))."""
    height, width = image.shape[:2]
    k = 2 + 2 * severity
    frac = 0.1 + 0.08 * severity
    bh = max(1, int(height * frac) // k)
    bw = max(1, int(width * frac) // k)
    rh, rw = min(bh * k, height // k * k), min(bw * k, width // k * k)
    bh, bw = rh // k, rw // k
    y = int(rng.integers(0, height - rh + 1))
    x = int(rng.integers(0, width - rw + 1))
    out = image.copy()
    blocks = image[y : y + rh, x : x + rw].reshape(bh, k, bw, k, -1).transpose(0, 2, 1, 3, 4).reshape(bh * bw, k, k, -1)
    blocks = blocks[rng.permutation(bh * bw)]
    out[y : y + rh, x : x + rw] = blocks.reshape(bh, bw, k, k, -1).transpose(0, 2, 1, 3, 4).reshape(rh, rw, -1)
    return out, (y, x, rh, rw)


def _blockwise(image: np.ndarray, severity: int, rng: np.random.Generator) -> np.ndarray:
    return shuffle_rectangle(image, severity, rng)[0]


def _corruption(image: np.ndarray, severity: int, rng: np.random.Generator) -> np.ndarray:
    noisy = np.clip(image + rng.normal(0.0, 0.02 * severity, size=image.shape), 0.0, 1.0)
    levels = max(4, 64 // 2 ** (severity - 1))
    return np.round(noisy * (levels - 1)) / (levels - 1)


def _convolution(image: np.ndarray, severity: int, rng: np.random.Generator) -> np.ndarray:
    alpha = 0.15 * severity
    kernel = (1.0 - alpha) * IDENTITY + alpha * EMBOSS
    blurred = uniform_filter(image, size=(2 * ((severity + 1) // 2) + 1, 2 * ((severity + 1) // 2) + 1, 1), mode="reflect")
    return np.stack([convolve(blurred[..., c], kernel, mode="reflect") for c in range(image.shape[2])], axis=-1)


def _external(image: np.ndarray, severity: int, rng: np.random.Generator) -> np.ndarray:
    height, width = image.shape[:2]
    canvas = Image.fromarray((np.clip(image, 0.0, 1.0) * 255).astype(np.uint8))
    draw = ImageDraw.Draw(canvas)
    for _ in range(2 * severity):
        w = float(rng.uniform(0.05, 0.12)) * width
        h = float(rng.uniform(0.05, 0.12)) * height
        x, y = float(rng.uniform(0, width - w)), float(rng.uniform(0, height - h))
        color = tuple(int(c) for c in rng.integers(0, 256, size=3))
        if rng.random() < 0.5:
            draw.ellipse([x, y, x + w, y + h], fill=color)
        else:
            draw.rectangle([x, y, x + w, y + h], fill=color)
    return np.asarray(canvas, dtype=np.float32) / 255.0


TRANSFORMS: Dict[PerturbationKind, Callable[[np.ndarray, int, np.random.Generator], np.ndarray]] = {
    PerturbationKind.COLOR_MANIPULATION: _color,
    PerturbationKind.EDGE_MANIPULATION: _edge,
    PerturbationKind.BLOCKWISE_DISTORTION: _blockwise,
    PerturbationKind.IMAGE_CORRUPTION: _corruption,
    PerturbationKind.CONVOLUTION_MASK: _convolution,
    PerturbationKind.EXTERNAL_EFFECTS: _external,
}


def perturbation_rng(kind: PerturbationKind, severity: int, seed: int) -> np.random.Generator:
    return np.random.default_rng([seed, list(PerturbationKind).index(kind), severity])


def apply_perturbation(image: np.ndarray, kind: Union[PerturbationKind, str], severity: int, seed: int = 0) -> np.ndarray:
    """Perturb one frame image deterministically."""
    kind = PerturbationKind(kind)
    if not 0 <= severity <= MAX_SEVERITY:
        raise ValueError(f"severity must be in 0..{MAX_SEVERITY}, got {severity}")
    image = np.asarray(image, dtype=np.float32)
    if severity == 0:
        return image.copy()
    out = TRANSFORMS[kind](image, severity, perturbation_rng(kind, severity, seed))
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def parse_severities(value: str) -> List[int]:
    """'mid' -> [3], 'all' -> [1..5], '1,3,5' -> [1, 3, 5]."""
    value = (value or "mid").strip().lower()
    if value == "mid":
        return [MID_SEVERITY]
    if value == "all":
        return list(range(1, MAX_SEVERITY + 1))
    try:
        levels = sorted({int(v) for v in value.split(",") if v.strip()})
    except ValueError:
        raise ValueError(f"Unrecognized severity list: {value!r}") from None
    if not levels or any(not 0 <= v <= MAX_SEVERITY for v in levels):
        raise ValueError(f"severities must be in 0..{MAX_SEVERITY}, got {value!r}")
    return levels


def perturbation_grid(severities: Sequence[int]) -> List[Tuple[PerturbationKind, int]]:
    return [(kind, s) for kind in PerturbationKind for s in severities]
