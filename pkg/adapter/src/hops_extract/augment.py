"""Image augmentations, all on 8-bit RGB arrays of shape (H, W, 3).

Each function returns a new uint8 array and leaves its input untouched.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .errors import ValidationError

KINDS = ("none", "poisson_noise", "downsample_upsample", "darken")


def _check_rgb(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image)
    if image.dtype != np.uint8:
        raise ValidationError(f"expected uint8 pixels, got {image.dtype}")
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValidationError(
            f"expected an (H, W, 3) RGB array, got shape {image.shape}"
        )
    return image


def poisson_noise(image: np.ndarray, seed: int) -> np.ndarray:
    """Replace each channel value v with a Poisson(v) draw, clipped to 255.

    The pixel value itself is the expected count, so dark pixels stay nearly
    clean while bright ones gain shot noise proportional to sqrt(v).
    """
    image = _check_rgb(image)
    rng = np.random.default_rng(seed)
    noisy = rng.poisson(image.astype(np.float64))
    return np.clip(noisy, 0, 255).astype(np.uint8)


def downsample_upsample(image: np.ndarray, factor: int) -> np.ndarray:
    """Shrink by 1/factor and blow back up, both bilinear."""
    image = _check_rgb(image)
    factor = int(factor)
    if factor < 1:
        raise ValidationError("factor must be a positive integer")
    height, width = image.shape[:2]
    small = (max(1, width // factor), max(1, height // factor))
    pil = Image.fromarray(image)
    resized = pil.resize(small, Image.BILINEAR).resize(
        (width, height), Image.BILINEAR
    )
    return np.asarray(resized)


def darken(image: np.ndarray, gamma: float) -> np.ndarray:
    """Apply v -> v**gamma on [0, 1]-scaled intensities.

    gamma > 1 darkens (the intended use); gamma = 1 is the identity. The
    curve is a stand-in for learned low-light rendering, so it lives under
    its own name and is never passed off as such.
    """
    image = _check_rgb(image)
    gamma = float(gamma)
    if not gamma > 0:
        raise ValidationError("gamma must be positive")
    scaled = (image.astype(np.float64) / 255.0) ** gamma
    return np.clip(np.rint(scaled * 255.0), 0, 255).astype(np.uint8)


def apply(image: np.ndarray, kind: str, params: dict, seed: int) -> np.ndarray:
    """Dispatch one augmentation by name. "none" returns the input as-is."""
    if kind == "none":
        return _check_rgb(image)
    if kind == "poisson_noise":
        return poisson_noise(image, seed)
    if kind == "downsample_upsample":
        if "factor" not in params:
            raise ValidationError("downsample_upsample needs a factor")
        return downsample_upsample(image, params["factor"])
    if kind == "darken":
        if "gamma" not in params:
            raise ValidationError("darken needs a gamma")
        return darken(image, params["gamma"])
    raise ValidationError(
        f"unknown augmentation {kind!r} (expected one of {', '.join(KINDS)})"
    )
