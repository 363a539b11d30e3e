"""Descriptor extractors.

One extractor ships ready to run: "grid512", a fixed hand-rolled descriptor
that needs no downloads. The well-known pretrained VPR models are registered
by name so jobs naming them fail with a clear message instead of a typo
error; plugging real weights in is a one-call registration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from PIL import Image

from .errors import JobError

GRID = 16
WORK_SIZE = 256  # images are resized to WORK_SIZE x WORK_SIZE first


def grid512(image: np.ndarray) -> np.ndarray:
    """512-D descriptor: 16x16 luminance block means stacked with 16x16
    gradient-magnitude block means, L2-normalized.

    Crude next to a learned model, but deterministic, dependency-free, and
    discriminative enough to exercise the retrieval engine on real images.
    """
    pil = Image.fromarray(image).convert("L").resize(
        (WORK_SIZE, WORK_SIZE), Image.BILINEAR
    )
    gray = np.asarray(pil, dtype=np.float64) / 255.0

    gx = np.zeros_like(gray)
    gy = np.zeros_like(gray)
    gx[:, 1:-1] = (gray[:, 2:] - gray[:, :-2]) * 0.5
    gy[1:-1, :] = (gray[2:, :] - gray[:-2, :]) * 0.5
    magnitude = np.hypot(gx, gy)

    block = WORK_SIZE // GRID
    shaped = (GRID, block, GRID, block)
    luminance = gray.reshape(shaped).mean(axis=(1, 3))
    edges = magnitude.reshape(shaped).mean(axis=(1, 3))

    vector = np.concatenate([luminance.ravel(), edges.ravel()])
    norm = np.linalg.norm(vector)
    if norm > 0:
        vector = vector / norm
    return vector.astype(np.float32)


@dataclass(frozen=True)
class Extractor:
    name: str
    dim: int
    fn: Callable[[np.ndarray], np.ndarray] | None  # None: weights not bundled


_REGISTRY: dict[str, Extractor] = {}


def register_extractor(
    name: str, dim: int, fn: Callable[[np.ndarray], np.ndarray] | None
) -> None:
    _REGISTRY[name] = Extractor(name, dim, fn)


def available() -> list[str]:
    return sorted(name for name, e in _REGISTRY.items() if e.fn is not None)


def resolve(name: str) -> Extractor:
    if name not in _REGISTRY:
        raise JobError(
            f"unknown model {name!r}; runnable here: {', '.join(available())}"
        )
    extractor = _REGISTRY[name]
    if extractor.fn is None:
        raise JobError(
            f"model {name!r} is registered but its weights are not bundled; "
            f"call register_extractor({name!r}, dim, fn) with a real loader, "
            f"or use one of: {', '.join(available())}"
        )
    return extractor


register_extractor("grid512", 512, grid512)
# Pretrained networks people will reach for: named so the failure is
# explicit about weights rather than pretending the model does not exist.
for _name, _dim in (
    ("netvlad", 32768),
    ("cosplace", 2048),
    ("mixvpr", 4096),
    ("eigenplaces", 2048),
    ("cricavpr", 10752),
):
    register_extractor(_name, _dim, None)
