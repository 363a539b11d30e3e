"""Synthesized photo sets for adapter tests."""

from __future__ import annotations

import numpy as np
from PIL import Image


def scene(seed: int, size: int = 128) -> np.ndarray:
    """A distinct smooth RGB scene: low-res noise blown up bilinear, plus
    one rectangle so gradients are not uniform."""
    rng = np.random.default_rng(seed)
    coarse = rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8)
    img = Image.fromarray(coarse).resize((size, size), Image.BILINEAR)
    out = np.asarray(img).copy()
    side = max(2, size // 8)
    x0, y0 = rng.integers(0, size - side, size=2)
    w, h = rng.integers(side, 2 * side, size=2)
    out[y0 : y0 + h, x0 : x0 + w] = rng.integers(0, 256, size=3)
    return out


def similar_scene(seed: int, base_seed: int = 999, mix: float = 0.15,
                  size: int = 128) -> np.ndarray:
    """A scene that shares most of its layout with every sibling: a common
    base pattern blended with a small per-scene one. Descriptors crowd
    together, so degraded queries actually get confused."""
    base = np.random.default_rng(base_seed).integers(0, 256, size=(8, 8, 3))
    own = np.random.default_rng(seed).integers(0, 256, size=(8, 8, 3))
    coarse = np.clip(
        (1.0 - mix) * base + mix * own, 0, 255
    ).astype(np.uint8)
    img = Image.fromarray(coarse).resize((size, size), Image.BILINEAR)
    return np.asarray(img).copy()


def write_scenes(directory, count: int, seed0: int = 100, crowded: bool = False):
    """Save `count` scenes as PNGs and return the frames-file path."""
    directory.mkdir(parents=True, exist_ok=True)
    names = []
    for i in range(count):
        name = f"frame{i:03d}.png"
        image = similar_scene(seed0 + i) if crowded else scene(seed0 + i)
        Image.fromarray(image).save(directory / name)
        names.append(name)
    frames_file = directory / "frames.txt"
    frames_file.write_text("\n".join(names) + "\n")
    return frames_file, names
