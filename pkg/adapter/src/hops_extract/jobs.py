"""Extraction jobs: images in, a descriptor file plus metadata sidecar out.

The output is the retrieval engine's binary container, written through its
public API, so anything exported here loads there unchanged. Writes are
atomic: the file appears under its final name only when complete.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from hops import DescriptorSet, save_set

from . import augment
from .errors import JobError, ValidationError
from .extractors import resolve

ADAPTER_VERSION = "0.1.0"


@dataclass(frozen=True)
class ExtractionJob:
    """One export: which model, which images, what augmentation, where to."""

    model: str
    image_dir: str
    frames: tuple[str, ...]
    out_path: str
    augmentation: str = "none"
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if not self.frames:
            raise ValidationError("frame list must not be empty")
        if len(set(self.frames)) != len(self.frames):
            raise ValidationError("frame list contains duplicates")
        if self.augmentation not in augment.KINDS:
            raise ValidationError(
                f"unknown augmentation {self.augmentation!r}"
            )
        if self.augmentation == "downsample_upsample":
            factor = self.params.get("factor")
            if not isinstance(factor, int) or factor < 1:
                raise ValidationError("factor must be a positive integer")
        if self.augmentation == "darken":
            gamma = self.params.get("gamma")
            if gamma is None or not float(gamma) > 0:
                raise ValidationError("gamma must be positive")
        if not (0 <= int(self.seed) < 2**64):
            raise ValidationError("seed must fit in 64 unsigned bits")
        object.__setattr__(self, "frames", tuple(str(f) for f in self.frames))


def load_frames_file(path: str | Path) -> tuple[str, ...]:
    """One frame token per line; blanks and #-comments are skipped."""
    tokens = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            tokens.append(line)
    return tuple(tokens)


def _load_image(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"))
    except FileNotFoundError:
        raise JobError(f"image not found: {path}") from None
    except UnidentifiedImageError:
        raise JobError(f"cannot decode image: {path}") from None


def extract(job: ExtractionJob) -> Path:
    """Run the job and return the written descriptor file path.

    Rows follow the frame list order exactly. Augmentation happens before
    extraction. Per-image noise draws are seeded with (job seed, frame
    index), so the same job always writes the same bytes.
    """
    extractor = resolve(job.model)
    image_dir = Path(job.image_dir)
    rows = np.empty((len(job.frames), extractor.dim), dtype=np.float32)
    for index, frame in enumerate(job.frames):
        image = _load_image(image_dir / frame)
        if job.augmentation == "poisson_noise":
            image = augment.poisson_noise(image, _frame_seed(job.seed, index))
        else:
            image = augment.apply(image, job.augmentation, job.params, job.seed)
        vector = extractor.fn(image)
        if vector.shape != (extractor.dim,):
            raise JobError(
                f"extractor {job.model!r} returned shape {vector.shape}, "
                f"expected ({extractor.dim},)"
            )
        rows[index] = vector

    out_path = Path(job.out_path)
    if out_path.parent and not out_path.parent.exists():
        out_path.parent.mkdir(parents=True, exist_ok=True)
    dset = DescriptorSet(
        dataset_id="", condition_id="", data=rows, frame_ids=job.frames
    )
    temp = out_path.with_name(f"{out_path.name}.tmp-{os.getpid()}")
    save_set(dset, temp)
    os.replace(temp, out_path)
    _write_sidecar(job, extractor.dim, out_path)
    return out_path


def _frame_seed(seed: int, index: int) -> int:
    # stable per-frame stream: moving a frame changes only its own row
    return (int(seed) * 1_000_003 + index) % 2**63


def _write_sidecar(job: ExtractionJob, dim: int, out_path: Path) -> None:
    meta = {
        "model": job.model,
        "dim": dim,
        "frames": len(job.frames),
        "augmentation": job.augmentation,
        "params": dict(job.params),
        "seed": job.seed,
        "batch_protocol": "single image, frame list order",
        "adapter_version": ADAPTER_VERSION,
    }
    sidecar = out_path.with_name(out_path.name + ".meta.json")
    temp = sidecar.with_name(sidecar.name + f".tmp-{os.getpid()}")
    temp.write_text(json.dumps(meta, indent=2) + "\n")
    os.replace(temp, sidecar)
