"""Seeded synthetic descriptor benchmark.

Each place i gets a latent unit direction p_i. A condition's descriptor for
place i is

    normalize(p_i + sigma * z_ik + beta * b_k)

where z_ik is noise drawn fresh per (place, condition) and b_k is one shared
bias direction per condition, modeling a condition-wide appearance shift that
bundling should average out. Noise and bias vectors are Gaussian with entry
variance 1/dim, i.e. expected unit norm, so sigma and beta read directly as
noise-to-signal ratios against the unit latent.

Generation is fully determined by the seed. One pinned stream (see hops.rng)
is consumed in a fixed documented order: first the latent matrix (places x
dim, row-major), then per condition, in output order, its bias vector
followed by its noise matrix. The returned list holds the K reference sets
("ref01", "ref02", ...) followed by the query set ("query").
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .rng import PinnedStream
from .store import DescriptorSet

DEFAULT_DIM = 4096
DEFAULT_PLACES = 200
DEFAULT_CONDITIONS = 5  # 4 reference sets + 1 query set
DEFAULT_SIGMA = 0.9
DEFAULT_BETA = 0.3

QUERY_CONDITION = "query"


@dataclass(frozen=True)
class SynthSpec:
    """Shape and noise parameters of one synthetic benchmark instance."""

    dim: int = DEFAULT_DIM
    places: int = DEFAULT_PLACES
    conditions: int = DEFAULT_CONDITIONS  # reference sets + 1 query set
    latent_noise_sigma: float = DEFAULT_SIGMA
    structured_bias: float = DEFAULT_BETA
    seed: int = 0

    def __post_init__(self):
        if self.dim < 2:
            raise ValidationError("dim must be >= 2")
        if self.places < 2:
            raise ValidationError("places must be >= 2")
        if self.conditions < 2:
            raise ValidationError("conditions must be >= 2 (refs + query)")
        if self.latent_noise_sigma < 0 or self.structured_bias < 0:
            raise ValidationError("noise scales must be >= 0")
        if not (0 <= int(self.seed) < 2**64):
            raise ValidationError("seed must fit in 64 unsigned bits")

    @property
    def reference_count(self) -> int:
        return self.conditions - 1


def _unit(rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=-1, keepdims=True)
    return rows / np.where(norms == 0.0, 1.0, norms)


def generate(spec: SynthSpec, dataset_id: str = "synth") -> list[DescriptorSet]:
    """All condition sets for `spec`: reference sets first, query set last."""
    stream = PinnedStream(spec.seed)
    scale = spec.dim**-0.5
    latents = _unit(stream.normal_matrix(spec.places, spec.dim))
    frame_ids = tuple(str(i) for i in range(spec.places))
    names = [
        f"ref{k:02d}" for k in range(1, spec.reference_count + 1)
    ] + [QUERY_CONDITION]
    sets = []
    for name in names:
        bias = stream.normal(spec.dim) * scale
        noise = stream.normal_matrix(spec.places, spec.dim) * scale
        rows = _unit(
            latents
            + spec.latent_noise_sigma * noise
            + spec.structured_bias * bias
        )
        sets.append(
            DescriptorSet(dataset_id, name, rows.astype(np.float32), frame_ids)
        )
    return sets
