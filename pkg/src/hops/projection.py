"""Seeded Gaussian random projection to a lower dimension.

The projection matrix G has shape o x n with entries drawn independently from
N(0, 1/n). By the Johnson-Lindenstrauss lemma, x -> Gx approximately
preserves pairwise distances between unit vectors for o well below n, so
cosine ranking survives aggressive dimensionality reduction.

G is never persisted: it is regenerated on demand from (seed, n, o) using the
pinned generator in `hops.rng` (PCG64 word stream + Box-Muller, entries filled
row-major), so a recorded seed fully reproduces a run. Output rows are
renormalized after projection, keeping downstream cosine code unchanged; zero
rows stay zero.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError
from .fusion import FusedReferenceSet
from .rng import PinnedStream
from .store import DescriptorSet


@dataclass(frozen=True)
class ProjectionSpec:
    """Everything needed to regenerate one projection matrix."""

    input_dim: int
    output_dim: int
    seed: int
    allow_expand: bool = False

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValidationError("input_dim must be >= 1")
        if self.output_dim < 1:
            raise ValidationError("output_dim must be >= 1")
        if not (0 <= int(self.seed) < 2**64):
            raise ValidationError("seed must fit in 64 unsigned bits")
        if self.output_dim > self.input_dim:
            if not self.allow_expand:
                raise ValidationError(
                    f"output_dim {self.output_dim} exceeds input_dim "
                    f"{self.input_dim}; pass allow_expand to override"
                )
            warnings.warn(
                "projecting to a higher dimension than the input",
                stacklevel=2,
            )


def materialize(spec: ProjectionSpec) -> np.ndarray:
    """The o x n matrix for `spec`: N(0, 1/n) entries, row-major order."""
    stream = PinnedStream(spec.seed)
    matrix = stream.normal_matrix(spec.output_dim, spec.input_dim)
    matrix *= spec.input_dim**-0.5
    matrix.flags.writeable = False
    return matrix


def apply_matrix(matrix: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Raw linear map of row vectors (float64, no renormalization)."""
    return rows.astype(np.float64) @ matrix.T


def project(
    spec: ProjectionSpec, dset: DescriptorSet | FusedReferenceSet
) -> DescriptorSet | FusedReferenceSet:
    """Project a set to spec.output_dim; returns the same kind of object."""
    if dset.dim != spec.input_dim:
        raise DimensionError(
            f"set has dim {dset.dim}, projection expects {spec.input_dim}"
        )
    matrix = materialize(spec)
    if isinstance(dset, FusedReferenceSet):
        # G(sum of rows) == sum of G(rows): the running sum stays exact.
        return FusedReferenceSet(
            dataset_id=dset.dataset_id,
            source_conditions=dset.source_conditions,
            place_ids=dset.place_ids,
            sum_data=apply_matrix(matrix, dset.sum_data),
            normalized_output=dset.normalized_output,
        )
    projected = apply_matrix(matrix, dset.data)
    norms = np.linalg.norm(projected, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    return DescriptorSet(
        dataset_id=dset.dataset_id,
        condition_id=dset.condition_id,
        data=(projected / safe[:, None]).astype(np.float32),
        frame_ids=dset.frame_ids,
    )
