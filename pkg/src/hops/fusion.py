"""Bundling: element-wise summation of aligned descriptor sets.

A fused reference keeps one row per place, the sum of that place's descriptors
across source conditions. Because random high-dimensional unit vectors are
quasi-orthogonal, the sum stays similar to each of its inputs, so a single
fused set can stand in for all source sets at matching time.

Inputs are unit-normalized (in float64) before summation so every condition
contributes equal weight; zero rows contribute nothing. The un-renormalized
running sum is retained on the result so that adding another set later is
exact, not approximately invertible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    AlignmentError,
    DimensionError,
    DuplicateSourceError,
    FrameLookupError,
    ValidationError,
)
from .store import DescriptorSet

FUSED_PREFIX = "fused:"
SIGNATURE_CONDITION = "dataset-signature"


def _unit_rows(data: np.ndarray) -> np.ndarray:
    """Rows scaled to unit norm in float64; zero rows stay zero."""
    rows = data.astype(np.float64)
    norms = np.linalg.norm(rows, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    return rows / safe[:, None]


@dataclass(frozen=True)
class FusedReferenceSet:
    """Per-place bundled signatures over K source conditions."""

    dataset_id: str
    source_conditions: tuple[str, ...]
    place_ids: tuple[str, ...]
    sum_data: np.ndarray  # float64 running sum, before renormalization
    normalized_output: bool = True
    data: np.ndarray = field(init=False)

    def __post_init__(self):
        sum_data = np.ascontiguousarray(self.sum_data, dtype=np.float64)
        if sum_data.ndim != 2 or sum_data.shape[0] < 1 or sum_data.shape[1] < 1:
            raise ValidationError("fused data must be a non-empty 2-D matrix")
        if not np.isfinite(sum_data).all():
            raise ValidationError("non-finite value in fused sum")
        if len(self.source_conditions) < 1:
            raise ValidationError("a fusion needs at least one source condition")
        if len(set(self.source_conditions)) != len(self.source_conditions):
            raise DuplicateSourceError("duplicate source condition")
        if len(self.place_ids) != sum_data.shape[0]:
            raise ValidationError(
                f"{len(self.place_ids)} place ids for {sum_data.shape[0]} rows"
            )
        sum_data.flags.writeable = False
        data = _unit_rows(sum_data) if self.normalized_output else sum_data
        data.flags.writeable = False
        object.__setattr__(self, "sum_data", sum_data)
        object.__setattr__(self, "data", data)

    @property
    def count(self) -> int:
        return self.sum_data.shape[0]

    @property
    def dim(self) -> int:
        return self.sum_data.shape[1]

    @property
    def k(self) -> int:
        return len(self.source_conditions)

    @property
    def condition_id(self) -> str:
        return FUSED_PREFIX + "+".join(self.source_conditions)


@dataclass(frozen=True)
class DatasetSignature:
    """One vector summarizing every descriptor of a whole dataset."""

    dataset_id: str
    vector: np.ndarray  # float64, shape (n,)
    source_set_count: int
    source_vector_count: int
    source_conditions: tuple[str, ...] = ()

    def __post_init__(self):
        vector = np.ascontiguousarray(self.vector, dtype=np.float64)
        if vector.ndim != 1 or vector.shape[0] < 1:
            raise ValidationError("signature vector must be 1-D and non-empty")
        if not np.isfinite(vector).all():
            raise ValidationError("non-finite value in signature vector")
        vector.flags.writeable = False
        object.__setattr__(self, "vector", vector)

    @property
    def dim(self) -> int:
        return self.vector.shape[0]


def _check_aligned(sets: Sequence[DescriptorSet]) -> None:
    first = sets[0]
    for s in sets[1:]:
        if s.dim != first.dim:
            raise DimensionError(
                f"set {s.condition_id!r} has dim {s.dim}, expected {first.dim}"
            )
        if s.count != first.count:
            raise AlignmentError(
                f"set {s.condition_id!r} has {s.count} rows, expected {first.count}"
            )
        if s.frame_ids != first.frame_ids:
            raise AlignmentError(
                f"set {s.condition_id!r} frame ids differ from "
                f"{first.condition_id!r}"
            )


def bundle_aligned(
    sets: Sequence[DescriptorSet], normalized_output: bool = True
) -> FusedReferenceSet:
    """Fuse K index-aligned sets: row i = sum over sets of unit row i."""
    sets = list(sets)
    if not sets:
        raise ValidationError("bundle_aligned needs at least one input set")
    _check_aligned(sets)
    conditions = [s.condition_id for s in sets]
    if len(set(conditions)) != len(conditions):
        raise DuplicateSourceError("duplicate source condition in bundle")
    total = np.zeros((sets[0].count, sets[0].dim), dtype=np.float64)
    for s in sets:
        total += _unit_rows(s.data)
    return FusedReferenceSet(
        dataset_id=sets[0].dataset_id,
        source_conditions=tuple(conditions),
        place_ids=sets[0].frame_ids,
        sum_data=total,
        normalized_output=normalized_output,
    )


def bundle_incremental(
    current: FusedReferenceSet, addition: DescriptorSet
) -> FusedReferenceSet:
    """Stack one more condition onto an existing fusion, exactly."""
    if addition.condition_id in current.source_conditions:
        raise DuplicateSourceError(
            f"condition {addition.condition_id!r} already fused"
        )
    if addition.dim != current.dim:
        raise DimensionError(
            f"addition has dim {addition.dim}, fusion has {current.dim}"
        )
    if addition.count != current.count:
        raise AlignmentError(
            f"addition has {addition.count} rows, fusion has {current.count}"
        )
    if addition.frame_ids != current.place_ids:
        raise AlignmentError(
            f"addition {addition.condition_id!r} frame ids differ from the "
            "fused place ids"
        )
    return FusedReferenceSet(
        dataset_id=current.dataset_id,
        source_conditions=current.source_conditions + (addition.condition_id,),
        place_ids=current.place_ids,
        sum_data=current.sum_data + _unit_rows(addition.data),
        normalized_output=current.normalized_output,
    )


def bundle_groups(
    dset: DescriptorSet,
    groups: Mapping[str, Sequence[str]],
    normalized_output: bool = True,
) -> FusedReferenceSet:
    """Fuse variable-size frame groups of one set into per-place rows.

    Output rows are ordered by lexicographic place_id so files built from the
    same groups are deterministic.
    """
    if not groups:
        raise ValidationError("bundle_groups needs at least one group")
    row_of = {f: i for i, f in enumerate(dset.frame_ids)}
    unit = _unit_rows(dset.data)
    place_ids = sorted(str(p) for p in groups)
    used: set[str] = set()
    total = np.zeros((len(place_ids), dset.dim), dtype=np.float64)
    for out_row, place_id in enumerate(place_ids):
        frames = list(groups[place_id])
        if not frames:
            raise ValidationError(f"group {place_id!r} is empty")
        for frame_id in frames:
            frame_id = str(frame_id)
            if frame_id not in row_of:
                raise FrameLookupError(
                    f"group {place_id!r} references unknown frame {frame_id!r}"
                )
            if frame_id in used:
                raise ValidationError(
                    f"frame {frame_id!r} appears in more than one group"
                )
            used.add(frame_id)
            total[out_row] += unit[row_of[frame_id]]
    return FusedReferenceSet(
        dataset_id=dset.dataset_id,
        source_conditions=(dset.condition_id,),
        place_ids=tuple(place_ids),
        sum_data=total,
        normalized_output=normalized_output,
    )


def bundle_dataset(sets: Sequence[DescriptorSet]) -> DatasetSignature:
    """Sum every row of every set into a single dataset signature."""
    sets = list(sets)
    if not sets:
        raise ValidationError("bundle_dataset needs at least one input set")
    dim = sets[0].dim
    for s in sets[1:]:
        if s.dim != dim:
            raise DimensionError(
                f"set {s.condition_id!r} has dim {s.dim}, expected {dim}"
            )
    vector = np.zeros(dim, dtype=np.float64)
    rows = 0
    for s in sets:
        vector += _unit_rows(s.data).sum(axis=0)
        rows += s.count
    return DatasetSignature(
        dataset_id=sets[0].dataset_id,
        vector=vector,
        source_set_count=len(sets),
        source_vector_count=rows,
        source_conditions=tuple(s.condition_id for s in sets),
    )


def to_descriptor_set(fused: FusedReferenceSet) -> DescriptorSet:
    """View a fusion as a persistable DescriptorSet (float32)."""
    return DescriptorSet(
        dataset_id=fused.dataset_id,
        condition_id=fused.condition_id,
        data=fused.data.astype(np.float32),
        frame_ids=fused.place_ids,
    )


def signature_to_descriptor_set(signature: DatasetSignature) -> DescriptorSet:
    """View a dataset signature as a persistable 1-row DescriptorSet."""
    return DescriptorSet(
        dataset_id=signature.dataset_id,
        condition_id=SIGNATURE_CONDITION,
        data=signature.vector.astype(np.float32)[None, :],
        frame_ids=(signature.dataset_id or SIGNATURE_CONDITION,),
    )
