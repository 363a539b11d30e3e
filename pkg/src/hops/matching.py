"""Cosine-distance retrieval and the baseline matching strategies.

Distances, not similarities, are the canonical currency: entry (i, j) is
1 - cos(q_i, r_j), which lives in [0, 2]. Rows are unit-normalized in float64
internally, so callers may pass unnormalized data; a zero vector on either
side yields distance 1.0 by convention. Ties break toward the smallest index
everywhere.

Matching against a fused reference costs Q*M distance evaluations however
many conditions were bundled; the pooling baseline pays Q*M*K. The module
counts evaluations so that contract is checkable: wrap calls in
`count_evaluations()` and read the tally.

Queries are processed in fixed-size row blocks. The block boundaries do not
depend on the thread count, so results are identical whether blocks run
serially or on a pool.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import AlignmentError, DimensionError, ValidationError
from .fusion import DatasetSignature, FusedReferenceSet
from .store import DescriptorSet

QUERY_BLOCK = 1024

AGGREGATE_MODES = ("mean", "min", "max", "median")


class EvalCounter:
    """Tally of pairwise distance evaluations."""

    def __init__(self):
        self.comparisons = 0


_active_counters: list[EvalCounter] = []


@contextmanager
def count_evaluations():
    """Count distance evaluations performed inside the with-block."""
    counter = EvalCounter()
    _active_counters.append(counter)
    try:
        yield counter
    finally:
        _active_counters.remove(counter)


def _tally(evaluations: int) -> None:
    for counter in _active_counters:
        counter.comparisons += evaluations


@dataclass(frozen=True)
class DistanceMatrix:
    """Query x reference cosine distances, float64, values in [0, 2]."""

    values: np.ndarray
    query_condition: str = ""
    reference_label: str = ""

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValidationError("distance matrix must be non-empty and 2-D")
        if not np.isfinite(values).all():
            raise ValidationError("non-finite distance value")
        if values.min() < -1e-9 or values.max() > 2.0 + 1e-9:
            raise ValidationError("distance outside [0, 2]")
        values = np.clip(values, 0.0, 2.0)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def query_count(self) -> int:
        return self.values.shape[0]

    @property
    def reference_count(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Ranking:
    """Per query, reference indices by ascending distance (ties: index)."""

    order: np.ndarray

    def __post_init__(self):
        order = np.ascontiguousarray(self.order, dtype=np.int64)
        order.flags.writeable = False
        object.__setattr__(self, "order", order)

    @property
    def query_count(self) -> int:
        return self.order.shape[0]

    @property
    def reference_count(self) -> int:
        return self.order.shape[1]


class PooledMapping(NamedTuple):
    """Column index -> (place, source set) for a pooled reference matrix."""

    place: np.ndarray
    set_index: np.ndarray
    place_count: int


def _unit_rows(data: np.ndarray) -> np.ndarray:
    rows = data.astype(np.float64)
    norms = np.linalg.norm(rows, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    return rows / safe[:, None]


def cosine_distance_matrix(
    queries: DescriptorSet,
    refs: DescriptorSet | FusedReferenceSet,
    threads: int = 1,
) -> DistanceMatrix:
    """1 - cosine for every query/reference pair, 64-bit accumulation."""
    if queries.dim != refs.dim:
        raise DimensionError(
            f"queries have dim {queries.dim}, references {refs.dim}"
        )
    q = _unit_rows(queries.data)
    r = _unit_rows(refs.data).T
    blocks = [
        slice(start, min(start + QUERY_BLOCK, q.shape[0]))
        for start in range(0, q.shape[0], QUERY_BLOCK)
    ]

    def one_block(block: slice) -> np.ndarray:
        return 1.0 - q[block] @ r

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one_block, blocks))
    else:
        parts = [one_block(block) for block in blocks]
    values = parts[0] if len(parts) == 1 else np.vstack(parts)
    _tally(values.shape[0] * values.shape[1])
    label = getattr(refs, "condition_id", "") or ""
    return DistanceMatrix(values, queries.condition_id, label)


def best_match(distances: DistanceMatrix) -> np.ndarray:
    """Per-query argmin; ties resolve to the smallest index."""
    return np.argmin(distances.values, axis=1)


def rank(distances: DistanceMatrix) -> Ranking:
    """Full ranking by ascending distance, stable in index on ties."""
    return Ranking(np.argsort(distances.values, axis=1, kind="stable"))


def pooled_match(
    queries: DescriptorSet,
    sets: Sequence[DescriptorSet],
    threads: int = 1,
) -> tuple[DistanceMatrix, PooledMapping]:
    """Match against all K sets stacked into one M*K reference matrix.

    Column p corresponds to place p mod M in set p // M (sets are stacked in
    the order given).
    """
    sets = list(sets)
    if not sets:
        raise ValidationError("pooled_match needs at least one reference set")
    m, n = sets[0].count, sets[0].dim
    for s in sets[1:]:
        if s.dim != n:
            raise DimensionError(
                f"set {s.condition_id!r} has dim {s.dim}, expected {n}"
            )
        if s.count != m:
            raise AlignmentError(
                f"set {s.condition_id!r} has {s.count} rows, expected {m}"
            )
    stacked = DescriptorSet(
        dataset_id=sets[0].dataset_id,
        condition_id="pool:" + "+".join(s.condition_id for s in sets),
        data=np.vstack([s.data for s in sets]),
        frame_ids=tuple(
            f"{k}/{frame}" for k, s in enumerate(sets) for frame in s.frame_ids
        ),
    )
    distances = cosine_distance_matrix(queries, stacked, threads=threads)
    mapping = PooledMapping(
        place=np.tile(np.arange(m, dtype=np.int64), len(sets)),
        set_index=np.repeat(np.arange(len(sets), dtype=np.int64), m),
        place_count=m,
    )
    return distances, mapping


def place_ranking(distances: DistanceMatrix, mapping: PooledMapping) -> Ranking:
    """Collapse a pooled ranking to place space.

    Each query's pooled columns are ranked, mapped to places via the pooled
    mapping, and deduplicated keeping the best occurrence, yielding a
    permutation of the M places.
    """
    pooled_order = np.argsort(distances.values, axis=1, kind="stable")
    out = np.empty((distances.query_count, mapping.place_count), dtype=np.int64)
    for i in range(distances.query_count):
        places = mapping.place[pooled_order[i]]
        _, first = np.unique(places, return_index=True)
        out[i] = places[np.sort(first)]
    return Ranking(out)


def aggregate_distances(
    per_set: Sequence[DistanceMatrix], mode: str
) -> DistanceMatrix:
    """Element-wise mean/min/max/median across K distance matrices.

    Median of an even K takes the lower of the two central values.
    """
    if mode not in AGGREGATE_MODES:
        raise ValidationError(f"unknown aggregation mode {mode!r}")
    per_set = list(per_set)
    if not per_set:
        raise ValidationError("aggregate_distances needs at least one matrix")
    shape = per_set[0].values.shape
    for dm in per_set[1:]:
        if dm.values.shape != shape:
            raise DimensionError(
                f"distance matrix shapes differ: {dm.values.shape} vs {shape}"
            )
    stacked = np.stack([dm.values for dm in per_set])
    if mode == "mean":
        values = stacked.sum(axis=0) / len(per_set)
    elif mode == "min":
        values = stacked.min(axis=0)
    elif mode == "max":
        values = stacked.max(axis=0)
    else:
        k = len(per_set)
        values = np.sort(stacked, axis=0)[(k - 1) // 2]
    label = f"dmat-{mode}:" + "+".join(
        dm.reference_label for dm in per_set
    )
    return DistanceMatrix(values, per_set[0].query_condition, label)


def identify_dataset(
    query: np.ndarray, signatures: Sequence[DatasetSignature]
) -> str:
    """Dataset whose signature has the highest cosine similarity to `query`.

    Ties resolve to the earliest signature in the list.
    """
    signatures = list(signatures)
    if not signatures:
        raise ValidationError("identify_dataset needs at least one signature")
    query = np.asarray(query, dtype=np.float64).reshape(-1)
    norm = math.sqrt(float(query @ query))
    similarities = np.empty(len(signatures))
    for idx, signature in enumerate(signatures):
        if signature.dim != query.shape[0]:
            raise DimensionError(
                f"signature {signature.dataset_id!r} has dim {signature.dim}, "
                f"query has {query.shape[0]}"
            )
        sig_norm = np.linalg.norm(signature.vector)
        if norm == 0.0 or sig_norm == 0.0:
            similarities[idx] = 0.0
        else:
            similarities[idx] = (query @ signature.vector) / (norm * sig_norm)
    _tally(len(signatures))
    return signatures[int(np.argmax(similarities))].dataset_id


def export_matrix(distances: DistanceMatrix, path) -> None:
    """Persist a distance matrix in the descriptor file format (rows=Q)."""
    from .store import save_set

    save_set(
        DescriptorSet(
            dataset_id="",
            condition_id=distances.reference_label,
            data=distances.values.astype(np.float32),
            frame_ids=tuple(str(i) for i in range(distances.query_count)),
        ),
        path,
    )
