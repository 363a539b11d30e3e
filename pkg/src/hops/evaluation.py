"""Recall, error histograms, progression/sweep studies, and report files.

Ground truth for index-aligned data is truth(q) = q, and a retrieval counts
as correct when |match - truth| <= tolerance_frames. Recall is reported as a
fraction in [0, 1]; the CLI renders one-decimal percentages.

Report files: report.json carries everything including run metadata; each
figure-ready series is also emitted as a small CSV (columns documented in the
README). CSVs never contain timestamps or timings, so byte-identical CSV
output for identical inputs and seed is part of the contract.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, DimensionError, LeakageError, ValidationError
from .fusion import (
    DatasetSignature,
    FusedReferenceSet,
    bundle_aligned,
    bundle_dataset,
    bundle_incremental,
)
from .matching import Ranking, cosine_distance_matrix, identify_dataset, rank
from .projection import ProjectionSpec, project
from .store import DescriptorSet


@dataclass(frozen=True)
class EvalConfig:
    """Tolerance, recall cutoffs, and ground-truth source for one evaluation."""

    tolerance_frames: int
    recall_ns: tuple[int, ...] = (1, 5, 10)
    ground_truth: Mapping[int, int] | None = None

    def __post_init__(self):
        if self.tolerance_frames < 0:
            raise ValidationError("tolerance_frames must be >= 0")
        ns = tuple(int(n) for n in self.recall_ns)
        if not ns or any(n < 1 for n in ns):
            raise ValidationError("recall_ns must be positive integers")
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValidationError("recall_ns must be strictly increasing")
        object.__setattr__(self, "recall_ns", ns)


class ErrorHistogram(NamedTuple):
    """Signed top-1 frame errors with integer bins symmetric around 0."""

    errors: np.ndarray
    offsets: np.ndarray
    counts: np.ndarray
    densities: np.ndarray


class SweepEntry(NamedTuple):
    dim: int
    recall: dict[int, float]
    seconds: float


def _truth_indices(ranking: Ranking, config: EvalConfig) -> np.ndarray:
    q, r = ranking.query_count, ranking.reference_count
    if config.ground_truth is None:
        if q > r:
            raise ConfigError(
                f"query {r} has no index-aligned ground truth "
                f"({q} queries, {r} references)"
            )
        return np.arange(q, dtype=np.int64)
    truth = np.empty(q, dtype=np.int64)
    for i in range(q):
        if i not in config.ground_truth:
            raise ConfigError(f"no ground truth for query {i}")
        truth[i] = int(config.ground_truth[i])
    return truth


def recall_at_n(ranking: Ranking, config: EvalConfig) -> dict[int, float]:
    """Fraction of queries with an in-tolerance reference in the top N."""
    truth = _truth_indices(ranking, config)
    tolerance = config.tolerance_frames
    out: dict[int, float] = {}
    for n in config.recall_ns:
        top = ranking.order[:, :n]
        hits = (np.abs(top - truth[:, None]) <= tolerance).any(axis=1)
        out[n] = float(np.mean(hits))
    return out


def error_histogram(ranking: Ranking, config: EvalConfig) -> ErrorHistogram:
    """Signed (match - truth) offsets of each top-1 match, binned per frame."""
    truth = _truth_indices(ranking, config)
    errors = ranking.order[:, 0] - truth
    limit = int(np.max(np.abs(errors))) if errors.size else 0
    offsets = np.arange(-limit, limit + 1, dtype=np.int64)
    counts = np.bincount(errors + limit, minlength=2 * limit + 1)
    return ErrorHistogram(
        errors=errors,
        offsets=offsets,
        counts=counts.astype(np.int64),
        densities=counts / errors.shape[0],
    )


def fusion_progression(
    queries: DescriptorSet,
    sets: Sequence[DescriptorSet],
    config: EvalConfig,
    threads: int = 1,
) -> list[tuple[int, float]]:
    """recall@1 as reference sets are fused in one at a time, K = 1..len(sets)."""
    sets = list(sets)
    if not sets:
        raise ValidationError("fusion_progression needs at least one set")
    if queries.condition_id in [s.condition_id for s in sets]:
        raise LeakageError(
            f"query condition {queries.condition_id!r} is among the fused sets"
        )
    config1 = EvalConfig(config.tolerance_frames, (1,), config.ground_truth)
    points = []
    fused = bundle_aligned(sets[:1])
    for k, added in enumerate(sets, start=1):
        if k > 1:
            fused = bundle_incremental(fused, added)
        ranking = rank(cosine_distance_matrix(queries, fused, threads=threads))
        points.append((k, recall_at_n(ranking, config1)[1]))
    return points


def dimensionality_sweep(
    queries: DescriptorSet,
    refs: DescriptorSet | FusedReferenceSet,
    dims: Sequence[int],
    seed: int,
    config: EvalConfig,
    allow_expand: bool = False,
    threads: int = 1,
) -> list[SweepEntry]:
    """Recall after projecting both sides to each o in dims.

    The o == n entry skips projection entirely and acts as the control.
    Timing covers distance computation plus ranking for that entry.
    """
    if queries.dim != refs.dim:
        raise DimensionError(
            f"queries have dim {queries.dim}, references {refs.dim}"
        )
    n = queries.dim
    for o in dims:
        if o > n and not allow_expand:
            raise ValidationError(
                f"sweep dim {o} exceeds input dim {n}; pass allow_expand"
            )
    entries = []
    for o in dims:
        if o == n:
            pq, pr = queries, refs
        else:
            spec = ProjectionSpec(n, int(o), seed, allow_expand)
            pq, pr = project(spec, queries), project(spec, refs)
        start = time.perf_counter()
        ranking = rank(cosine_distance_matrix(pq, pr, threads=threads))
        seconds = time.perf_counter() - start
        entries.append(SweepEntry(int(o), recall_at_n(ranking, config), seconds))
    return entries


def leave_one_out_signatures(
    sets_by_dataset: Mapping[str, Sequence[DescriptorSet]],
) -> list[DatasetSignature]:
    """Standard signature list for identification_eval.

    Per dataset: the full signature first, then one leave-one-out variant per
    condition (when the dataset has more than one set). identification_eval's
    leakage filter then picks the full signature for foreign datasets and the
    correct leave-one-out variant for the query's own.
    """
    signatures: list[DatasetSignature] = []
    for dataset_id, sets in sets_by_dataset.items():
        sets = list(sets)
        signatures.append(bundle_dataset(sets))
        if len(sets) > 1:
            for leave_out in sets:
                kept = [s for s in sets if s is not leave_out]
                signatures.append(bundle_dataset(kept))
    return signatures


def identification_eval(
    query_sets: Sequence[DescriptorSet],
    signatures: Sequence[DatasetSignature],
    truth: Mapping[str, str],
) -> dict[str, float]:
    """Per-query-set accuracy of dataset identification.

    Query sets are keyed "<dataset_id>/<condition_id>" in `truth` and in the
    result. For each query set, any signature of its true dataset whose
    sources include the query's condition is excluded (leave-one-set-out);
    the first remaining signature per dataset, in list order, competes. If
    every signature of the true dataset contains the query set, that is a
    leakage error.
    """
    keys = [f"{qs.dataset_id}/{qs.condition_id}" for qs in query_sets]
    if len(set(keys)) != len(keys):
        raise ConfigError("duplicate query-set key")
    accuracies: dict[str, float] = {}
    for key, qs in zip(keys, query_sets):
        if key not in truth:
            raise ConfigError(f"no truth entry for query set {key!r}")
        true_dataset = truth[key]
        chosen: dict[str, DatasetSignature] = {}
        saw_leak = False
        for signature in signatures:
            if (
                signature.dataset_id == true_dataset
                and qs.condition_id in signature.source_conditions
            ):
                saw_leak = True
                continue
            chosen.setdefault(signature.dataset_id, signature)
        if true_dataset not in chosen:
            if saw_leak:
                raise LeakageError(
                    f"every signature for {true_dataset!r} contains query "
                    f"set {key!r}"
                )
            raise ConfigError(f"no signature for dataset {true_dataset!r}")
        lineup = list(chosen.values())
        correct = sum(
            identify_dataset(row, lineup) == true_dataset for row in qs.data
        )
        accuracies[key] = correct / qs.count
    return accuracies


# --- report files -----------------------------------------------------------


@dataclass(frozen=True)
class EvalReport:
    """Everything one evaluation run produced, ready to serialize."""

    dataset_id: str
    query_condition: str
    strategy: str
    query_count: int
    recall: dict[int, float]
    errors: tuple[int, ...]
    histogram: ErrorHistogram | None = None
    progression: list[tuple[int, float]] | None = None
    sweep: list[SweepEntry] | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        values = [self.recall[n] for n in sorted(self.recall)]
        if any(not 0.0 <= v <= 1.0 for v in values):
            raise ValidationError("recall values must lie in [0, 1]")
        if any(b < a for a, b in zip(values, values[1:])):
            raise ValidationError("recall must be non-decreasing in N")
        if len(self.errors) != self.query_count:
            raise ValidationError(
                f"{len(self.errors)} errors for {self.query_count} queries"
            )

    def to_json_dict(self) -> dict:
        doc: dict = {
            "dataset_id": self.dataset_id,
            "query_condition": self.query_condition,
            "strategy": self.strategy,
            "query_count": self.query_count,
            "recall": {str(n): self.recall[n] for n in sorted(self.recall)},
            "errors": [int(e) for e in self.errors],
        }
        if self.histogram is not None:
            doc["histogram"] = {
                "offsets": self.histogram.offsets.tolist(),
                "counts": self.histogram.counts.tolist(),
                "densities": self.histogram.densities.tolist(),
            }
        if self.progression is not None:
            doc["progression"] = [[k, r] for k, r in self.progression]
        if self.sweep is not None:
            doc["sweep"] = [
                {
                    "dim": entry.dim,
                    "recall": {str(n): v for n, v in sorted(entry.recall.items())},
                }
                for entry in self.sweep
            ]
        doc["metadata"] = self.metadata
        return doc

    def write_files(self, out_dir: str | Path) -> list[Path]:
        """Write report.json plus one CSV per series; returns written paths."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = [out_dir / "report.json"]
        written[0].write_text(
            json.dumps(self.to_json_dict(), indent=2) + "\n"
        )
        path = out_dir / "recall.csv"
        _write_csv(
            path,
            ["n", "recall"],
            [[n, _fmt(self.recall[n])] for n in sorted(self.recall)],
        )
        written.append(path)
        path = out_dir / "errors.csv"
        _write_csv(
            path,
            ["query_index", "error"],
            [[i, int(e)] for i, e in enumerate(self.errors)],
        )
        written.append(path)
        if self.histogram is not None:
            path = out_dir / "histogram.csv"
            _write_csv(
                path,
                ["offset", "count", "density"],
                [
                    [int(o), int(c), _fmt(float(d))]
                    for o, c, d in zip(
                        self.histogram.offsets,
                        self.histogram.counts,
                        self.histogram.densities,
                    )
                ],
            )
            written.append(path)
        if self.progression is not None:
            path = out_dir / "progression.csv"
            _write_csv(
                path,
                ["k", "recall_at_1"],
                [[k, _fmt(r)] for k, r in self.progression],
            )
            written.append(path)
        if self.sweep is not None:
            path = out_dir / "sweep.csv"
            ns = sorted(self.sweep[0].recall) if self.sweep else []
            _write_csv(
                path,
                ["dim"] + [f"recall_at_{n}" for n in ns],
                [
                    [entry.dim] + [_fmt(entry.recall[n]) for n in ns]
                    for entry in self.sweep
                ],
            )
            written.append(path)
        return written

    @staticmethod
    def load_json(path: str | Path) -> dict:
        return json.loads(Path(path).read_text())


def _fmt(value: float) -> str:
    return repr(float(value))


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
