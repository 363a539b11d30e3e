"""Descriptor sets, their binary file format, and dataset manifests.

File format (little-endian throughout):

    offset 0   magic bytes "HOPS"
    offset 4   format version, u16 (currently 1)
    offset 6   flags, u16 (currently 0)
    offset 8   rows, u32
    offset 12  cols, u32
    offset 16  frame-id block: one length-prefixed UTF-8 string per row
               (u32 byte length, then the bytes)
    then       payload: rows*cols IEEE-754 float32 values, row-major

A manifest is a JSON object with keys `dataset_id`, `sets` (array of
{condition_id, path}), `tolerance_frames`, `correspondence` (one of
"index_aligned", "place_grouped") and, for place-grouped data, `place_groups`
(object mapping place_id to a list of frame ids). Set paths are resolved
relative to the manifest's directory when loaded.

Descriptors are stored as float32; every dot product or norm in this package
accumulates in float64. The file format carries no dataset or condition
identity; those live in the manifest (or are passed by the caller) and default
to empty strings on a bare load.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    AlignmentError,
    ConfigError,
    DimensionError,
    FormatError,
    ValidationError,
)

MAGIC = b"HOPS"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHHII")

INDEX_ALIGNED = "index_aligned"
PLACE_GROUPED = "place_grouped"


@dataclass(frozen=True)
class DescriptorSet:
    """One condition's descriptors: M rows of n float32 values plus frame ids."""

    dataset_id: str
    condition_id: str
    data: np.ndarray
    frame_ids: tuple[str, ...]

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float32)
        object.__setattr__(self, "data", data)
        object.__setattr__(
            self, "frame_ids", tuple(str(f) for f in self.frame_ids)
        )
        data.flags.writeable = False
        self.validate()

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def validate(self) -> None:
        if self.data.ndim != 2:
            raise ValidationError(
                f"descriptor data must be 2-D, got {self.data.ndim}-D"
            )
        m, n = self.data.shape
        if m < 1 or n < 1:
            raise ValidationError(f"descriptor set must be non-empty, got {m}x{n}")
        finite_rows = np.isfinite(self.data).all(axis=1)
        if not finite_rows.all():
            row = int(np.argmin(finite_rows))
            raise ValidationError(f"non-finite value in row {row}")
        if len(self.frame_ids) != m:
            raise ValidationError(
                f"{len(self.frame_ids)} frame ids for {m} rows"
            )
        if len(set(self.frame_ids)) != m:
            seen: set[str] = set()
            for f in self.frame_ids:
                if f in seen:
                    raise ValidationError(f"duplicate frame id {f!r}")
                seen.add(f)


@dataclass(frozen=True)
class DatasetManifest:
    """Which files make up a dataset and how their rows correspond."""

    dataset_id: str
    sets: tuple[tuple[str, str], ...]  # (condition_id, path)
    tolerance_frames: int
    correspondence: str = INDEX_ALIGNED
    place_groups: Mapping[str, tuple[str, ...]] | None = None

    def __post_init__(self):
        if self.tolerance_frames < 0:
            raise ValidationError("tolerance_frames must be >= 0")
        if self.correspondence not in (INDEX_ALIGNED, PLACE_GROUPED):
            raise ValidationError(
                f"unknown correspondence {self.correspondence!r}"
            )
        conditions = [c for c, _ in self.sets]
        if len(set(conditions)) != len(conditions):
            raise ValidationError("duplicate condition_id in manifest")
        if (self.place_groups is not None) != (
            self.correspondence == PLACE_GROUPED
        ):
            raise ValidationError(
                "place_groups required iff correspondence is place_grouped"
            )
        if self.place_groups is not None:
            object.__setattr__(
                self,
                "place_groups",
                {
                    str(p): tuple(str(f) for f in frames)
                    for p, frames in self.place_groups.items()
                },
            )

    def condition_ids(self) -> tuple[str, ...]:
        return tuple(c for c, _ in self.sets)

    def path_for(self, condition_id: str) -> str:
        for c, p in self.sets:
            if c == condition_id:
                return p
        raise ConfigError(f"condition {condition_id!r} not in manifest")


def load_set(
    path: str | Path, dataset_id: str = "", condition_id: str = ""
) -> DescriptorSet:
    """Read a descriptor file, validating format and content."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"file shorter than {_HEADER.size}-byte header", 0)
    magic, version, flags, rows, cols = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", 0)
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {version}", 4)
    if flags != 0:
        raise FormatError(f"unsupported flags {flags:#06x}", 6)

    offset = _HEADER.size
    frame_ids = []
    for _ in range(rows):
        if offset + 4 > len(raw):
            raise FormatError("truncated frame-id block", offset)
        (length,) = struct.unpack_from("<I", raw, offset)
        offset += 4
        if offset + length > len(raw):
            raise FormatError("truncated frame id", offset)
        try:
            frame_ids.append(raw[offset : offset + length].decode("utf-8"))
        except UnicodeDecodeError:
            raise FormatError("frame id is not valid UTF-8", offset) from None
        offset += length

    payload_bytes = rows * cols * 4
    if len(raw) - offset < payload_bytes:
        raise FormatError(
            f"payload needs {payload_bytes} bytes, {len(raw) - offset} present",
            offset,
        )
    if len(raw) - offset > payload_bytes:
        raise FormatError("trailing bytes after payload", offset + payload_bytes)
    data = np.frombuffer(
        raw, dtype="<f4", count=rows * cols, offset=offset
    ).reshape(rows, cols)
    return DescriptorSet(dataset_id, condition_id, data, tuple(frame_ids))


def save_set(dset: DescriptorSet, path: str | Path) -> None:
    """Write a descriptor file; identical inputs produce identical bytes."""
    dset.validate()
    chunks = [_HEADER.pack(MAGIC, FORMAT_VERSION, 0, dset.count, dset.dim)]
    for frame_id in dset.frame_ids:
        encoded = frame_id.encode("utf-8")
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
    chunks.append(np.ascontiguousarray(dset.data, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def l2_normalize(dset: DescriptorSet) -> tuple[DescriptorSet, int]:
    """Unit-normalize rows; zero rows are left alone and counted, not errors."""
    norms = np.linalg.norm(dset.data.astype(np.float64), axis=1)
    zero_rows = int(np.count_nonzero(norms == 0.0))
    safe = np.where(norms == 0.0, 1.0, norms)
    data = (dset.data.astype(np.float64) / safe[:, None]).astype(np.float32)
    return (
        DescriptorSet(dset.dataset_id, dset.condition_id, data, dset.frame_ids),
        zero_rows,
    )


def align_sets(
    manifest: DatasetManifest, sets: Iterable[DescriptorSet]
) -> tuple[DescriptorSet, ...]:
    """Order sets per the manifest and verify index alignment (same M, n)."""
    if manifest.correspondence != INDEX_ALIGNED:
        raise ConfigError("align_sets requires an index_aligned manifest")
    by_condition = {s.condition_id: s for s in sets}
    ordered = []
    for condition_id in manifest.condition_ids():
        if condition_id not in by_condition:
            raise ConfigError(f"no set loaded for condition {condition_id!r}")
        ordered.append(by_condition[condition_id])
    first = ordered[0]
    for s in ordered[1:]:
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
    return tuple(ordered)


def load_manifest(path: str | Path) -> DatasetManifest:
    """Parse a manifest JSON file, resolving set paths against its directory."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"manifest is not valid JSON: {exc}") from None
    for key in ("dataset_id", "sets", "tolerance_frames", "correspondence"):
        if key not in doc:
            raise ValidationError(f"manifest missing key {key!r}")
    base = path.parent
    sets = tuple(
        (str(entry["condition_id"]), str(base / entry["path"]))
        for entry in doc["sets"]
    )
    return DatasetManifest(
        dataset_id=str(doc["dataset_id"]),
        sets=sets,
        tolerance_frames=int(doc["tolerance_frames"]),
        correspondence=str(doc["correspondence"]),
        place_groups=doc.get("place_groups"),
    )


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    doc: dict = {
        "dataset_id": manifest.dataset_id,
        "sets": [
            {"condition_id": c, "path": p} for c, p in manifest.sets
        ],
        "tolerance_frames": manifest.tolerance_frames,
        "correspondence": manifest.correspondence,
    }
    if manifest.place_groups is not None:
        doc["place_groups"] = {
            p: list(frames) for p, frames in manifest.place_groups.items()
        }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_condition_sets(
    manifest: DatasetManifest, normalize: bool = True
) -> list[DescriptorSet]:
    """Load every set in the manifest, unit-normalizing rows by default."""
    loaded = []
    for condition_id, set_path in manifest.sets:
        dset = load_set(set_path, manifest.dataset_id, condition_id)
        if normalize:
            dset, _ = l2_normalize(dset)
        loaded.append(dset)
    return loaded
