"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np

from hops import DescriptorSet, PinnedStream


def unit(v):
    v = np.asarray(v, dtype=np.float64)
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    return np.divide(v, norm, out=np.zeros_like(v), where=norm > 0)


def make_set(data, dataset_id="ds", condition_id="cond", frame_ids=None):
    data = np.asarray(data, dtype=np.float32)
    if frame_ids is None:
        frame_ids = [str(i) for i in range(data.shape[0])]
    return DescriptorSet(dataset_id, condition_id, data, tuple(frame_ids))


def random_unit_set(
    seed, count, dim, dataset_id="ds", condition_id="cond"
):
    rows = unit(PinnedStream(seed).normal_matrix(count, dim))
    return make_set(rows, dataset_id, condition_id)


def cluster_dataset(dataset_id, conditions, places, dim, seed, spread=0.35):
    """Condition sets whose rows share a per-dataset center.

    Every descriptor is normalize(center + g) with g drawn fresh per row, so
    all rows of one dataset lean toward its center while separate datasets
    (separate seeds) point elsewhere. Used for whole-dataset identification.
    """
    stream = PinnedStream(seed)
    scale = dim ** -0.5
    center = unit(stream.normal(dim))
    sets = []
    for condition_id in conditions:
        noise = stream.normal_matrix(places, dim) * scale
        rows = unit(center + spread * noise)
        sets.append(make_set(rows, dataset_id, condition_id))
    return sets
