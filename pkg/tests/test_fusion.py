"""Bundling: aligned sums, incremental updates, group fusion, signatures."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hops import (
    AlignmentError,
    DimensionError,
    DuplicateSourceError,
    FrameLookupError,
    FusedReferenceSet,
    PinnedStream,
    ValidationError,
    bundle_aligned,
    bundle_dataset,
    bundle_groups,
    bundle_incremental,
    signature_to_descriptor_set,
    to_descriptor_set,
)

from conftest import make_set, random_unit_set, unit

# Two 2x3 inputs and the bundle computed by independent scalar arithmetic
# (normalize each row, add, renormalize). Inputs are exact in float32.
SET_A = [[3.0, 0.0, 4.0], [1.0, 2.0, 2.0]]
SET_B = [[0.0, 5.0, 12.0], [2.0, 1.0, 2.0]]
EXPECTED_SUM = [
    [0.6, 0.38461538461538464, 1.7230769230769232],
    [1.0, 1.0, 1.3333333333333333],
]
EXPECTED_FUSED = [
    [0.32177604480266947, 0.20626669538632658, 0.9240747953307431],
    [0.5144957554275266, 0.5144957554275266, 0.6859943405700353],
]


def two_sets():
    return (
        make_set(SET_A, condition_id="a"),
        make_set(SET_B, condition_id="b"),
    )


def test_bundle_matches_scalar_oracle():
    fused = bundle_aligned(two_sets())
    np.testing.assert_allclose(fused.sum_data, EXPECTED_SUM, atol=1e-12)
    np.testing.assert_allclose(fused.data, EXPECTED_FUSED, atol=1e-12)
    assert fused.k == 2
    assert fused.source_conditions == ("a", "b")
    assert fused.condition_id == "fused:a+b"
    assert fused.place_ids == ("0", "1")


def test_unnormalized_output_keeps_raw_sums():
    fused = bundle_aligned(two_sets(), normalized_output=False)
    np.testing.assert_allclose(fused.data, EXPECTED_SUM, atol=1e-12)


def test_inputs_are_renormalized_before_summing():
    # scaling one input set must not change the bundle
    a, b = two_sets()
    scaled = make_set(np.asarray(SET_A) * 250.0, condition_id="a")
    np.testing.assert_allclose(
        bundle_aligned((scaled, b)).data,
        bundle_aligned((a, b)).data,
        atol=1e-6,
    )


def test_orthonormal_cosine_law():
    for k in (1, 2, 4, 9):
        basis = np.eye(16, dtype=np.float32)[:k]
        sets = [
            make_set(basis[i : i + 1], condition_id=f"c{i}") for i in range(k)
        ]
        fused = bundle_aligned(sets)
        for i in range(k):
            cos = float(np.dot(basis[i], fused.data[0]))
            assert abs(cos - 1.0 / np.sqrt(k)) < 1e-6


def test_permutation_invariance():
    sets = [random_unit_set(seed, 5, 32, condition_id=f"c{seed}") for seed in range(4)]
    forward = bundle_aligned(sets)
    backward = bundle_aligned(sets[::-1])
    np.testing.assert_allclose(forward.data, backward.data, atol=1e-12)
    assert set(forward.source_conditions) == set(backward.source_conditions)


def test_incremental_equals_batch():
    sets = [random_unit_set(seed, 6, 24, condition_id=f"c{seed}") for seed in range(5)]
    running = bundle_aligned(sets[:1])
    for addition in sets[1:]:
        running = bundle_incremental(running, addition)
    batch = bundle_aligned(sets)
    np.testing.assert_allclose(running.sum_data, batch.sum_data, atol=1e-9)
    np.testing.assert_allclose(running.data, batch.data, atol=1e-9)
    assert running.source_conditions == batch.source_conditions


@settings(max_examples=20, deadline=None)
@given(order=st.permutations(list(range(4))))
def test_permutation_property(order):
    sets = [random_unit_set(s, 3, 12, condition_id=f"c{s}") for s in range(4)]
    base = bundle_aligned(sets)
    shuffled = bundle_aligned([sets[i] for i in order])
    np.testing.assert_allclose(base.data, shuffled.data, atol=1e-12)


def test_duplicate_sources_rejected():
    a, b = two_sets()
    with pytest.raises(DuplicateSourceError):
        bundle_aligned((a, a))
    fused = bundle_aligned((a, b))
    with pytest.raises(DuplicateSourceError):
        bundle_incremental(fused, make_set(SET_B, condition_id="b"))


def test_misalignment_rejected():
    a, _ = two_sets()
    with pytest.raises(DimensionError):
        bundle_aligned((a, make_set([[1.0, 0.0]], condition_id="b")))
    renamed = make_set(SET_B, condition_id="b", frame_ids=["7", "8"])
    with pytest.raises(AlignmentError):
        bundle_aligned((a, renamed))
    with pytest.raises(ValidationError):
        bundle_aligned(())


def test_zero_rows_pass_through():
    a = make_set([[0.0, 0.0], [1.0, 0.0]], condition_id="a")
    b = make_set([[0.0, 0.0], [0.0, 1.0]], condition_id="b")
    fused = bundle_aligned((a, b))
    np.testing.assert_array_equal(fused.data[0], [0.0, 0.0])
    np.testing.assert_allclose(
        fused.data[1], unit(np.array([1.0, 1.0])), atol=1e-12
    )


def test_group_fusion_orders_and_sums():
    dset = make_set(
        np.eye(4, dtype=np.float32),
        condition_id="ref",
        frame_ids=["f0", "f1", "f2", "f3"],
    )
    groups = {"pb": ("f2", "f3"), "pa": ("f0", "f1")}
    fused = bundle_groups(dset, groups)
    assert fused.place_ids == ("pa", "pb")  # lexicographic
    np.testing.assert_allclose(
        fused.data[0], unit(np.array([1.0, 1.0, 0.0, 0.0])), atol=1e-12
    )
    np.testing.assert_allclose(
        fused.data[1], unit(np.array([0.0, 0.0, 1.0, 1.0])), atol=1e-12
    )
    assert fused.k == 1


def test_group_fusion_errors():
    dset = make_set(np.eye(3, dtype=np.float32), condition_id="ref")
    with pytest.raises(FrameLookupError):
        bundle_groups(dset, {"p": ("missing",)})
    with pytest.raises(ValidationError):
        bundle_groups(dset, {"p": ()})
    with pytest.raises(ValidationError):
        bundle_groups(dset, {})
    with pytest.raises(ValidationError):
        bundle_groups(dset, {"p": ("0",), "q": ("0",)})  # frame reused


def test_dataset_signature():
    a, b = two_sets()
    signature = bundle_dataset((a, b))
    expected = np.sum(unit(np.asarray(SET_A, dtype=np.float64)), axis=0)
    expected += np.sum(unit(np.asarray(SET_B, dtype=np.float64)), axis=0)
    np.testing.assert_allclose(signature.vector, expected, atol=1e-12)
    assert signature.source_set_count == 2
    assert signature.source_vector_count == 4
    assert signature.source_conditions == ("a", "b")
    as_set = signature_to_descriptor_set(signature)
    assert as_set.count == 1
    assert as_set.condition_id == "dataset-signature"


def test_signature_dim_mismatch():
    a = make_set([[1.0, 0.0]], condition_id="a")
    b = make_set([[1.0, 0.0, 0.0]], condition_id="b")
    with pytest.raises(DimensionError):
        bundle_dataset((a, b))


def test_to_descriptor_set_is_float32():
    fused = bundle_aligned(two_sets())
    dset = to_descriptor_set(fused)
    assert dset.data.dtype == np.float32
    assert dset.condition_id == "fused:a+b"
    assert dset.frame_ids == fused.place_ids
    np.testing.assert_allclose(dset.data, fused.data, atol=1e-7)


def test_fused_set_validation():
    with pytest.raises(ValidationError):
        FusedReferenceSet(
            dataset_id="d",
            source_conditions=(),
            place_ids=("p",),
            sum_data=np.ones((1, 2)),
        )
    with pytest.raises(DuplicateSourceError):
        FusedReferenceSet(
            dataset_id="d",
            source_conditions=("a", "a"),
            place_ids=("p",),
            sum_data=np.ones((1, 2)),
        )
    with pytest.raises(ValidationError):
        FusedReferenceSet(
            dataset_id="d",
            source_conditions=("a",),
            place_ids=("p", "q"),
            sum_data=np.ones((1, 2)),
        )
