"""Binary container, manifests, normalization, alignment."""

import json
import struct

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from hops import (
    AlignmentError,
    ConfigError,
    DatasetManifest,
    DescriptorSet,
    DimensionError,
    FormatError,
    ValidationError,
    align_sets,
    l2_normalize,
    load_condition_sets,
    load_manifest,
    load_set,
    save_manifest,
    save_set,
)

from conftest import make_set


def expected_bytes(frame_ids, matrix):
    """Layout oracle built with struct alone: header, id block, payload."""
    rows = len(matrix)
    cols = len(matrix[0])
    blob = struct.pack("<4sHHII", b"HOPS", 1, 0, rows, cols)
    for frame in frame_ids:
        encoded = frame.encode("utf-8")
        blob += struct.pack("<I", len(encoded)) + encoded
    for row in matrix:
        blob += struct.pack(f"<{cols}f", *row)
    return blob


def test_file_bytes_match_layout_oracle(tmp_path):
    matrix = [
        [1.0, -2.5, 0.0, 3.25],
        [0.125, 7.0, -0.5, 2.0],
        [-1.0, 0.0, 0.0, 9.5],
    ]
    frames = ["000", "001", "a-long-frame-id"]
    path = tmp_path / "set.hops"
    save_set(make_set(matrix, frame_ids=frames), path)
    assert path.read_bytes() == expected_bytes(frames, matrix)


def test_round_trip_is_byte_exact(tmp_path):
    rng = np.random.default_rng(3)
    data = rng.standard_normal((17, 9), dtype=np.float32)
    data[4] = 0.0  # zero rows are storable
    original = make_set(data, "day", "dusk", [f"f{i}" for i in range(17)])
    path = tmp_path / "a.hops"
    save_set(original, path)
    loaded = load_set(path, dataset_id="day", condition_id="dusk")
    assert loaded.dataset_id == "day"
    assert loaded.condition_id == "dusk"
    assert loaded.frame_ids == original.frame_ids
    np.testing.assert_array_equal(loaded.data, original.data)
    save_set(loaded, tmp_path / "b.hops")
    assert (tmp_path / "b.hops").read_bytes() == path.read_bytes()


@settings(
    max_examples=30,
    deadline=None,
    suppress_health_check=[HealthCheck.function_scoped_fixture],
)
@given(
    rows=st.integers(1, 8),
    cols=st.integers(1, 16),
    seed=st.integers(0, 2**32 - 1),
)
def test_round_trip_property(tmp_path, rows, cols, seed):
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((rows, cols), dtype=np.float32) * 100
    dset = make_set(data)
    path = tmp_path / f"p{seed}.hops"
    save_set(dset, path)
    loaded = load_set(path)
    np.testing.assert_array_equal(loaded.data, dset.data)
    assert loaded.frame_ids == dset.frame_ids


def test_unicode_frame_ids_round_trip(tmp_path):
    dset = make_set([[1.0, 2.0]], frame_ids=["καρέ-0"])
    save_set(dset, tmp_path / "u.hops")
    assert load_set(tmp_path / "u.hops").frame_ids == ("καρέ-0",)


def test_descriptor_set_validation():
    with pytest.raises(ValidationError):
        make_set(np.empty((0, 4), dtype=np.float32))
    with pytest.raises(ValidationError):
        make_set([[1.0, np.nan]])
    with pytest.raises(ValidationError):
        make_set([[1.0, np.inf]])
    with pytest.raises(ValidationError):
        make_set([[1.0, 2.0]], frame_ids=["a", "b"])
    with pytest.raises(ValidationError):
        make_set([[1.0], [2.0]], frame_ids=["a", "a"])
    with pytest.raises(ValidationError):
        DescriptorSet("d", "c", np.zeros(4, dtype=np.float32), ("a",))


def test_data_is_read_only():
    dset = make_set([[1.0, 2.0]])
    with pytest.raises(ValueError):
        dset.data[0, 0] = 5.0


def corrupt(path, blob):
    path.write_bytes(blob)
    return path


def test_format_errors_carry_byte_offsets(tmp_path):
    good = expected_bytes(["x", "y"], [[1.0, 2.0], [3.0, 4.0]])
    cases = [
        (b"", 0),
        (b"NOPE" + good[4:], 0),
        (good[:4] + struct.pack("<H", 9) + good[6:], 4),
        (good[:6] + struct.pack("<H", 1) + good[8:], 6),
        (good[:17], 16),  # id block cut mid-entry
        (good[:-4], 26),  # payload short: offset where the payload begins
        (good + b"\x00", len(good)),  # trailing garbage
    ]
    for i, (blob, offset) in enumerate(cases):
        path = corrupt(tmp_path / f"bad{i}.hops", blob)
        with pytest.raises(FormatError) as err:
            load_set(path)
        assert err.value.offset == offset, f"case {i}"
        assert f"byte offset {offset}" in str(err.value)


def test_format_error_on_bad_utf8(tmp_path):
    blob = struct.pack("<4sHHII", b"HOPS", 1, 0, 1, 1)
    blob += struct.pack("<I", 2) + b"\xff\xfe"
    blob += struct.pack("<f", 1.0)
    with pytest.raises(FormatError):
        load_set(corrupt(tmp_path / "utf.hops", blob))


def test_zero_row_count_rejected(tmp_path):
    blob = struct.pack("<4sHHII", b"HOPS", 1, 0, 0, 4)
    with pytest.raises((FormatError, ValidationError)):
        load_set(corrupt(tmp_path / "zero.hops", blob))


def test_l2_normalize_units_and_zero_count():
    dset = make_set([[3.0, 4.0], [0.0, 0.0], [5.0, 12.0]])
    normalized, zero_rows = l2_normalize(dset)
    assert zero_rows == 1
    norms = np.linalg.norm(normalized.data.astype(np.float64), axis=1)
    np.testing.assert_allclose(norms[[0, 2]], 1.0, atol=1e-6)
    assert norms[1] == 0.0
    assert normalized.frame_ids == dset.frame_ids


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_l2_normalize_idempotent(seed):
    rng = np.random.default_rng(seed)
    dset = make_set(rng.standard_normal((6, 5), dtype=np.float32) * 10)
    once, _ = l2_normalize(dset)
    twice, zero_rows = l2_normalize(once)
    assert zero_rows == 0
    np.testing.assert_allclose(
        twice.data.astype(np.float64),
        once.data.astype(np.float64),
        atol=2e-7,
    )


def manifest_doc(tmp_path, correspondence="index_aligned", **extra):
    doc = {
        "dataset_id": "demo",
        "tolerance_frames": 1,
        "correspondence": correspondence,
        "sets": [
            {"condition_id": "ref01", "path": "ref01.hops"},
            {"condition_id": "query", "path": "query.hops"},
        ],
    }
    doc.update(extra)
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(doc))
    return path


def test_manifest_round_trip(tmp_path):
    manifest = DatasetManifest(
        dataset_id="demo",
        sets=(("ref01", "ref01.hops"), ("query", "query.hops")),
        tolerance_frames=2,
        correspondence="index_aligned",
    )
    save_manifest(manifest, tmp_path / "m.json")
    loaded = load_manifest(tmp_path / "m.json")
    assert loaded.dataset_id == "demo"
    assert loaded.tolerance_frames == 2
    assert loaded.condition_ids() == ("ref01", "query")
    # paths resolve relative to the manifest location
    assert loaded.path_for("ref01") == str(tmp_path / "ref01.hops")


def test_manifest_validation(tmp_path):
    with pytest.raises(ValidationError):
        load_manifest(manifest_doc(tmp_path, correspondence="nonsense"))
    with pytest.raises(ValidationError):
        DatasetManifest("d", (("a", "p"), ("a", "q")), 0, "index_aligned")
    with pytest.raises(ValidationError):
        DatasetManifest("d", (("a", "p"),), -1, "index_aligned")
    with pytest.raises(ValidationError):
        DatasetManifest("d", (("a", "p"),), 0, "place_grouped")
    with pytest.raises(ValidationError):
        DatasetManifest(
            "d", (("a", "p"),), 0, "index_aligned",
            place_groups={"p0": ("f0",)},
        )
    bad = tmp_path / "broken.json"
    bad.write_text("{not json")
    with pytest.raises(ValidationError):
        load_manifest(bad)


def test_align_sets_orders_by_manifest(tmp_path):
    a = make_set([[1.0, 0.0]], condition_id="ref01")
    b = make_set([[0.0, 1.0]], condition_id="query")
    manifest = DatasetManifest(
        "demo", (("ref01", "r.hops"), ("query", "q.hops")), 0, "index_aligned"
    )
    ordered = align_sets(manifest, [b, a])
    assert [s.condition_id for s in ordered] == ["ref01", "query"]
    with pytest.raises(ConfigError):
        align_sets(manifest, [a])


def test_align_sets_rejects_mismatches():
    manifest = DatasetManifest(
        "demo", (("a", "a.hops"), ("b", "b.hops")), 0, "index_aligned"
    )
    base = make_set([[1.0, 0.0]], condition_id="a")
    with pytest.raises(DimensionError):
        align_sets(manifest, [base, make_set([[1.0, 0.0, 0.0]], condition_id="b")])
    with pytest.raises(AlignmentError):
        align_sets(
            manifest,
            [base, make_set([[1.0, 0.0]], condition_id="b", frame_ids=["zz"])],
        )


def test_load_condition_sets_normalizes(tmp_path):
    save_set(make_set([[3.0, 4.0]], condition_id="ref01"), tmp_path / "ref01.hops")
    save_set(make_set([[6.0, 8.0]], condition_id="query"), tmp_path / "query.hops")
    manifest = load_manifest(manifest_doc(tmp_path))
    sets = load_condition_sets(manifest)
    for dset in sets:
        np.testing.assert_allclose(
            np.linalg.norm(dset.data, axis=1), 1.0, atol=1e-6
        )
    raw = load_condition_sets(manifest, normalize=False)
    assert raw[0].data[0, 0] == 3.0
