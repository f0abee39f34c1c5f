import json

import numpy as np
import pytest

from lpfno.container import FORMAT_VERSION, ContainerError, read_container, write_container


def test_round_trip_mixed_dtypes(tmp_path, rng):
    arrays = {
        "a": rng.standard_normal((3, 4)),
        "b": rng.standard_normal(5).astype(np.float32),
        "c": (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))).astype(np.complex64),
        "d": rng.standard_normal(3) + 1j * rng.standard_normal(3),
        "i": np.arange(4),
    }
    write_container(tmp_path / "c", {"kind": "x", "note": [1, 2]}, arrays, "h.json")
    doc, back = read_container(tmp_path / "c", "h.json")
    assert doc["note"] == [1, 2] and doc["format_version"] == FORMAT_VERSION
    for k, v in arrays.items():
        assert back[k].dtype == v.dtype
        assert np.array_equal(back[k], v)
    assert doc["arrays"]["c"]["complex"] is True


def test_blobs_are_little_endian_interleaved(tmp_path):
    z = np.array([1.0 + 2.0j])
    write_container(tmp_path / "c", {}, {"z": z}, "h.json")
    raw = (tmp_path / "c" / "z.bin").read_bytes()
    assert np.array_equal(np.frombuffer(raw, "<f8"), [1.0, 2.0])


def test_version_mismatch(tmp_path):
    write_container(tmp_path / "c", {}, {"a": np.ones(2)}, "h.json")
    doc = json.loads((tmp_path / "c" / "h.json").read_text())
    doc["format_version"] = 99
    (tmp_path / "c" / "h.json").write_text(json.dumps(doc))
    with pytest.raises(ContainerError, match="99"):
        read_container(tmp_path / "c", "h.json")


def test_missing_blob_and_parent(tmp_path):
    write_container(tmp_path / "c", {}, {"a": np.ones(2)}, "h.json")
    (tmp_path / "c" / "a.bin").unlink()
    with pytest.raises(ContainerError, match="missing blob"):
        read_container(tmp_path / "c", "h.json")
    with pytest.raises(FileNotFoundError, match="nope"):
        write_container(tmp_path / "nope" / "c", {}, {}, "h.json")
    with pytest.raises(FileNotFoundError):
        read_container(tmp_path / "empty", "h.json")
