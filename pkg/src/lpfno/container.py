"""On-disk container shared by datasets and checkpoints.

A container is a directory holding one JSON header plus one raw blob per
array.  Blobs are row-major little-endian floats; complex arrays are stored
as interleaved (re, im) float pairs and flagged in the header.  The header
records shape, dtype and byte count of every blob so truncation is caught
on load.
"""
from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1


class ContainerError(ValueError):
    """Malformed, truncated or incompatible container."""


def _float_code(arr: np.ndarray) -> str:
    base = arr.real.dtype if np.iscomplexobj(arr) else arr.dtype
    if base == np.float64:
        return "<f8"
    if base == np.float32:
        return "<f4"
    if np.issubdtype(base, np.integer):
        return "<i8"
    raise ContainerError(f"unsupported array dtype {arr.dtype}")


def write_container(path, header: dict, arrays: dict, header_name: str) -> Path:
    path = Path(path)
    if not path.parent.exists():
        raise FileNotFoundError(f"parent directory does not exist: {path.parent}")
    path.mkdir(exist_ok=True)
    table = {}
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        code = _float_code(arr)
        is_complex = bool(np.iscomplexobj(arr))
        raw = np.ascontiguousarray(arr)
        if is_complex:
            raw = raw.view(raw.real.dtype)
        raw = raw.astype(code, copy=False)
        fname = f"{name}.bin"
        with open(path / fname, "wb") as fh:
            fh.write(raw.tobytes(order="C"))
        table[name] = {
            "file": fname,
            "shape": list(arr.shape),
            "dtype": code,
            "complex": is_complex,
            "nbytes": int(raw.nbytes),
        }
    doc = dict(header)
    doc["format_version"] = FORMAT_VERSION
    doc["arrays"] = table
    tmp = path / (header_name + ".tmp")
    with open(tmp, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path / header_name)
    return path


def read_container(path, header_name: str):
    path = Path(path)
    hpath = path / header_name
    if not hpath.exists():
        raise FileNotFoundError(f"no {header_name} in {path}")
    with open(hpath) as fh:
        doc = json.load(fh)
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ContainerError(
            f"unsupported format version {version!r} in {hpath} (this build reads {FORMAT_VERSION})"
        )
    arrays = {}
    for name, meta in doc.get("arrays", {}).items():
        blob = path / meta["file"]
        if not blob.exists():
            raise ContainerError(f"missing blob {blob}")
        data = blob.read_bytes()
        shape = tuple(meta["shape"])
        dt = np.dtype(meta["dtype"])
        count = int(np.prod(shape, dtype=np.int64)) * (2 if meta.get("complex") else 1)
        expected = count * dt.itemsize
        if len(data) != expected:
            raise ContainerError(
                f"blob {meta['file']}: expected {expected} bytes, found {len(data)}"
            )
        arr = np.frombuffer(data, dtype=dt).astype(dt.newbyteorder("="))
        if meta.get("complex"):
            arr = arr.view(np.complex128 if dt.itemsize == 8 else np.complex64)
        arrays[name] = arr.reshape(shape)
    return doc, arrays
