"""Versioned binary parameter checkpoints.

Layout::

    b"RISAECKP"                 8-byte magic
    uint32 LE                   format version
    uint64 LE                   header length in bytes
    header                      UTF-8 JSON: dims, layer list, arch hash, metadata
    float64 LE blocks           one per layer entry, C order, in header order
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from ..errors import CheckpointMismatch

MAGIC = b"RISAECKP"
VERSION = 1


def architecture_hash(layers) -> str:
    """Hash of the ordered ``(name, shape)`` list; independent of parameter values."""
    desc = [[name, list(np.shape(arr))] for name, arr in layers]
    return hashlib.sha256(json.dumps(desc, separators=(",", ":")).encode()).hexdigest()


def save_checkpoint(path, layers, dims: dict, metadata: dict | None = None) -> str:
    """Write ``layers`` (ordered ``(name, array)`` pairs); returns the architecture hash."""
    arch = architecture_hash(layers)
    header = {
        "dims": dims,
        "layers": [{"name": n, "shape": list(np.shape(a))} for n, a in layers],
        "arch_hash": arch,
        "metadata": metadata or {},
    }
    blob = json.dumps(header, sort_keys=True).encode()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQ", VERSION, len(blob)))
        fh.write(blob)
        for _, arr in layers:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return arch


def load_checkpoint(path, expect_hash: str | None = None):
    """Read a checkpoint; returns ``(header, {name: array})``.

    Raises CheckpointMismatch if the file is missing, malformed, or its
    architecture hash differs from ``expect_hash``.
    """
    path = Path(path)
    if not path.is_file():
        raise CheckpointMismatch(f"checkpoint not found: {path}")
    data = path.read_bytes()
    if data[:8] != MAGIC:
        raise CheckpointMismatch(f"{path} is not a checkpoint file")
    start = 8 + struct.calcsize("<IQ")
    if len(data) < start:
        raise CheckpointMismatch(f"{path} is truncated")
    version, hlen = struct.unpack_from("<IQ", data, 8)
    if version != VERSION:
        raise CheckpointMismatch(f"unsupported checkpoint version {version}")
    if start + hlen > len(data):
        raise CheckpointMismatch(f"{path} is truncated")
    try:
        header = json.loads(data[start:start + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointMismatch(f"{path}: unreadable header") from exc
    offset = start + hlen
    arrays = {}
    for entry in header["layers"]:
        count = int(np.prod(entry["shape"])) if entry["shape"] else 1
        end = offset + 8 * count
        if end > len(data):
            raise CheckpointMismatch(f"{path} is truncated")
        arrays[entry["name"]] = np.frombuffer(data[offset:end], dtype="<f8").reshape(entry["shape"]).copy()
        offset = end
    stored = architecture_hash([(e["name"], np.empty(e["shape"])) for e in header["layers"]])
    if stored != header["arch_hash"]:
        raise CheckpointMismatch(f"{path}: layer list does not match its recorded hash")
    if expect_hash is not None and expect_hash != header["arch_hash"]:
        raise CheckpointMismatch(
            f"architecture hash {header['arch_hash'][:12]} does not match expected {expect_hash[:12]}")
    return header, arrays
