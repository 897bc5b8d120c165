"""Model checkpoints with a human-readable sidecar document."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import yaml

from ..autonet import load_checkpoint, save_checkpoint
from ..errors import CheckpointMismatch
from .model import ModelParams, SystemDims


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.yaml")


def save_model(path, params: ModelParams, metadata: dict | None = None) -> str:
    desc = params.describe()
    arch = save_checkpoint(path, params.named_arrays(), desc, metadata)
    doc = {**desc, "arch_hash": arch, **(metadata or {})}
    sidecar_path(path).write_text(yaml.safe_dump(_plain(doc), sort_keys=True))
    return arch


def load_model(path, expect: ModelParams | None = None) -> tuple:
    """Load a checkpoint; returns ``(params, metadata)``.

    When ``expect`` is given its architecture hash must match the file.
    """
    header, arrays = load_checkpoint(path, None if expect is None else expect.arch_hash)
    d = header["dims"]
    dims = SystemDims(**{**d["dims"], "ris_elements": tuple(d["dims"]["ris_elements"])})
    w = d["widths"]
    params = ModelParams.init(dims, np.random.default_rng(0), d["tx_power"],
                              w["encoder"], w["ris"], w["decoder"], d.get("ris_input", "pilot"))
    if params.arch_hash != header["arch_hash"]:
        raise CheckpointMismatch("stored dimensions do not reproduce the stored architecture")
    params.load_arrays(arrays)
    return params, header["metadata"]


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj
