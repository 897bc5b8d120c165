"""Experiment configuration: YAML loading, validation with line diagnostics, hashing."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from ..errors import ConfigError

MODES = ("train", "attack", "defend", "evaluate", "analytic")

# section -> key -> (type check, default)
_NUM = (int, float)
SCHEMA = {
    "run": {
        "mode": (str, "evaluate"), "seed": (int, 1), "out_dir": (str, "results"), "threads": (int, 1),
        "name": ((str, type(None)), None),
    },
    "system": {
        "modulation": (int, 4), "block_len": (int, 20), "k_e": (int, 4), "k_d": (int, 4),
        "k_a": (int, 4), "k_s": (int, 1), "ris": (list, [1]), "ris_shape": (list, [4, 2]),
        "tx_power_dbm": (_NUM, 30.0), "ris_input": (str, "pilot"),
    },
    "network": {
        "encoder_hidden": (list, [256, 256]), "ris_hidden": (list, [512, 512]),
        "decoder_hidden": (list, [512, 512]),
    },
    "channel": {
        "carrier_hz": (_NUM, 2.6e9), "d1": (_NUM, 200.0), "d2": (_NUM, 400.0), "d3": (_NUM, 3.0),
        "rician": (_NUM, 4.0), "rician_adv": (_NUM, 0.8), "scatterers": (int, 5),
        "scatterers_adv": ((int, type(None)), None), "spread": (_NUM, float(np.pi / 6)),
        "velocity": (_NUM, 0.0), "symbol_interval": (_NUM, 1e-4),
    },
    "data": {"blocks": (int, 1000), "seed": ((int, type(None)), None)},
    "train": {
        "epochs": (int, 20), "batch_blocks": (int, 16), "lr": (_NUM, 1e-3), "lr_decay": (_NUM, 5.0),
        "lr_every": (int, 5), "snr_low": (_NUM, -20.0), "snr_high": (_NUM, 0.0), "loss": (str, "bce"),
        "val_snr": (_NUM, -10.0),
    },
    "attack": {
        "psr_db": (list, [-8.0, -4.0, 0.0, 4.0]), "iterations": (int, 1000), "snr_db": (_NUM, -7.0),
        "p_max": ((float, int, type(None)), None), "eps_acc": ((float, int, type(None)), None),
    },
    "defense": {
        "source": (str, "fixed"), "psr_db": (_NUM, 0.0), "clean_fraction": (_NUM, 0.9),
        "injection": (str, "adversary"), "regen_every": (int, 5),
    },
    "evaluate": {
        "snr_grid": (list, [-14.0, -12.0, -10.0, -8.0, -6.0]), "blocks": (int, 1000),
        "max_errors": ((int, type(None)), 200), "noise_dbm": ((float, int, type(None)), None),
    },
    "analytic": {
        "cascade": ((list, type(None)), None), "k_s": (int, 2), "modulation": (int, 4),
        "power": (_NUM, 1.0), "mc_symbols": (int, 0),
    },
}


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def _line_map(text: str) -> dict:
    """Map dotted key paths to 1-based source lines using the YAML node tree."""
    lines = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                path = f"{prefix}.{k.value}" if prefix else str(k.value)
                lines[path] = k.start_mark.line + 1
                walk(v, path)

    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return lines
    if root is not None:
        walk(root, "")
    return lines


@dataclass
class ExperimentConfig:
    """Validated configuration: nested dict with every section filled in."""

    data: dict
    source: str = "<memory>"
    lines: dict = None

    def __getitem__(self, section):
        return self.data[section]

    @property
    def mode(self) -> str:
        return self.data["run"]["mode"]

    @property
    def name(self) -> str:
        return self.data["run"]["name"] or Path(self.source).stem

    def canonical(self) -> str:
        """Sorted-key JSON of everything that affects results."""
        d = copy.deepcopy(self.data)
        for k in ("mode", "out_dir", "threads", "name"):
            d["run"].pop(k, None)
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def with_overrides(self, **kw) -> "ExperimentConfig":
        d = copy.deepcopy(self.data)
        if kw.get("seed") is not None:
            d["run"]["seed"] = int(kw["seed"])
        if kw.get("snr_grid") is not None:
            d["evaluate"]["snr_grid"] = [float(x) for x in kw["snr_grid"]]
        if kw.get("psr") is not None:
            d["attack"]["psr_db"] = [float(x) for x in kw["psr"]]
        if kw.get("mode") is not None:
            d["run"]["mode"] = kw["mode"]
        if kw.get("out_dir") is not None:
            d["run"]["out_dir"] = str(kw["out_dir"])
        if kw.get("threads") is not None:
            d["run"]["threads"] = int(kw["threads"])
        return validate(d, self.source, self.lines)


def _err(msg, path, lines):
    raise ConfigError(msg, field=path, line=(lines or {}).get(path))


def validate(raw, source: str = "<memory>", lines: dict | None = None) -> ExperimentConfig:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a mapping", line=1)
    out = {}
    for section, value in raw.items():
        if section not in SCHEMA:
            _err(f"unknown section '{section}'", section, lines)
        if not isinstance(value, dict):
            _err(f"section '{section}' must be a mapping", section, lines)
    for section, keys in SCHEMA.items():
        given = raw.get(section, {}) or {}
        sec = {}
        for key, value in given.items():
            path = f"{section}.{key}"
            if key not in keys:
                _err(f"unknown key '{key}'", path, lines)
            types = keys[key][0]
            if types is _NUM and isinstance(value, str):
                # YAML 1.1 reads exponents without a sign ("2.6e9") as strings
                try:
                    value = float(value)
                except ValueError:
                    pass
            if isinstance(value, bool) or not isinstance(value, types):
                _err(f"wrong type {type(value).__name__}", path, lines)
            sec[key] = float(value) if types is _NUM else value
        for key, (_, default) in keys.items():
            sec.setdefault(key, copy.deepcopy(default))
        out[section] = sec
    _check(out, lines)
    return ExperimentConfig(out, source, lines or {})


def _check(c, lines):
    if c["run"]["mode"] not in MODES:
        _err(f"mode must be one of {MODES}", "run.mode", lines)
    if c["run"]["threads"] < 1:
        _err("threads must be >= 1", "run.threads", lines)
    s = c["system"]
    m = s["modulation"]
    if m < 2 or m & (m - 1):
        _err("modulation order must be a power of 2", "system.modulation", lines)
    for k in ("block_len", "k_e", "k_d", "k_a", "k_s"):
        if s[k] < 1:
            _err("must be >= 1", f"system.{k}", lines)
    ris = s["ris"]
    if not ris or any(not isinstance(r, int) or r not in (1, 2, 3, 4) for r in ris) or len(set(ris)) != len(ris):
        _err("RIS list must hold distinct positions from 1..4", "system.ris", lines)
    if len(s["ris_shape"]) != 2 or any(not isinstance(v, int) or v < 1 for v in s["ris_shape"]):
        _err("ris_shape must be [horizontal, vertical] positive integers", "system.ris_shape", lines)
    if s["ris_input"] not in ("pilot", "symbol"):
        _err("ris_input must be 'pilot' or 'symbol'", "system.ris_input", lines)
    ch = c["channel"]
    for k in ("scatterers", "scatterers_adv"):
        v = ch[k]
        if v is not None and (v < 1 or v % 2 == 0):
            _err("scatterer count must be odd and >= 1", f"channel.{k}", lines)
    if not (ch["d1"] > 0 and ch["d2"] > ch["d1"] and ch["d3"] >= 0):
        _err("need d1 > 0, d2 > d1, d3 >= 0", "channel.d2", lines)
    if ch["velocity"] < 0 or ch["symbol_interval"] <= 0:
        _err("velocity must be >= 0 and symbol_interval > 0", "channel.velocity", lines)
    t = c["train"]
    if t["epochs"] < 1 or t["batch_blocks"] < 1:
        _err("epochs and batch_blocks must be >= 1", "train.epochs", lines)
    if t["snr_high"] < t["snr_low"]:
        _err("snr_high must be >= snr_low", "train.snr_high", lines)
    if t["loss"] not in ("bce", "ce"):
        _err("loss must be 'bce' or 'ce'", "train.loss", lines)
    if c["data"]["blocks"] < 1:
        _err("dataset needs at least one block", "data.blocks", lines)
    grid = c["evaluate"]["snr_grid"]
    if not grid or any(isinstance(x, bool) or not isinstance(x, _NUM) for x in grid):
        _err("SNR grid must be a non-empty list of numbers", "evaluate.snr_grid", lines)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        _err("SNR grid must be strictly increasing", "evaluate.snr_grid", lines)
    c["evaluate"]["snr_grid"] = [float(x) for x in grid]
    psr = c["attack"]["psr_db"]
    if not psr or any(isinstance(x, bool) or not isinstance(x, _NUM) for x in psr):
        _err("PSR list must be a non-empty list of numbers", "attack.psr_db", lines)
    c["attack"]["psr_db"] = [float(x) for x in psr]
    if c["attack"]["iterations"] < 0:
        _err("iterations must be >= 0", "attack.iterations", lines)
    d = c["defense"]
    if d["source"] not in ("fixed", "regenerate"):
        _err("source must be 'fixed' or 'regenerate'", "defense.source", lines)
    if d["injection"] not in ("adversary", "legitimate"):
        _err("injection must be 'adversary' or 'legitimate'", "defense.injection", lines)
    if not 0.0 <= d["clean_fraction"] < 1.0:
        _err("clean_fraction must lie in [0, 1)", "defense.clean_fraction", lines)
    a = c["analytic"]
    if a["cascade"] is not None:
        try:
            arr = np.array([[complex(str(v).replace(" ", "")) for v in row] for row in a["cascade"]])
        except (TypeError, ValueError):
            _err("cascade must be a matrix of numbers or complex strings like '1+2j'",
                 "analytic.cascade", lines)
        if arr.ndim != 2:
            _err("cascade must be a 2-D matrix", "analytic.cascade", lines)


def parse_config(text: str, source: str = "<memory>") -> ExperimentConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}",
                          line=None if mark is None else mark.line + 1) from exc
    return validate(raw, source, _line_map(text))


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(), str(path))


def bundled_config(name: str) -> Path:
    """Path of a configuration shipped with the package (``desk`` or ``full``)."""
    ref = resources.files("risae") / "configs" / f"{name}.yaml"
    return Path(str(ref))


def cascade_matrix(cfg: ExperimentConfig) -> np.ndarray:
    a = cfg["analytic"]
    if a["cascade"] is None:
        k = cfg["system"]
        return np.eye(k["k_d"], k["k_e"], dtype=complex)
    return np.array([[complex(str(v).replace(" ", "")) for v in row] for row in a["cascade"]])
