"""Experiment dispatch: one function per mode, sharing artifacts through a run directory.

Layout under ``<out_dir>/<run-id>/`` (run-id = config name + config hash):

    model.ckpt, defended.ckpt, uap_psr<p>.json   shared artifacts
    <mode>/curves.csv, <mode>/meta.txt, <mode>/plotdata/*.dat
"""

from __future__ import annotations

import logging
import subprocess
from pathlib import Path

import numpy as np

from .. import __version__
from ..attack import AttackConfig, Perturbation, mrmaef
from ..channel import MobilityConfig, Topology
from ..defense import DefenseConfig, atmrm_train, perturbation_hash, robustness_report
from ..numerics import RngStream
from ..system import (ModelParams, SystemDims, TrainConfig, build_dataset, load_model, make_channel,
                      save_model, train)
from .analytic import AnalyticLinkModel, analytic_ser, ml_detection_ser
from .config import ExperimentConfig, cascade_matrix, dbm_to_watts
from .montecarlo import SerCurve, monte_carlo_ser
from .results import emit_results

log = logging.getLogger(__name__)

# sub-stream ids under the run seed
S_INIT, S_DATA, S_TRAIN, S_ATTACK, S_EVAL, S_ANALYTIC = 10, 11, 12, 13, 14, 15


def revision() -> str:
    try:
        out = subprocess.run(["git", "rev-parse", "--short", "HEAD"], capture_output=True, text=True,
                             cwd=Path(__file__).parent, timeout=5)
    except (OSError, subprocess.SubprocessError):
        return "unversioned"
    return out.stdout.strip() if out.returncode == 0 and out.stdout.strip() else "unversioned"


def run_dir(cfg: ExperimentConfig) -> Path:
    return Path(cfg["run"]["out_dir"]) / f"{cfg.name}-{cfg.hash()[:12]}"


def psr_tag(psr: float) -> str:
    return f"psr{psr:+g}"


def _psr_stream(root: RngStream, psr: float) -> RngStream:
    return root.child(S_ATTACK, int(round((psr + 1000.0) * 1000)))


class Experiment:
    """Objects derived from a validated configuration."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        s, ch, net = cfg["system"], cfg["channel"], cfg["network"]
        n = s["ris_shape"][0] * s["ris_shape"][1]
        self.dims = SystemDims(s["modulation"], s["block_len"], s["k_e"], s["k_d"], s["k_a"], s["k_s"],
                               tuple(n for _ in s["ris"]))
        self.tx_power = dbm_to_watts(s["tx_power_dbm"])
        mob = None
        if ch["velocity"] > 0:
            mob = MobilityConfig(ch["velocity"], ch["carrier_hz"], symbol_interval=ch["symbol_interval"])
        self.channel = make_channel(
            self.dims, s["ris"], tuple(s["ris_shape"]), ch["carrier_hz"],
            Topology(ch["d1"], ch["d2"], ch["d3"], tuple(s["ris"])), ch["rician"], ch["rician_adv"],
            ch["scatterers"], ch["scatterers_adv"], ch["spread"], self.tx_power, True, mob)
        self.root = RngStream(cfg["run"]["seed"])
        self.dir = run_dir(cfg)
        t = cfg["train"]
        self.train_cfg = TrainConfig(t["epochs"], t["batch_blocks"], t["lr"], t["lr_decay"], t["lr_every"],
                                     t["snr_low"], t["snr_high"], t["loss"], t["val_snr"])
        self._data = None

    @property
    def data(self):
        if self._data is None:
            seed = self.cfg["data"]["seed"]
            rng = self.root.child(S_DATA) if seed is None else RngStream(seed, S_DATA)
            self._data = build_dataset(self.dims, self.channel, self.cfg["data"]["blocks"], rng)
        return self._data

    def fresh_params(self) -> ModelParams:
        net = self.cfg["network"]
        return ModelParams.init(self.dims, self.root.child(S_INIT).gen, self.tx_power,
                                tuple(net["encoder_hidden"]), tuple(net["ris_hidden"]),
                                tuple(net["decoder_hidden"]), self.cfg["system"]["ris_input"])

    def attack_cfg(self, psr: float) -> AttackConfig:
        a = self.cfg["attack"]
        return AttackConfig(psr, a["iterations"], a["snr_db"], a["p_max"], a["eps_acc"],
                            self.cfg["defense"]["injection"])

    def load(self, name: str) -> ModelParams:
        # the expected architecture comes from the config; conflicts raise CheckpointMismatch
        params, _ = load_model(self.dir / name, expect=self.fresh_params())
        return params

    def uap_path(self, psr: float) -> Path:
        return self.dir / f"uap_{psr_tag(psr)}.json"

    def uap(self, psr: float, params: ModelParams) -> Perturbation:
        """Stored perturbation for ``psr``, synthesized (deterministically) if absent."""
        path = self.uap_path(psr)
        if path.is_file():
            return Perturbation.load(path)
        pert = mrmaef(params, self.data, self.attack_cfg(psr), _psr_stream(self.root, psr),
                      self.cfg["train"]["loss"])
        self.dir.mkdir(parents=True, exist_ok=True)
        pert.save(path)
        return pert

    def mc(self, params, label, perturbation=None) -> SerCurve:
        e = self.cfg["evaluate"]
        return monte_carlo_ser(params, self.channel, e["snr_grid"], e["blocks"], self.root.child(S_EVAL),
                               perturbation=perturbation, injection=self.cfg["defense"]["injection"],
                               max_errors=e["max_errors"], label=label)

    def base_meta(self) -> dict:
        meta = {"seed": self.cfg["run"]["seed"], "revision": revision(), "version": __version__,
                "mode": self.cfg.mode, "run_id": self.dir.name}
        noise = self.cfg["evaluate"]["noise_dbm"]
        if noise is not None:
            meta["snr_at_noise_dbm"] = repr(self.channel.snr_db_for_noise(dbm_to_watts(noise)))
        return meta


def run_train(ex: Experiment):
    params = ex.fresh_params()
    hist = train(params, ex.data, ex.train_cfg, ex.root.child(S_TRAIN))
    ex.dir.mkdir(parents=True, exist_ok=True)
    save_model(ex.dir / "model.ckpt", params, {"config_hash": ex.cfg.hash(), "seed": ex.cfg["run"]["seed"],
                                               "train_loss": hist.train_loss, "val_ser": hist.val_ser})
    meta = {"final_train_loss": repr(hist.train_loss[-1]),
            "final_val_ser": repr(hist.val_ser[-1]) if hist.val_ser else "n/a"}
    return [ex.mc(params, "clean")], meta


def run_attack(ex: Experiment):
    params = ex.load("model.ckpt")
    curves = [ex.mc(params, "clean")]
    meta = {}
    for psr in ex.cfg["attack"]["psr_db"]:
        pert = ex.uap(psr, params)
        curves.append(ex.mc(params, f"attacked/{psr_tag(psr)}", pert.u_e))
        meta[f"uap_{psr_tag(psr)}"] = perturbation_hash(pert)[:16]
        meta[f"flip_rate_{psr_tag(psr)}"] = repr(pert.flip_rate[-1]) if pert.flip_rate else "n/a"
    return curves, meta


def run_defend(ex: Experiment):
    und = ex.load("model.ckpt")
    d = ex.cfg["defense"]
    pert = ex.uap(d["psr_db"], und)
    attack = ex.attack_cfg(d["psr_db"]) if d["source"] == "regenerate" else None
    dcfg = DefenseConfig(ex.train_cfg, d["source"], d["regen_every"], attack, d["injection"],
                         d["clean_fraction"])
    defended, hist, dmeta = atmrm_train(ex.fresh_params(), ex.data, pert, dcfg, ex.root.child(S_TRAIN))
    save_model(ex.dir / "defended.ckpt", defended, {"config_hash": ex.cfg.hash(), **dmeta})
    e = ex.cfg["evaluate"]
    rep = robustness_report(defended, und, ex.channel, {psr_tag(d["psr_db"]): pert}, e["snr_grid"],
                            e["blocks"], ex.root.child(S_EVAL), max_errors=e["max_errors"])
    curves = [rep.curves[k] for k in sorted(rep.curves)]
    meta = {"uap": dmeta["uap_hash"][:16], "defense_source": d["source"],
            "clean_fraction": repr(d["clean_fraction"]), "injection_note": dmeta["note"]}
    return curves, meta


def run_evaluate(ex: Experiment):
    models = {"undefended": ex.load("model.ckpt")}
    if (ex.dir / "defended.ckpt").is_file():
        models["defended"] = ex.load("defended.ckpt")
    perts = {psr: Perturbation.load(ex.uap_path(psr)) for psr in ex.cfg["attack"]["psr_db"]
             if ex.uap_path(psr).is_file()}
    curves = []
    for name, params in models.items():
        curves.append(ex.mc(params, f"{name}/clean"))
        for psr, pert in perts.items():
            curves.append(ex.mc(params, f"{name}/{psr_tag(psr)}", pert.u_e))
    return curves, {"models": ",".join(models), "perturbations": ",".join(psr_tag(p) for p in perts)}


def run_analytic(ex: Experiment):
    a = ex.cfg["analytic"]
    model = AnalyticLinkModel.default(cascade_matrix(ex.cfg), a["modulation"], a["k_s"])
    grid = np.asarray(ex.cfg["evaluate"]["snr_grid"])
    noise = 10.0 ** (-grid / 10.0)
    bound = [analytic_ser(model, nv, a["power"]) for nv in noise]
    curves = [SerCurve.computed("union-bound", grid, bound)]
    if a["mc_symbols"] > 0:
        rng = ex.root.child(S_ANALYTIC)
        counts = [ml_detection_ser(model, nv, a["power"], a["mc_symbols"], rng.child(i))
                  for i, nv in enumerate(noise)]
        curves.append(SerCurve("ml-detection", grid, [c[0] for c in counts], [c[1] for c in counts]))
    return curves, {"cascade_shape": "x".join(map(str, model.cascade.shape))}


DISPATCH = {"train": run_train, "attack": run_attack, "defend": run_defend,
            "evaluate": run_evaluate, "analytic": run_analytic}


def run_experiment(cfg: ExperimentConfig) -> Path:
    """Run the configured mode and write its results; returns the mode's output directory."""
    ex = Experiment(cfg)
    curves, meta = DISPATCH[cfg.mode](ex)
    out = ex.dir / cfg.mode
    emit_results(curves, out, cfg.hash(), {**ex.base_meta(), **meta})
    log.info("%s: wrote %d curves to %s", cfg.mode, len(curves), out)
    return out
