"""Adversarial training against universal perturbations and robustness comparison."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field

import numpy as np

from .attack import AttackConfig, Perturbation, mrmaef
from .channel import ChannelModel
from .evaluation.montecarlo import monte_carlo_ser, wilson_interval
from .numerics import RngStream
from .system import Dataset, ModelParams, TrainConfig, TrainHistory, train

log = logging.getLogger(__name__)

INJECTION_NOTE = ("training injection '{conv}'; the attack model adds the perturbation through the "
                  "adversary cascade C while the adversarial-training update is written with the "
                  "legitimate cascade O")


@dataclass(frozen=True)
class DefenseConfig:
    """Adversarial-training settings.

    ``source="fixed"`` injects the supplied perturbation in every epoch;
    ``source="regenerate"`` re-synthesizes it against the current model every
    ``regen_every`` epochs with ``attack``. Each training block carries the
    perturbation with probability ``1 - clean_fraction`` and is clean
    otherwise, so the objective averages over both conditions;
    ``clean_fraction=0`` perturbs every block.
    """

    train: TrainConfig = field(default_factory=TrainConfig)
    source: str = "fixed"
    regen_every: int = 5
    attack: AttackConfig | None = None
    injection: str = "adversary"
    clean_fraction: float = 0.9

    def __post_init__(self):
        if not 0.0 <= self.clean_fraction < 1.0:
            raise ValueError("clean_fraction must lie in [0, 1)")
        if self.source not in ("fixed", "regenerate"):
            raise ValueError(f"source must be 'fixed' or 'regenerate', got {self.source!r}")
        if self.injection not in ("adversary", "legitimate"):
            raise ValueError(f"unknown injection convention {self.injection!r}")
        if self.source == "regenerate" and (self.attack is None or self.regen_every < 1):
            raise ValueError("regenerate mode needs an attack config and regen_every >= 1")


def perturbation_hash(pert: Perturbation) -> str:
    return hashlib.sha256(np.ascontiguousarray(pert.u_e, dtype="<c16").tobytes()).hexdigest()


def atmrm_train(params: ModelParams, data: Dataset, pert: Perturbation, cfg: DefenseConfig,
                rng: RngStream):
    """Train a copy of ``params`` with ``pert`` added to every received block.

    Returns ``(hardened_params, history, metadata)``. With a zero
    perturbation this is exactly :func:`risae.system.train` on the same
    initial parameters and ``rng``.
    """
    if pert.power > pert.p_psr + 1e-9:
        raise ValueError("perturbation violates its power budget")
    model = params.copy()
    current = {"u": pert.u_e.copy(), "regens": 0}

    block_len = params.dims.block_len

    def perturbation_for(epoch, batch, blocks):
        if (cfg.source == "regenerate" and batch == 0 and epoch > 0
                and epoch % cfg.regen_every == 0):
            fresh = mrmaef(model, data, cfg.attack, rng.child(9, epoch))
            current["u"] = fresh.u_e
            current["regens"] += 1
            log.info("epoch %d: regenerated perturbation, power %.4g", epoch, fresh.power)
        if cfg.clean_fraction == 0.0:
            return current["u"]
        keep = rng.child(5, epoch, batch).gen.random(blocks) >= cfg.clean_fraction
        return np.repeat(keep, block_len)[:, None] * current["u"][None, :]

    hist: TrainHistory = train(model, data, cfg.train, rng, perturbation_for, cfg.injection)
    meta = {
        "uap_hash": perturbation_hash(pert),
        "psr_db": pert.psr_db,
        "injection": cfg.injection,
        "source": cfg.source,
        "clean_fraction": cfg.clean_fraction,
        "regenerations": current["regens"],
        "note": INJECTION_NOTE.format(conv=cfg.injection),
    }
    return model, hist, meta


@dataclass
class RobustnessRow:
    model: str
    condition: str
    snr_db: float
    errors: int
    symbols: int
    ci_low: float
    ci_high: float

    @property
    def ser(self) -> float:
        return self.errors / self.symbols if self.symbols else float("nan")


@dataclass
class RobustnessReport:
    rows: list
    curves: dict
    meta: dict

    def curve(self, model: str, condition: str):
        return self.curves[(model, condition)]


def robustness_report(defended: ModelParams, undefended: ModelParams, channel: ChannelModel,
                      attacks: dict, snr_grid, blocks: int, rng: RngStream,
                      fresh_data: Dataset | None = None, fresh_attack: AttackConfig | None = None,
                      max_errors: int | None = None) -> RobustnessReport:
    """Clean and attacked SER of both models on common Monte-Carlo draws.

    ``attacks`` maps a label to a Perturbation applied to both models. When
    ``fresh_attack`` (and ``fresh_data``) are given, a new perturbation is
    synthesized against each model separately and reported as ``"fresh"``.
    """
    if defended.dims != undefended.dims:
        raise ValueError("models must share dimensions")
    models = {"defended": defended, "undefended": undefended}
    curves, rows = {}, []
    for name, params in models.items():
        conds = {"clean": None, **{k: p.u_e for k, p in attacks.items()}}
        if fresh_attack is not None:
            if fresh_data is None:
                raise ValueError("a fresh attack needs data to draw training blocks from")
            conds["fresh"] = mrmaef(params, fresh_data, fresh_attack, rng.child(7)).u_e
        for cond, u in conds.items():
            c = monte_carlo_ser(params, channel, snr_grid, blocks, rng, perturbation=u,
                                max_errors=max_errors, label=f"{name}/{cond}")
            curves[(name, cond)] = c
            lo, hi = wilson_interval(c.errors, c.symbols)
            for i, snr in enumerate(c.snr_db):
                rows.append(RobustnessRow(name, cond, float(snr), int(c.errors[i]), int(c.symbols[i]),
                                          float(lo[i]), float(hi[i])))
    meta = {"attacks": {k: perturbation_hash(p) for k, p in attacks.items()},
            "fresh_attack": fresh_attack is not None}
    return RobustnessReport(rows, curves, meta)
