"""Joint training of encoder, RIS controllers and decoder."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..autonet import AdamState, Tape, adam_step, step_decay_lr
from ..errors import DivergedLoss
from ..numerics import RngStream
from .data import Dataset
from .model import ModelParams, end_to_end_forward

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings. ``batch_blocks`` counts blocks of ``L_B`` symbols."""

    epochs: int = 20
    batch_blocks: int = 16
    lr: float = 1e-3
    lr_decay: float = 5.0
    lr_every: int = 5
    snr_low: float = -20.0
    snr_high: float = 0.0
    loss: str = "bce"
    val_snr: float = -10.0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_blocks < 1:
            raise ValueError("epochs and batch_blocks must be >= 1")
        if self.snr_high < self.snr_low:
            raise ValueError("snr_high must be >= snr_low")
        if self.loss not in ("bce", "ce"):
            raise ValueError(f"loss must be 'bce' or 'ce', got {self.loss!r}")


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    val_ser: list = field(default_factory=list)
    lr: list = field(default_factory=list)
    seconds: float = 0.0

    def as_dict(self) -> dict:
        return {"train_loss": self.train_loss, "val_loss": self.val_loss,
                "val_ser": self.val_ser, "lr": self.lr, "seconds": self.seconds}


def noise_var_for_snr(snr_db: float) -> float:
    """Normalized noise variance at a receiver SNR in dB (unit mean received power)."""
    return 10.0 ** (-snr_db / 10.0)


def evaluate_split(params: ModelParams, data: Dataset, blocks, snr_db: float, rng: RngStream,
                   perturbation=None, injection: str = "adversary", chunk: int = 64,
                   loss: str = "bce"):
    """Mean loss, symbol errors and symbol count over ``blocks`` in eval mode."""
    blocks = np.asarray(blocks)
    total_loss, errors, symbols = 0.0, 0, 0
    for ci, start in enumerate(range(0, len(blocks), chunk)):
        sel = blocks[start:start + chunk]
        msg, real = data.batch(sel)
        res = end_to_end_forward(msg, real, noise_var_for_snr(snr_db), params, "eval",
                                 rng=rng.child(ci), perturbation=perturbation,
                                 injection=injection, loss=loss)
        total_loss += float(res.loss.value) * msg.size
        errors += res.errors
        symbols += msg.size
    return total_loss / max(symbols, 1), errors, symbols


def train(params: ModelParams, data: Dataset, cfg: TrainConfig, rng: RngStream,
          perturbation_for=None, injection: str = "adversary") -> TrainHistory:
    """Train ``params`` in place with Adam; returns per-epoch history.

    ``perturbation_for(epoch, batch, blocks)`` may return an emitter-side
    vector ``(K_a,)``, or per-row vectors ``(blocks * L_B, K_a)``, injected
    into the received signal of that batch (adversarial training). Validation
    is always clean.
    """
    state = AdamState(params.trainable(), lr=cfg.lr)
    hist = TrainHistory()
    t0 = time.perf_counter()
    for epoch in range(cfg.epochs):
        state.lr = step_decay_lr(epoch, cfg.lr, cfg.lr_decay, cfg.lr_every)
        order = rng.child(2, epoch).gen.permutation(data.train_idx)
        losses = []
        for bi, start in enumerate(range(0, len(order), cfg.batch_blocks)):
            sel = order[start:start + cfg.batch_blocks]
            msg, real = data.batch(sel)
            stream = rng.child(3, epoch, bi)
            pert = None if perturbation_for is None else perturbation_for(epoch, bi, len(sel))
            snr = stream.gen.uniform(cfg.snr_low, cfg.snr_high)
            tape = Tape()
            res = end_to_end_forward(msg, real, noise_var_for_snr(snr), params, "train",
                                     rng=stream, perturbation=pert, injection=injection,
                                     tape=tape, loss=cfg.loss)
            value = float(res.loss.value)
            if not np.isfinite(value):
                raise DivergedLoss(f"non-finite loss at epoch {epoch}, batch {bi}")
            adam_step(state, tape.backward(res.loss))
            losses.append(value)
        hist.train_loss.append(float(np.mean(losses)))
        hist.lr.append(state.lr)
        if len(data.test_idx):
            vl, err, sym = evaluate_split(params, data, data.test_idx, cfg.val_snr,
                                          rng.child(4, epoch), loss=cfg.loss)
            hist.val_loss.append(vl)
            hist.val_ser.append(err / sym)
        log.info("epoch %d lr %.2e train %.5f val %s", epoch, state.lr, hist.train_loss[-1],
                 hist.val_loss[-1] if hist.val_loss else "-")
    hist.seconds = time.perf_counter() - t0
    return hist
