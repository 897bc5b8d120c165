"""Universal adversarial perturbations against the trained link.

The attacker emits one fixed vector ``u_e`` (``K_a`` complex entries) that
reaches the decoder through the adversary cascade ``C`` of every symbol.
:func:`mrmaef` builds ``u_e`` by repeatedly finding, for a block the model
still decodes correctly, the smallest receiver-side step that breaks it
(:func:`fgm_update`), pulling that step back to the emitter by least squares
(:func:`project_to_emitter`) and enforcing the power budget (:func:`psr_clamp`).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .autonet import Tape, Var, bce_loss, ce_loss
from .errors import ZeroGradient
from .numerics import RngStream, complex_gaussian_array, least_squares_solve
from .system import Dataset, ModelParams, decode, end_to_end_forward, noise_var_for_snr, one_hot
from .system.model import decoder_logits
from .autonet.layers import softmax

log = logging.getLogger(__name__)

PSR_TOL = 1e-9


def psr_budget(psr_db: float, tx_power: float = 1.0) -> float:
    """Emitter power budget ``p_PSR = P_tx * 10^(PSR/10)``."""
    return tx_power * 10.0 ** (psr_db / 10.0)


@dataclass
class Perturbation:
    """Emitter-side universal perturbation and its provenance."""

    u_e: np.ndarray
    psr_db: float
    p_psr: float
    iterations: int = 0
    seed: int = 0
    flip_rate: list = field(default_factory=list)

    def __post_init__(self):
        self.u_e = np.asarray(self.u_e, dtype=complex).reshape(-1)
        if self.power > self.p_psr + PSR_TOL:
            raise ValueError(f"perturbation power {self.power:.6g} exceeds budget {self.p_psr:.6g}")

    @property
    def power(self) -> float:
        return float(np.vdot(self.u_e, self.u_e).real)

    @classmethod
    def zero(cls, k_a: int, psr_db: float, tx_power: float = 1.0) -> "Perturbation":
        return cls(np.zeros(k_a, dtype=complex), psr_db, psr_budget(psr_db, tx_power))

    def to_dict(self) -> dict:
        return {
            "psr_db": self.psr_db, "p_psr": self.p_psr, "seed": self.seed,
            "iterations": self.iterations,
            "u_e": [[float(z.real), float(z.imag)] for z in self.u_e],
            "flip_rate": [float(f) for f in self.flip_rate],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Perturbation":
        u = np.array([complex(re, im) for re, im in d["u_e"]])
        return cls(u, d["psr_db"], d["p_psr"], d.get("iterations", 0), d.get("seed", 0),
                   list(d.get("flip_rate", [])))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path) -> "Perturbation":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class AttackConfig:
    """MRMAEF settings; ``p_max`` and ``eps_acc`` default to ``10 sqrt(p_PSR)`` and ``1e-4 sqrt(p_max)``."""

    psr_db: float = 0.0
    iterations: int = 1000
    snr_db: float = -10.0
    p_max: float | None = None
    eps_acc: float | None = None
    injection: str = "adversary"

    def budget(self, tx_power: float = 1.0) -> float:
        return psr_budget(self.psr_db, tx_power)

    def search_limits(self, tx_power: float = 1.0):
        p_max = 10.0 * np.sqrt(self.budget(tx_power)) if self.p_max is None else self.p_max
        if not p_max > 0:
            raise ValueError("p_max must be positive")
        eps_acc = 1e-4 * np.sqrt(p_max) if self.eps_acc is None else self.eps_acc
        if not eps_acc > 0:
            raise ValueError("eps_acc must be positive")
        return p_max, eps_acc


class BlockDecoder:
    """Decoder of one block with its cascades fixed, seen as a function of the received signal.

    ``received`` arrays have shape ``(..., L_B, K_d)``; leading axes are
    independent candidates evaluated in one pass.
    """

    def __init__(self, params: ModelParams, cascade: np.ndarray, labels: np.ndarray, loss: str = "bce"):
        self.params = params
        self.cascade = np.asarray(cascade)
        self.labels = np.asarray(labels)
        self.loss = loss
        self.classes = params.dims.modulation

    def _tiled(self, s):
        lead = s.shape[:-2]
        reps = int(np.prod(lead)) if lead else 1
        rows = s.reshape(-1, s.shape[-1])
        casc = np.broadcast_to(self.cascade, (reps,) + self.cascade.shape).reshape(-1, *self.cascade.shape[1:])
        return rows, casc, lead

    def predict(self, s) -> np.ndarray:
        s = np.asarray(s)
        rows, casc, lead = self._tiled(s)
        _, dec = decode(rows, casc, self.params, "eval")
        return dec.reshape(lead + (s.shape[-2],))

    def loss_and_grad(self, s, targets):
        """Loss of the decoder output against ``targets`` (per position) and its gradient w.r.t. ``s``."""
        s = np.asarray(s, dtype=complex)
        tape = Tape()
        sv = Var(s, requires_grad=True)
        logits = decoder_logits(sv, Var(self.cascade), self.params, "eval", tape)
        probs = softmax(logits, tape)
        fn = bce_loss if self.loss == "bce" else ce_loss
        lv = fn(probs, one_hot(targets, self.classes), tape)
        grads = tape.backward(lv)
        return float(lv.value), grads[sv]

    def target_loss_grad(self, s, target: int):
        return self.loss_and_grad(s, np.full(self.labels.shape, target))[1]


@dataclass
class FgmResult:
    perturbation: np.ndarray
    epsilon: float
    target: int
    flipped: bool


def fgm_update(s, decoder, labels, p_max: float, eps_acc: float) -> FgmResult:
    """Smallest normalized-gradient step toward some wrong class that breaks decoding.

    For every class ``k`` the step direction is the negative normalized
    gradient of the loss against the all-``k`` target; a bisection over
    ``[0, p_max]`` finds the smallest magnitude at which the decoded block no
    longer equals ``labels``. Returns the step with the smallest such
    magnitude. If no class flips within ``p_max`` the ``p_max`` step of the
    steepest class is returned with ``flipped=False``.
    """
    s = np.asarray(s)
    labels = np.asarray(labels)
    classes = decoder.classes
    dirs, norms = [], []
    for k in range(classes):
        g = decoder.target_loss_grad(s, k)
        norm = np.linalg.norm(g)
        norms.append(norm)
        if norm < 1e-30:
            dirs.append(None)
        else:
            dirs.append(-g / norm)
    live = [k for k in range(classes) if dirs[k] is not None]
    if not live:
        raise ZeroGradient("loss gradient vanishes for every target class")
    d = np.stack([dirs[k] for k in live])
    shape = (len(live),) + (1,) * s.ndim

    def broken(eps):
        dec = decoder.predict(s[None] + eps.reshape(shape) * d)
        return np.any(dec != labels[None], axis=tuple(range(1, dec.ndim)))

    hi = np.full(len(live), float(p_max))
    lo = np.zeros(len(live))
    ok = broken(hi)
    if not ok.any():
        best = int(np.argmax([norms[k] for k in live]))
        return FgmResult(p_max * d[best], float(p_max), live[best], False)
    while np.max(hi - lo) > eps_acc:
        mid = 0.5 * (lo + hi)
        b = broken(mid)
        hi = np.where(b, mid, hi)
        lo = np.where(b, lo, mid)
    eps = np.where(ok, hi, np.inf)
    best = int(np.argmin(eps))
    return FgmResult(eps[best] * d[best], float(eps[best]), live[best], True)


def stack_cascade(c) -> np.ndarray:
    """Per-symbol cascades ``(L, K_d, K_a)`` stacked into one ``(L*K_d, K_a)`` matrix."""
    c = np.asarray(c)
    return c.reshape(-1, c.shape[-1])


def project_to_emitter(u_rx, c) -> np.ndarray:
    """Least-squares emitter vector whose image through ``c`` best matches ``u_rx``."""
    c = np.asarray(c)
    if c.ndim == 3:
        c = stack_cascade(c)
    return least_squares_solve(c, np.asarray(u_rx).reshape(-1))


def psr_clamp(u_e, u_a, p_psr: float) -> np.ndarray:
    """Add ``u_a`` to ``u_e`` and rescale onto the budget sphere when it is exceeded."""
    total = np.asarray(u_e, dtype=complex) + np.asarray(u_a, dtype=complex)
    power = float(np.vdot(total, total).real)
    if power <= p_psr:
        return total
    return np.sqrt(p_psr) * total / np.sqrt(power)


def _attack_sample(params, data: Dataset, it: int, cfg: AttackConfig, rng: RngStream):
    stream = rng.child(it)
    b = data.train_idx[stream.gen.integers(len(data.train_idx))]
    msg = data.messages[[b]]
    real = data.channel.realize(stream.child(1), params.dims.block_len)
    res = end_to_end_forward(msg, real, noise_var_for_snr(cfg.snr_db), params, "eval", rng=stream.child(2))
    return msg[0], res


def mrmaef(params: ModelParams, data: Dataset, cfg: AttackConfig, rng: RngStream,
           loss: str = "bce") -> Perturbation:
    """Universal perturbation synthesis over ``cfg.iterations`` random training blocks.

    Each iteration uses a fresh channel draw. ``flip_rate`` records the
    running fraction of iterations whose block was already broken by the
    current ``u_e``.
    """
    p_psr = cfg.budget(params.tx_power)
    p_max, eps_acc = cfg.search_limits(params.tx_power)
    u_e = np.zeros(params.dims.k_a, dtype=complex)
    flips = 0
    rates = []
    for it in range(cfg.iterations):
        labels, res = _attack_sample(params, data, it, cfg, rng)
        inj = res.adv_cascade if cfg.injection == "adversary" else res.cascade
        r = res.received + np.einsum("npq,q->np", inj, u_e)
        dec = BlockDecoder(params, res.cascade, labels, loss)
        if np.array_equal(dec.predict(r), labels):
            try:
                step = fgm_update(r, dec, labels, p_max, eps_acc)
            except ZeroGradient:
                log.debug("iteration %d: zero gradient, skipped", it)
            else:
                if not step.flipped:
                    log.debug("iteration %d: no flip within p_max", it)
                u_a = project_to_emitter(step.perturbation, inj)
                u_e = psr_clamp(u_e, u_a, p_psr)
        else:
            flips += 1
        power = float(np.vdot(u_e, u_e).real)
        assert power <= p_psr + PSR_TOL, "perturbation budget violated"
        rates.append(flips / (it + 1))
    seed = rng.seed if isinstance(rng, RngStream) else 0
    return Perturbation(u_e, cfg.psr_db, p_psr, cfg.iterations, seed, rates)


@dataclass
class ProbeReport:
    """Per-sample first-order ratios and FGM-vs-random comparison."""

    ratios: np.ndarray
    fgm_wins: np.ndarray
    cap_ok: np.ndarray
    excluded: list
    epsilons: np.ndarray

    @property
    def win_fraction(self) -> float:
        return float(np.mean(self.fgm_wins)) if self.fgm_wins.size else float("nan")


def first_order_probe(params: ModelParams, samples, eps_rel=(1e-2, 1e-3, 1e-4), p_psr: float = 1.0,
                      n_random: int = 100, rng: RngStream | None = None, loss: str = "bce") -> ProbeReport:
    """First-order vulnerability check on ``samples`` of ``(received, cascade, labels)`` blocks.

    For each sample and each ``eps = eps_rel * ||s||`` the loss increase along
    the normalized gradient is divided by the first-order prediction
    ``eps * ||grad||``. At the smallest ``eps`` the gradient step is compared
    against ``n_random`` random unit directions, and the first-order term is
    checked against the budget cap ``sqrt(p_psr) * ||grad||``.
    """
    rng = rng or RngStream(0)
    ratios, wins, caps, excluded, epss = [], [], [], [], []
    for i, (s, casc, labels) in enumerate(samples):
        dec = BlockDecoder(params, casc, labels, loss)
        base, g = dec.loss_and_grad(s, labels)
        gn = np.linalg.norm(g)
        if gn < 1e-30:
            excluded.append((i, "zero gradient"))
            continue
        d = g / gn
        snorm = np.linalg.norm(s)
        eps = np.asarray(eps_rel) * snorm
        row = []
        for e in eps:
            inc = dec.loss_and_grad(s + e * d, labels)[0] - base
            row.append(inc / (e * gn))
        ratios.append(row)
        e0 = eps[-1]
        rand = complex_gaussian_array(rng.child(i), (n_random,) + np.shape(s))
        rand /= np.linalg.norm(rand.reshape(n_random, -1), axis=1).reshape((n_random,) + (1,) * np.ndim(s))
        fgm_inc = dec.loss_and_grad(s + e0 * d, labels)[0] - base
        best_rand = max(dec.loss_and_grad(s + e0 * r, labels)[0] - base for r in rand)
        wins.append(fgm_inc > best_rand)
        # any budget-feasible step moves the loss by at most sqrt(p_psr) * ||grad|| to first order
        steps = np.sqrt(p_psr) * np.concatenate([d[None], rand])
        first_order = np.real(np.sum(np.conj(g)[None] * steps, axis=tuple(range(1, steps.ndim))))
        caps.append(bool(np.max(first_order) <= np.sqrt(p_psr) * gn * (1 + 1e-12)))
        epss.append(eps)
    return ProbeReport(np.array(ratios), np.array(wins, dtype=bool), np.array(caps, dtype=bool),
                       excluded, np.array(epss))
