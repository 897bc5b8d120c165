"""End-to-end autoencoder: encoder, per-RIS phase controllers and decoder.

Signals are handled symbol-wise: row ``b * L_B + l`` of every tensor holds
position ``l`` of block ``b``. Complex quantities entering a network are split
into real and imaginary channels.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..autonet import Stack, Tape, Var, architecture_hash, bce_loss, ce_loss, power_normalize, softmax
from ..autonet.tape import add, bmatmul, bmatvec, complex_features, const, exp_j, real_to_complex, row_scale
from ..channel import ChannelRealization
from ..errors import ShapeMismatch
from ..numerics import as_generator, complex_gaussian_array

# What each RIS controller observes: the echo of a known pilot through D_m
# ("pilot"), or the echo of the data symbol itself ("symbol"). With "symbol"
# the phases, and hence the noise-free cascade handed to the decoder, carry the
# message, so the decoder can bypass the noisy received signal entirely.
RIS_INPUTS = ("pilot", "symbol")


@dataclass(frozen=True)
class SystemDims:
    """Sizes of the link: modulation order, block length, antennas and RIS elements."""

    modulation: int = 4
    block_len: int = 20
    k_e: int = 4
    k_d: int = 4
    k_a: int = 4
    k_s: int = 1
    ris_elements: tuple = (8,)

    def __post_init__(self):
        m = self.modulation
        if m < 2 or m & (m - 1):
            raise ValueError(f"modulation order must be a power of 2, got {m}")
        counts = (self.block_len, self.k_e, self.k_d, self.k_a, self.k_s, *self.ris_elements)
        if not self.ris_elements or min(counts) < 1:
            raise ValueError("all counts must be >= 1 and at least one RIS is required")

    @property
    def n_ris(self) -> int:
        return len(self.ris_elements)

    @property
    def decoder_inputs(self) -> int:
        return 2 * self.k_d + 2 * self.k_d * self.k_e


@dataclass
class ModelParams:
    """All trainable stacks plus the fixed transmit power."""

    dims: SystemDims
    encoder: Stack
    ris: list
    decoder: Stack
    tx_power: float = 1.0
    widths: dict = field(default_factory=dict)
    ris_input: str = "pilot"

    @classmethod
    def init(cls, dims: SystemDims, rng, tx_power: float = 1.0, encoder_hidden=(256, 256),
             ris_hidden=(512, 512), decoder_hidden=(512, 512), ris_input: str = "pilot") -> "ModelParams":
        if ris_input not in RIS_INPUTS:
            raise ValueError(f"ris_input must be one of {RIS_INPUTS}, got {ris_input!r}")
        g = as_generator(rng)
        enc = Stack.build(g, [dims.modulation, *encoder_hidden, 2 * dims.k_e], "encoder")
        ris = [Stack.build(g, [2 * n, *ris_hidden, n], f"ris{m}")
               for m, n in enumerate(dims.ris_elements)]
        dec = Stack.build(g, [dims.decoder_inputs, *decoder_hidden, dims.modulation], "decoder")
        widths = {"encoder": list(encoder_hidden), "ris": list(ris_hidden), "decoder": list(decoder_hidden)}
        return cls(dims, enc, ris, dec, tx_power, widths, ris_input)

    @property
    def stacks(self) -> list:
        return [self.encoder, *self.ris, self.decoder]

    def trainable(self) -> list:
        return [v for s in self.stacks for v in s.trainable()]

    def named_arrays(self) -> list:
        return [item for s in self.stacks for item in s.named_arrays()]

    def load_arrays(self, arrays: dict):
        for s in self.stacks:
            s.load_arrays(arrays)

    @property
    def arch_hash(self) -> str:
        return architecture_hash(self.named_arrays())

    @property
    def amplitude(self) -> float:
        """Per-entry RMS amplitude of the encoded block (total power ``tx_power`` per symbol)."""
        return float(np.sqrt(self.tx_power / self.dims.k_e))

    def describe(self) -> dict:
        return {"dims": asdict(self.dims), "tx_power": self.tx_power, "widths": self.widths,
                "ris_input": self.ris_input}

    @property
    def pilot(self) -> np.ndarray:
        """Known vector whose echo through ``D_m`` the RIS controllers observe."""
        return np.full(self.dims.k_e, self.amplitude, dtype=complex)

    def copy(self) -> "ModelParams":
        other = ModelParams.init(self.dims, np.random.default_rng(0), self.tx_power,
                                 self.widths["encoder"], self.widths["ris"], self.widths["decoder"],
                                 self.ris_input)
        other.load_arrays({k: np.array(v) for k, v in self.named_arrays()})
        return other


def one_hot(messages, m: int) -> np.ndarray:
    idx = np.asarray(messages).reshape(-1)
    out = np.zeros((idx.size, m))
    out[np.arange(idx.size), idx] = 1.0
    return out


def encode(messages, params: ModelParams, mode: str, tape: Tape | None = None) -> Var:
    """Complex encoded symbols, shape ``(blocks * L_B, K_e)``, power-normalized per block."""
    msg = np.asarray(messages)
    if msg.ndim != 2 or msg.shape[1] != params.dims.block_len:
        raise ShapeMismatch(f"messages must be (blocks, {params.dims.block_len}), got {msg.shape}")
    x = Var(one_hot(msg, params.dims.modulation))
    y = params.encoder.forward(x, mode, tape)
    y = power_normalize(y, params.amplitude, groups=msg.shape[0], tape=tape)
    return real_to_complex(y, tape)


def ris_control(received_at_ris: Var, params: ModelParams, m: int, mode: str, tape: Tape | None = None):
    """Phases ``theta`` (rows, N_m) and unit-modulus coefficients ``exp(j theta)`` for RIS ``m``."""
    feats = complex_features([received_at_ris], tape)
    theta = params.ris[m].forward(feats, mode, tape)
    return theta, exp_j(theta, tape)


def decoder_logits(received: Var, cascade: Var, params: ModelParams, mode: str, tape: Tape | None = None) -> Var:
    feats = complex_features([received, cascade], tape)
    return params.decoder.forward(feats, mode, tape)


def decide(probs) -> np.ndarray:
    """Hard decisions per row; ``argmax`` returns the lowest index among ties."""
    return np.argmax(probs, axis=-1)


def decode(received, cascade, params: ModelParams, mode: str, tape: Tape | None = None):
    """Probabilities ``(rows, M)`` and hard decisions from received vectors and cascades."""
    logits = decoder_logits(const(received), const(cascade), params, mode, tape)
    probs = softmax(logits, tape)
    return probs, decide(probs.value)


@dataclass
class ForwardResult:
    loss: Var
    probs: np.ndarray
    decisions: np.ndarray
    labels: np.ndarray
    tx: np.ndarray
    clean: np.ndarray
    received: np.ndarray
    cascade: np.ndarray
    adv_cascade: np.ndarray | None
    phases: list

    @property
    def errors(self) -> int:
        return int(np.count_nonzero(self.decisions != self.labels))


def _aggregate(H, D, coeffs, tape):
    out = None
    for h, d, c in zip(H, D, coeffs):
        term = bmatmul(const(h), row_scale(c, const(d), tape), tape)
        out = term if out is None else add(out, term, tape)
    return out


def end_to_end_forward(messages, real: ChannelRealization, noise_var: float, params: ModelParams,
                       mode: str, rng=None, perturbation=None, injection: str = "adversary",
                       tape: Tape | None = None, loss: str = "bce", unit_noise=None) -> ForwardResult:
    """Encode, steer the RISs, propagate, add noise (and perturbation), decode.

    ``perturbation`` is the emitter-side vector ``u_e`` (complex ``(K_a,)``
    array or a ``Var`` for input gradients). ``injection`` selects the
    cascade it travels through: ``"adversary"`` (``C u_e``) or
    ``"legitimate"`` (``O u_e``, needs ``K_a == K_e``). ``rng`` draws the
    receiver noise and may be omitted when ``noise_var == 0``; alternatively
    ``unit_noise`` supplies pre-drawn CN(0, 1) noise of shape ``(rows, K_d)``.
    """
    dims = params.dims
    msg = np.asarray(messages)
    n = msg.size
    if real.n_symbols != n:
        raise ShapeMismatch(f"{n} symbols but {real.n_symbols} channel slots")
    t = encode(msg, params, mode, tape)
    coeffs = []
    for m in range(dims.n_ris):
        src = t if params.ris_input == "symbol" else const(params.pilot)
        x_m = bmatvec(const(real.D[m]), src, tape)
        _, c = ris_control(x_m, params, m, mode, tape)
        coeffs.append(c)
    cascade = _aggregate(real.H, real.D, coeffs, tape)
    H_rx = real.H_true if real.H_true is not None else real.H
    true_cascade = cascade if real.H_true is None else _aggregate(H_rx, real.D, coeffs, tape)
    clean = bmatvec(true_cascade, t, tape)
    if noise_var > 0:
        if unit_noise is None:
            unit_noise = complex_gaussian_array(as_generator(rng), (n, dims.k_d))
        noise = np.sqrt(noise_var) * unit_noise
        received = add(clean, const(noise), tape)
    else:
        received = clean
    adv_cascade = None
    if real.has_adversary:
        Hp_rx = real.Hp_true if real.Hp_true is not None else real.Hp
        adv_cascade = _aggregate(Hp_rx, real.Dp, coeffs, tape)
    if perturbation is not None:
        u = const(perturbation)
        if injection == "adversary":
            if adv_cascade is None:
                raise ValueError("adversary injection needs adversary links")
            inj = adv_cascade
        elif injection == "legitimate":
            if dims.k_a != dims.k_e:
                raise ShapeMismatch("legitimate-cascade injection requires K_a == K_e")
            inj = true_cascade
        else:
            raise ValueError(f"unknown injection convention {injection!r}")
        received = add(received, bmatvec(inj, u, tape), tape)
    logits = decoder_logits(received, cascade, params, mode, tape)
    probs = softmax(logits, tape)
    target = one_hot(msg, dims.modulation)
    loss_fn = {"bce": bce_loss, "ce": ce_loss}[loss]
    lv = loss_fn(probs, target, tape)
    labels = msg.reshape(-1)
    return ForwardResult(lv, probs.value, decide(probs.value), labels, t.value, clean.value,
                         received.value, cascade.value,
                         None if adv_cascade is None else adv_cascade.value,
                         [c.value for c in coeffs])
