"""Position-wise network layers built on the tape primitives.

Tensors are laid out as ``(rows, channels)`` where a row is one
(block, position) pair. A kernel-size-1 convolution over ``channels x L_B``
is then a row-wise affine map, and batch normalization pools statistics over
all rows, i.e. over batch and positions together.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, InsufficientBatch, ShapeMismatch, ZeroInput
from ..numerics import as_generator
from .tape import Var, _op, dense, relu

BN_EPS = 1e-5
BN_MOMENTUM = 0.1
PROB_CLAMP = 1e-12


@dataclass
class LayerParams:
    """Weights of one kernel-1 convolution, optionally followed by ReLU + batch norm."""

    weight: Var
    bias: Var
    bn_scale: Var | None = None
    bn_shift: Var | None = None
    running_mean: np.ndarray | None = None
    running_var: np.ndarray | None = None

    @property
    def channels_in(self) -> int:
        return self.weight.shape[1]

    @property
    def channels_out(self) -> int:
        return self.weight.shape[0]

    @property
    def has_bn(self) -> bool:
        return self.bn_scale is not None

    def trainable(self) -> list:
        out = [self.weight, self.bias]
        if self.has_bn:
            out += [self.bn_scale, self.bn_shift]
        return out

    @classmethod
    def init(cls, rng, c_in: int, c_out: int, bn: bool, name: str = "") -> "LayerParams":
        g = as_generator(rng)
        bound = 1.0 / np.sqrt(c_in)
        p = cls(Var(g.uniform(-bound, bound, (c_out, c_in)), True, f"{name}.weight"),
                Var(g.uniform(-bound, bound, c_out), True, f"{name}.bias"))
        if bn:
            p.bn_scale = Var(np.ones(c_out), True, f"{name}.bn_scale")
            p.bn_shift = Var(np.zeros(c_out), True, f"{name}.bn_shift")
            p.running_mean = np.zeros(c_out)
            p.running_var = np.ones(c_out)
        return p


def dense_forward(x: Var, p: LayerParams, tape=None) -> Var:
    if x.shape[-1] != p.channels_in:
        raise DimensionMismatch(f"input has {x.shape[-1]} channels, layer expects {p.channels_in}")
    return dense(x, p.weight, p.bias, tape)


def batchnorm_forward(x: Var, p: LayerParams, mode: str, tape=None) -> Var:
    """Per-channel batch normalization; ``train`` also updates the running statistics."""
    gamma, beta = p.bn_scale.value, p.bn_shift.value
    if mode == "eval":
        inv = 1.0 / np.sqrt(p.running_var + BN_EPS)
        xhat = (x.value - p.running_mean) * inv
        y = gamma * xhat + beta
        return _op(tape, y, (x, p.bn_scale, p.bn_shift),
                   lambda g: (g * gamma * inv, np.sum(g * xhat, axis=0), g.sum(axis=0)))
    if mode != "train":
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    n = x.shape[0]
    if n < 2:
        raise InsufficientBatch("training-mode batch norm needs at least 2 rows")
    mu = x.value.mean(axis=0)
    var = x.value.var(axis=0)
    inv = 1.0 / np.sqrt(var + BN_EPS)
    xhat = (x.value - mu) * inv
    y = gamma * xhat + beta
    p.running_mean = (1 - BN_MOMENTUM) * p.running_mean + BN_MOMENTUM * mu
    p.running_var = (1 - BN_MOMENTUM) * p.running_var + BN_MOMENTUM * var * n / (n - 1)

    def backward(g):
        gx_hat = g * gamma
        gx = inv / n * (n * gx_hat - gx_hat.sum(axis=0) - xhat * np.sum(gx_hat * xhat, axis=0))
        return gx, np.sum(g * xhat, axis=0), g.sum(axis=0)

    return _op(tape, y, (x, p.bn_scale, p.bn_shift), backward)


def softmax(x: Var, tape=None) -> Var:
    """Row-wise softmax over channels, stabilized by max subtraction."""
    z = x.value - x.value.max(axis=-1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=-1, keepdims=True)
    return _op(tape, y, (x,), lambda g: (y * (g - np.sum(g * y, axis=-1, keepdims=True)),))


def power_normalize(x: Var, amplitude: float, groups: int, tape=None) -> Var:
    """Scale each group of rows so its mean-square complex magnitude is ``amplitude**2``.

    ``x`` holds ``K`` complex channels as ``2K`` real columns (real parts
    first); rows are split into ``groups`` equal contiguous groups (one per
    transmitted block).
    """
    n, c2 = x.shape
    if n % groups:
        raise ShapeMismatch(f"{n} rows do not split into {groups} groups")
    xv = x.value.reshape(groups, -1)
    n_complex = xv.shape[1] / 2
    energy = np.sum(xv**2, axis=1, keepdims=True)
    if np.any(np.sqrt(energy) < 1e-30):
        raise ZeroInput("power normalization of an all-zero block")
    r = np.sqrt(energy / n_complex)
    y = (amplitude * xv / r).reshape(n, c2)

    def backward(g):
        gv = g.reshape(groups, -1)
        dot = np.sum(gv * xv, axis=1, keepdims=True)
        gx = amplitude * gv / r - amplitude * dot * xv / (n_complex * r**3)
        return (gx.reshape(n, c2),)

    return _op(tape, y, (x,), backward)


def _check_pair(pred: Var, target):
    if pred.shape != np.shape(target):
        raise ShapeMismatch(f"prediction {pred.shape} vs target {np.shape(target)}")


def bce_loss(pred: Var, target, tape=None) -> Var:
    """Mean binary cross-entropy over all rows and channels."""
    _check_pair(pred, target)
    t = np.asarray(target, dtype=float)
    p = np.clip(pred.value, PROB_CLAMP, 1 - PROB_CLAMP)
    inside = (pred.value > PROB_CLAMP) & (pred.value < 1 - PROB_CLAMP)
    loss = -np.mean(t * np.log(p) + (1 - t) * np.log(1 - p))
    size = p.size

    def backward(g):
        return (g * inside * (-t / p + (1 - t) / (1 - p)) / size,)

    return _op(tape, np.asarray(loss), (pred,), backward)


def ce_loss(pred: Var, target, tape=None) -> Var:
    """Mean categorical cross-entropy over rows (for ablation against BCE)."""
    _check_pair(pred, target)
    t = np.asarray(target, dtype=float)
    p = np.clip(pred.value, PROB_CLAMP, 1.0)
    inside = pred.value > PROB_CLAMP
    rows = p.shape[0]
    loss = -np.sum(t * np.log(p)) / rows
    return _op(tape, np.asarray(loss), (pred,), lambda g: (g * inside * (-t / p) / rows,))


class Stack:
    """Sequence of kernel-1 layers: (dense -> ReLU -> BN) * k, then a final dense."""

    def __init__(self, layers, name: str = ""):
        self.layers = list(layers)
        self.name = name

    @classmethod
    def build(cls, rng, sizes, name: str = "") -> "Stack":
        layers = []
        for i, (c_in, c_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            last = i == len(sizes) - 2
            layers.append(LayerParams.init(rng, c_in, c_out, bn=not last, name=f"{name}.{i}"))
        return cls(layers, name)

    @property
    def sizes(self) -> list:
        return [self.layers[0].channels_in] + [l.channels_out for l in self.layers]

    def forward(self, x: Var, mode: str, tape=None) -> Var:
        for layer in self.layers:
            x = dense_forward(x, layer, tape)
            if layer.has_bn:
                x = relu(x, tape)
                x = batchnorm_forward(x, layer, mode, tape)
        return x

    def trainable(self) -> list:
        return [v for l in self.layers for v in l.trainable()]

    def named_arrays(self) -> list:
        """(name, array) pairs of all weights and running statistics in a fixed order."""
        out = []
        for i, l in enumerate(self.layers):
            out += [(f"{self.name}.{i}.weight", l.weight.value), (f"{self.name}.{i}.bias", l.bias.value)]
            if l.has_bn:
                out += [(f"{self.name}.{i}.bn_scale", l.bn_scale.value),
                        (f"{self.name}.{i}.bn_shift", l.bn_shift.value),
                        (f"{self.name}.{i}.running_mean", l.running_mean),
                        (f"{self.name}.{i}.running_var", l.running_var)]
        return out

    def load_arrays(self, arrays: dict):
        for i, l in enumerate(self.layers):
            l.weight.value = np.array(arrays[f"{self.name}.{i}.weight"])
            l.bias.value = np.array(arrays[f"{self.name}.{i}.bias"])
            if l.has_bn:
                l.bn_scale.value = np.array(arrays[f"{self.name}.{i}.bn_scale"])
                l.bn_shift.value = np.array(arrays[f"{self.name}.{i}.bn_shift"])
                l.running_mean = np.array(arrays[f"{self.name}.{i}.running_mean"])
                l.running_var = np.array(arrays[f"{self.name}.{i}.running_var"])
