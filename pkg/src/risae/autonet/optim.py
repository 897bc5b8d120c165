"""Adam optimizer with a step-decay learning-rate schedule."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NonFiniteGradient


def step_decay_lr(epoch: int, base: float = 1e-3, factor: float = 5.0, every: int = 5) -> float:
    """Learning rate for a 0-based epoch: ``base / factor**(epoch // every)``."""
    return base / factor ** (epoch // every)


@dataclass
class AdamState:
    params: list
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def __post_init__(self):
        if not self.m:
            self.m = [np.zeros_like(p.value) for p in self.params]
            self.v = [np.zeros_like(p.value) for p in self.params]


def adam_step(state: AdamState, grads) -> None:
    """One in-place Adam update of ``state.params``.

    ``grads`` is a list aligned with ``state.params`` (None means zero) or a
    ``{Var: grad}`` mapping as returned by ``Tape.backward``.
    """
    if isinstance(grads, dict):
        grads = [grads.get(p) for p in state.params]
    grads = [np.zeros_like(p.value) if g is None else g for p, g in zip(state.params, grads)]
    for p, g in zip(state.params, grads):
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(f"non-finite gradient for {p.name or 'parameter'}")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1 - b1**state.step
    c2 = 1 - b2**state.step
    for i, (p, g) in enumerate(zip(state.params, grads)):
        state.m[i] = b1 * state.m[i] + (1 - b1) * g
        state.v[i] = b2 * state.v[i] + (1 - b2) * g * g
        m_hat = state.m[i] / c1
        v_hat = state.v[i] / c2
        p.value = p.value - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
