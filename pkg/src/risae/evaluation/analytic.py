"""Closed-form pairwise-error SER bound for a fixed precoded MIMO link."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..numerics import as_generator, complex_gaussian_array, q_function

NORM_TOL = 1e-10


def stream_alphabet(q: int) -> np.ndarray:
    """Unit-energy alphabet of ``q`` points for one stream (BPSK, QPSK, else q-PSK)."""
    if q == 2:
        return np.array([1.0, -1.0], dtype=complex)
    if q == 4:
        return np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / np.sqrt(2)
    return np.exp(2j * np.pi * np.arange(q) / q)


def product_constellation(m: int, k_s: int) -> np.ndarray:
    """``m`` symbol vectors of length ``k_s`` built as a product of per-stream alphabets."""
    q = int(round(m ** (1.0 / k_s)))
    if q**k_s != m or q < 2:
        raise ValueError(f"M={m} is not a perfect {k_s}-th power of an alphabet size >= 2")
    alpha = stream_alphabet(q)
    return np.array(list(itertools.product(alpha, repeat=k_s)), dtype=complex)


def identity_padded(rows: int, cols: int) -> np.ndarray:
    out = np.zeros((rows, cols), dtype=complex)
    k = min(rows, cols)
    out[np.arange(k), np.arange(k)] = 1.0
    return out


@dataclass
class AnalyticLinkModel:
    """``y = sqrt(P/K_s) W O B s + W n`` with fixed precoder, combiner and cascade."""

    cascade: np.ndarray
    precoder: np.ndarray
    combiner: np.ndarray
    constellation: np.ndarray

    def __post_init__(self):
        self.cascade = np.asarray(self.cascade, dtype=complex)
        self.precoder = np.asarray(self.precoder, dtype=complex)
        self.combiner = np.asarray(self.combiner, dtype=complex)
        self.constellation = np.asarray(self.constellation, dtype=complex)
        k_s = self.k_s
        if self.combiner.shape[0] != k_s or self.constellation.shape[1] != k_s:
            raise ValueError("precoder, combiner and constellation disagree on the stream count")
        for name, mat in (("precoder", self.precoder), ("combiner", self.combiner)):
            fro = np.sum(np.abs(mat) ** 2)
            if abs(fro - k_s) > NORM_TOL:
                raise ValueError(f"{name} squared Frobenius norm {fro:.12g} != K_s = {k_s}")

    @property
    def k_s(self) -> int:
        return self.precoder.shape[1]

    @classmethod
    def default(cls, cascade, m: int, k_s: int) -> "AnalyticLinkModel":
        """Identity-padded precoder/combiner and the product constellation."""
        k_d, k_e = np.shape(cascade)
        return cls(cascade, identity_padded(k_e, k_s), identity_padded(k_s, k_d),
                   product_constellation(m, k_s))

    def effective(self) -> np.ndarray:
        return self.combiner @ self.cascade @ self.precoder


def analytic_ser(model: AnalyticLinkModel, noise_var: float, power: float) -> float:
    """Union bound ``(1/M) sum_i sum_{j!=i} Q(sqrt(||W O B (s_i - s_j)||^2 (P/K_s) / (2 sigma^2)))``."""
    g = model.effective()
    pts = model.constellation @ g.T
    diff = pts[:, None, :] - pts[None, :, :]
    d2 = np.sum(np.abs(diff) ** 2, axis=-1) * power / model.k_s
    m = pts.shape[0]
    off = ~np.eye(m, dtype=bool)
    with np.errstate(divide="ignore"):
        arg = np.sqrt(d2[off] / (2.0 * noise_var)) if noise_var > 0 else np.where(d2[off] > 0, np.inf, 0.0)
    return float(np.sum(q_function(arg)) / m)


def ml_detection_ser(model: AnalyticLinkModel, noise_var: float, power: float, symbols: int, rng,
                     chunk: int = 100_000):
    """Monte-Carlo SER of minimum-distance detection; returns ``(errors, symbols)``."""
    g = as_generator(rng)
    eff = np.sqrt(power / model.k_s) * model.effective()
    pts = model.constellation @ eff.T
    m = pts.shape[0]
    k_d = model.cascade.shape[0]
    errors = 0
    done = 0
    while done < symbols:
        n = min(chunk, symbols - done)
        idx = g.integers(0, m, n)
        noise = np.sqrt(noise_var) * complex_gaussian_array(g, (n, k_d))
        y = pts[idx] + noise @ model.combiner.T
        dist = np.sum(np.abs(y[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
        errors += int(np.count_nonzero(np.argmin(dist, axis=1) != idx))
        done += n
    return errors, symbols
