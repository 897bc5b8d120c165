"""Monte-Carlo symbol error rate estimation with Wilson confidence intervals."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from ..channel import ChannelModel, ChannelRealization
from ..numerics import RngStream, complex_gaussian_array
from ..system import ModelParams, end_to_end_forward, noise_var_for_snr

Z95 = float(special.ndtri(0.975))


def wilson_interval(errors, trials, z: float = Z95):
    """Wilson score interval for a binomial proportion; works elementwise."""
    k = np.asarray(errors, dtype=float)
    n = np.asarray(trials, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(n > 0, k / n, 0.0)
        denom = 1 + z**2 / n
        centre = (p + z**2 / (2 * n)) / denom
        half = z * np.sqrt(p * (1 - p) / n + z**2 / (4 * n**2)) / denom
    low = np.where(n > 0, np.clip(centre - half, 0.0, 1.0), 0.0)
    high = np.where(n > 0, np.clip(centre + half, 0.0, 1.0), 1.0)
    # guard rounding so the interval always contains the estimate
    low = np.minimum(low, p)
    high = np.maximum(high, p)
    if np.ndim(low) == 0:
        return float(low), float(high)
    return low, high


@dataclass
class SerCurve:
    """SER estimates over an SNR grid.

    Counted curves carry errors/symbols; a computed curve (analytic bound)
    passes ``values`` instead, with zero counts and a degenerate interval.
    """

    label: str
    snr_db: np.ndarray
    errors: np.ndarray
    symbols: np.ndarray
    meta: dict = field(default_factory=dict)
    values: np.ndarray | None = None

    def __post_init__(self):
        self.snr_db = np.asarray(self.snr_db, dtype=float)
        self.errors = np.asarray(self.errors, dtype=np.int64)
        self.symbols = np.asarray(self.symbols, dtype=np.int64)
        if not (self.snr_db.shape == self.errors.shape == self.symbols.shape):
            raise ValueError("snr, errors and symbols must have equal length")
        if np.any(self.errors > self.symbols) or np.any(self.errors < 0):
            raise ValueError("error counts must lie in [0, symbols]")
        if self.values is not None:
            self.values = np.asarray(self.values, dtype=float)
            if self.values.shape != self.snr_db.shape:
                raise ValueError("values must match the SNR grid")

    @classmethod
    def computed(cls, label, snr_db, values, meta=None) -> "SerCurve":
        z = np.zeros(np.shape(snr_db), dtype=np.int64)
        return cls(label, snr_db, z, z, meta or {}, values)

    @property
    def ser(self) -> np.ndarray:
        if self.values is not None:
            return self.values.copy()
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.symbols > 0, self.errors / np.maximum(self.symbols, 1), np.nan)

    @property
    def interval(self):
        if self.values is not None:
            return self.values.copy(), self.values.copy()
        return wilson_interval(self.errors, self.symbols)

    def std(self) -> np.ndarray:
        """Binomial standard deviation of each estimate."""
        p = self.ser
        return np.sqrt(p * (1 - p) / np.maximum(self.symbols, 1))

    def at(self, snr: float) -> int:
        idx = np.flatnonzero(np.isclose(self.snr_db, snr))
        if not idx.size:
            raise KeyError(f"SNR {snr} not on the grid")
        return int(idx[0])


def block_inputs(channel: ChannelModel, block_len: int, modulation: int, rng: RngStream, b: int):
    """Messages, channels and unit noise of block ``b``; independent of chunking and SNR."""
    s = rng.child(b)
    msg = s.gen.integers(0, modulation, size=(1, block_len))
    real = channel.realize(s.child(0), block_len)
    noise = complex_gaussian_array(s.child(1).gen, (block_len, channel.k_d))
    return msg, real, noise


def monte_carlo_ser(params: ModelParams, channel: ChannelModel, snr_grid, blocks: int, rng: RngStream,
                    perturbation=None, injection: str = "adversary", max_errors: int | None = 200,
                    chunk: int = 50, label: str = "") -> SerCurve:
    """Eval-mode SER of a trained model at every grid SNR.

    Block ``b`` uses the same messages, channels and unit noise at every SNR
    (and for every model evaluated with the same ``rng``). A grid point stops
    after the first chunk that brings its error count to ``max_errors``.
    """
    grid = np.asarray(snr_grid, dtype=float)
    errors = np.zeros(grid.size, dtype=np.int64)
    symbols = np.zeros(grid.size, dtype=np.int64)
    dims = params.dims
    for start in range(0, blocks, chunk):
        active = [i for i in range(grid.size) if max_errors is None or errors[i] < max_errors]
        if not active:
            break
        sel = range(start, min(start + chunk, blocks))
        parts = [block_inputs(channel, dims.block_len, dims.modulation, rng, b) for b in sel]
        msg = np.concatenate([p[0] for p in parts])
        real = ChannelRealization.concat([p[1] for p in parts])
        noise = np.concatenate([p[2] for p in parts])
        for i in active:
            res = end_to_end_forward(msg, real, noise_var_for_snr(grid[i]), params, "eval",
                                     perturbation=perturbation, injection=injection, unit_noise=noise)
            errors[i] += res.errors
            symbols[i] += msg.size
    meta = {"blocks": blocks, "max_errors": max_errors, "seed": rng.seed,
            "perturbed": perturbation is not None, "injection": injection}
    return SerCurve(label, grid, errors, symbols, meta)
