"""Link statistics: path loss, double-scattering NLOS, Rician assembly, Doppler."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EvenScatterers
from ..numerics import as_generator, bessel_j0, complex_gaussian_array, hermitian_sqrt
from .arrays import SPEED_OF_LIGHT, ArrayGeometry
from .correlation import linear_array_correlation, ris_correlation, scatterer_correlation


def path_loss_db(distance: float) -> float:
    """3GPP UMi NLOS path loss in dB, ``35.6 + 22 log10(l)``."""
    if distance < 1:
        raise ValueError(f"path loss model needs distance >= 1 m, got {distance}")
    return 35.6 + 22.0 * np.log10(distance)


@dataclass(frozen=True)
class LinkSpec:
    """Large-scale and angular description of one link.

    Angles are radians; ``d_e`` and ``d_s`` are in wavelengths. When
    ``path_loss`` is None it is derived from ``distance``.
    """

    distance: float
    rician_factor: float = 4.0
    aoa_elev: float = 0.0
    aoa_azim: float = 0.0
    aod_elev: float = 0.0
    aod_azim: float = 0.0
    scatterers: int = 5
    spread_e: float = np.pi / 6
    spread_m: float = np.pi / 6
    spread_s: float = np.pi / 6
    d_e: float = 0.5
    d_s: float = 0.5
    path_loss: float | None = None

    def __post_init__(self):
        if not self.distance > 0:
            raise ValueError("distance must be > 0")
        if self.rician_factor < 0:
            raise ValueError("rician factor must be >= 0")
        if self.scatterers < 1 or self.scatterers % 2 == 0:
            raise EvenScatterers(f"scatterer count must be odd and >= 1, got {self.scatterers}")
        if self.path_loss is not None and self.path_loss < 0:
            raise ValueError("path loss must be >= 0 dB")

    @property
    def path_loss_db(self) -> float:
        return path_loss_db(self.distance) if self.path_loss is None else float(self.path_loss)

    @property
    def path_gain(self) -> float:
        """Linear large-scale power gain ``10^(-PL/10)``."""
        return 10.0 ** (-self.path_loss_db / 10.0)


@dataclass(frozen=True)
class NlosFactors:
    """Square-root correlation factors of one link (row side, scatterers, column side)."""

    row_sqrt: np.ndarray
    scat_sqrt: np.ndarray
    col_sqrt: np.ndarray

    @property
    def scatterers(self) -> int:
        return self.scat_sqrt.shape[0]

    @classmethod
    def identity(cls, m1: int, m2: int, sc: int) -> "NlosFactors":
        return cls(np.eye(m1, dtype=complex), np.eye(sc, dtype=complex), np.eye(m2, dtype=complex))


def link_factors(link: LinkSpec, geom: ArrayGeometry, side: str, n_antennas: int) -> NlosFactors:
    """Correlation square roots for an encoder-to-RIS or RIS-to-decoder link."""
    sc = link.scatterers
    r_ris = ris_correlation(sc, geom, link.spread_m)
    r_ula = linear_array_correlation(sc, link.d_e, link.spread_e, n_antennas)
    s = scatterer_correlation(sc, link.d_s, link.spread_s)
    if side == "encoder-to-ris":
        rows, cols = r_ris, r_ula
    elif side == "ris-to-decoder":
        rows, cols = r_ula, r_ris
    else:
        raise ValueError(f"unknown side {side!r}")
    return NlosFactors(hermitian_sqrt(rows), hermitian_sqrt(s), hermitian_sqrt(cols))


def nlos_realization(factors: NlosFactors, rng, n: int | None = None) -> np.ndarray:
    """Double-scattering NLOS draw ``sqrt(1/SC) R_row^.5 T S^.5 E R_col^.5``.

    Returns one ``M1 x M2`` matrix, or a stack of ``n`` of them.
    """
    g = as_generator(rng)
    m1 = factors.row_sqrt.shape[0]
    m2 = factors.col_sqrt.shape[0]
    sc = factors.scatterers
    lead = () if n is None else (n,)
    t = complex_gaussian_array(g, lead + (m1, sc))
    e = complex_gaussian_array(g, lead + (sc, m2))
    left = factors.row_sqrt @ t @ factors.scat_sqrt
    return np.sqrt(1.0 / sc) * (left @ e @ factors.col_sqrt)


def rician_link(link: LinkSpec, los: np.ndarray, nlos: np.ndarray, gain: float | None = None) -> np.ndarray:
    """Rician assembly scaled by the linear path gain (``gain`` overrides it)."""
    w = link.path_gain if gain is None else gain
    k = link.rician_factor
    return np.sqrt(w) * (np.sqrt(k / (k + 1)) * los + np.sqrt(1 / (k + 1)) * nlos)


@dataclass(frozen=True)
class MobilityConfig:
    """Decoder mobility; ``symbol_interval`` defaults to 0.1 ms."""

    velocity: float = 0.0
    carrier: float = 2.6e9
    light_speed: float = SPEED_OF_LIGHT
    symbol_interval: float = 1e-4

    @property
    def doppler(self) -> float:
        return self.velocity * self.carrier / self.light_speed

    @property
    def zeta(self) -> float:
        if self.velocity == 0:
            return 1.0
        return bessel_j0(2 * np.pi * self.doppler * self.symbol_interval) ** 2


def doppler_evolve(static_link: np.ndarray, mobility: MobilityConfig, rng, noise_scale: float) -> np.ndarray:
    """``zeta * static + sqrt(1 - zeta^2) * xi`` with ``xi ~ CN(0, noise_scale^2)``."""
    zeta = mobility.zeta
    if not 0.0 <= zeta <= 1.0:
        raise ValueError(f"zeta must lie in [0, 1], got {zeta}")
    if zeta == 1.0:
        return np.array(static_link, copy=True)
    xi = noise_scale * complex_gaussian_array(rng, np.shape(static_link))
    return zeta * static_link + np.sqrt(1 - zeta**2) * xi
