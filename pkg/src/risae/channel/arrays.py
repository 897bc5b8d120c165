"""Steering vectors for the transceiver ULAs and the RIS UPAs, and LOS matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numerics import kronecker

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class ArrayGeometry:
    """Element spacings (meters) and RIS layout.

    ``n_horizontal * n_vertical`` is the number of reflecting elements per RIS.
    Transceiver ULA and RIS spacings default to half a wavelength.
    """

    wavelength: float
    ula_spacing: float
    ris_h_spacing: float
    ris_v_spacing: float
    n_horizontal: int
    n_vertical: int

    def __post_init__(self):
        for name in ("wavelength", "ula_spacing", "ris_h_spacing", "ris_v_spacing"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.n_horizontal < 1 or self.n_vertical < 1:
            raise ValueError("RIS must have at least one element per axis")

    @classmethod
    def half_wavelength(cls, carrier_hz: float, n_horizontal: int, n_vertical: int) -> "ArrayGeometry":
        lam = SPEED_OF_LIGHT / carrier_hz
        return cls(lam, lam / 2, lam / 2, lam / 2, n_horizontal, n_vertical)

    @property
    def n_elements(self) -> int:
        return self.n_horizontal * self.n_vertical


def ula_response(angle: float, elements: int, spacing: float) -> np.ndarray:
    """ULA steering vector; ``spacing`` is in wavelengths."""
    if elements < 1:
        raise ValueError("elements must be >= 1")
    k = np.arange(elements)
    return np.exp(1j * 2 * np.pi * k * spacing * np.cos(np.pi / 2 - angle))


def upa_response(elev: float, azim: float, geom: ArrayGeometry) -> np.ndarray:
    """RIS steering vector: vertical response (x) horizontal response."""
    nv = np.arange(geom.n_vertical)
    nh = np.arange(geom.n_horizontal)
    a_v = np.exp(1j * 2 * np.pi * (geom.ris_v_spacing / geom.wavelength) * nv
                 * np.cos(elev) * np.cos(np.pi / 2 - azim))
    a_h = np.exp(1j * 2 * np.pi * (geom.ris_h_spacing / geom.wavelength) * nh
                 * np.cos(np.pi / 2 - elev))
    return kronecker(a_v[:, None], a_h[:, None])[:, 0]


def los_component(link, geom: ArrayGeometry, side: str, n_antennas: int) -> np.ndarray:
    """Rank-one LOS matrix of a link.

    ``side="encoder-to-ris"`` gives the ``N_m x n_antennas`` matrix
    ``a_ris(aoa) a_ula(aod)^T``; ``side="ris-to-decoder"`` gives the
    ``n_antennas x N_m`` matrix ``a_ula(aoa) a_ris(aod)^T``.
    """
    d_l = geom.ula_spacing / geom.wavelength
    if side == "encoder-to-ris":
        a_ris = upa_response(link.aoa_elev, link.aoa_azim, geom)
        a_ula = ula_response(link.aod_elev, n_antennas, d_l)
        return np.outer(a_ris, a_ula)
    if side == "ris-to-decoder":
        a_ula = ula_response(link.aoa_elev, n_antennas, d_l)
        a_ris = upa_response(link.aod_elev, link.aod_azim, geom)
        return np.outer(a_ula, a_ris)
    raise ValueError(f"unknown side {side!r}")
