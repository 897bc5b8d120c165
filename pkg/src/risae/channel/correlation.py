"""Spatial correlation matrices of the double-scattering model.

All three families share one kernel: a uniform linear arrangement of
``size`` points illuminated by ``sc`` scatterers spread over an angular
range, averaged over the scatterer angles.
"""

from __future__ import annotations

import numpy as np

from ..errors import EvenScatterers
from ..numerics import kronecker


def _scatter_angles(sc: int, spread: float) -> np.ndarray:
    if sc < 1 or sc % 2 == 0:
        raise EvenScatterers(f"scatterer count must be odd and >= 1, got {sc}")
    q = (sc - 1) // 2
    t = np.arange(-q, q + 1, dtype=float)
    if sc == 1:
        return np.zeros(1)
    return t * spread / (1 - sc)


def linear_array_correlation(sc: int, spacing: float, spread: float, size: int) -> np.ndarray:
    """``size x size`` correlation of a linear array; ``spacing`` in wavelengths.

    Entry ``(i, j)`` is the average over scatterer angles ``v_t`` of
    ``exp(j 2 pi spacing (i - j) sin(v_t))``.
    """
    v = _scatter_angles(sc, spread)
    idx = np.arange(size)
    diff = idx[:, None] - idx[None, :]
    phase = 2 * np.pi * spacing * diff[:, :, None] * np.sin(v)[None, None, :]
    return np.exp(1j * phase).sum(axis=-1) / sc


def ris_correlation(sc: int, geom, spread: float) -> np.ndarray:
    """Planar RIS correlation: vertical (x) horizontal linear correlations."""
    r_h = linear_array_correlation(sc, geom.ris_h_spacing / geom.wavelength, spread, geom.n_horizontal)
    r_v = linear_array_correlation(sc, geom.ris_v_spacing / geom.wavelength, spread, geom.n_vertical)
    return kronecker(r_v, r_h)


def scatterer_correlation(sc: int, spacing: float, spread: float) -> np.ndarray:
    """``sc x sc`` correlation among the scatterers themselves."""
    return linear_array_correlation(sc, spacing, spread, sc)
