"""Convenience construction of a channel model for a set of system dimensions."""

from __future__ import annotations

import numpy as np

from ..channel import ArrayGeometry, ChannelModel, MobilityConfig, Topology, build_link_table
from .model import SystemDims


def make_channel(dims: SystemDims, ris=None, ris_shape=(4, 2), carrier: float = 2.6e9,
                 topology: Topology | None = None, rician: float = 4.0, rician_adv: float = 0.8,
                 scatterers: int = 5, scatterers_adv: int | None = None, spread: float = np.pi / 6,
                 tx_power: float = 1.0, adversary: bool = True,
                 mobility: MobilityConfig | None = None) -> ChannelModel:
    """Channel model for the first ``dims.n_ris`` RIS positions (or the explicit ``ris`` list).

    ``ris_shape`` is ``(horizontal, vertical)`` elements; its product must
    match every entry of ``dims.ris_elements``.
    """
    nh, nv = ris_shape
    if any(n != nh * nv for n in dims.ris_elements):
        raise ValueError(f"RIS shape {nh}x{nv} does not match element counts {dims.ris_elements}")
    ris = tuple(ris) if ris is not None else tuple(range(1, dims.n_ris + 1))
    if len(ris) != dims.n_ris:
        raise ValueError(f"{len(ris)} RIS positions for {dims.n_ris} RIS controllers")
    base = topology or Topology()
    topo = Topology(base.d1, base.d2, base.d3, ris)
    table = build_link_table(topo, rician, rician_adv, scatterers, scatterers_adv, spread)
    geom = ArrayGeometry.half_wavelength(carrier, nh, nv)
    return ChannelModel(table, geom, dims.k_e, dims.k_d, dims.k_a, tx_power, adversary, mobility)
