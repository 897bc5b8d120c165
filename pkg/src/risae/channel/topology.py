"""Deployment geometry of the four-RIS scenario and its link table.

Coordinates follow the 3-D layout: encoder at ``(d1, 0, d3)``, decoder at
``(d1, d1, 0)``, adversary at ``(d1, 0, 0)`` and RIS 1..4 at the corners
``(d2, 0, d3)``, ``(0, 0, d3)``, ``(0, d1, d3)``, ``(d2, d1, d3)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .fading import LinkSpec

RIS_AZIMUTHS = (3 * np.pi / 4, np.pi / 4, -np.pi / 4, -3 * np.pi / 4)


@dataclass(frozen=True)
class Topology:
    d1: float = 200.0
    d2: float = 400.0
    d3: float = 3.0
    ris: tuple = (1, 2, 3, 4)

    def __post_init__(self):
        if not (self.d1 > 0 and self.d2 > self.d1 and self.d3 >= 0):
            raise ValueError("need d1 > 0, d2 > d1, d3 >= 0")
        if not self.ris or any(r not in (1, 2, 3, 4) for r in self.ris):
            raise ValueError(f"RIS indices must be a non-empty subset of 1..4, got {self.ris}")
        if len(set(self.ris)) != len(self.ris):
            raise ValueError("duplicate RIS index")

    @property
    def encoder(self):
        return np.array([self.d1, 0.0, self.d3])

    @property
    def decoder(self):
        return np.array([self.d1, self.d1, 0.0])

    @property
    def adversary(self):
        return np.array([self.d1, 0.0, 0.0])

    def ris_position(self, m: int) -> np.ndarray:
        d1, d2, d3 = self.d1, self.d2, self.d3
        return np.array({1: (d2, 0, d3), 2: (0, 0, d3), 3: (0, d1, d3), 4: (d2, d1, d3)}[m], dtype=float)

    def ris_azimuth(self, m: int) -> float:
        return RIS_AZIMUTHS[m - 1]

    def euclidean_distances(self, m: int) -> dict:
        """Distances of the four links touching RIS ``m`` from coordinates."""
        p = self.ris_position(m)
        return {
            "D": float(np.linalg.norm(p - self.encoder)),
            "H": float(np.linalg.norm(self.decoder - p)),
            "Dp": float(np.linalg.norm(p - self.adversary)),
            "Hp": float(np.linalg.norm(self.decoder - p)),
        }


def table_distances(d1: float, d2: float, d3: float, m: int) -> dict:
    """Closed-form link distances as tabulated for the legitimate and adversary links."""
    a = d2 - d1
    return {
        1: {"D": a, "H": np.sqrt(a**2 + d1**2 + d3**2),
            "Dp": np.sqrt(a**2 + d3**2), "Hp": np.sqrt(a**2 + d1**2 + d3**2)},
        2: {"D": d1, "H": np.sqrt(2 * d1**2 + d3**2),
            "Dp": np.sqrt(d1**2 + d3**2), "Hp": np.sqrt(2 * d1**2 + d3**2)},
        3: {"D": np.sqrt(2 * d1**2), "H": np.sqrt(d1**2 + d3**2),
            "Dp": np.sqrt(2 * d1**2 + d3**2), "Hp": np.sqrt(d1**2 + d3**2)},
        4: {"D": np.sqrt(a**2 + d1**2), "H": np.sqrt(a**2 + d3**2),
            "Dp": np.sqrt(a**2 + d1**2 + d3**2), "Hp": np.sqrt(a**2 + d3**2)},
    }[m]


def _table_angles(d1, d2, d3, m):
    """(aoa_elev, aoa_azim, aod_elev, aod_azim) per link kind for RIS ``m``."""
    a = d2 - d1
    q = np.pi / 4
    h = {
        1: (np.arctan(a / d1), 0.0, q + np.arctan(a / d1), np.arctan(d3 / d1)),
        2: (q, 0.0, np.pi / 2, np.arctan(d3 / (np.sqrt(2) * d1))),
        3: (np.pi / 2, 0.0, q, np.arctan(d3 / d1)),
        4: (np.pi / 2, 0.0, q, np.arctan(d3 / d1)),
    }[m]
    d = {
        1: (q, 0.0, np.pi / 2, 0.0),
        2: (q, 0.0, np.pi / 2, 0.0),
        3: (np.pi / 2, 0.0, q, 0.0),
        4: (q + np.arctan(a / d1), 0.0, np.arctan(d1 / a), 0.0),
    }[m]
    dp = {
        1: (q, np.arctan(d3 / a), np.pi / 2, 0.0),
        2: (q, np.arctan(d3 / d1), np.arctan(d3 / (np.sqrt(2) * d1)), 0.0),
        3: (np.pi / 2, np.arctan(d3 / (np.sqrt(2) * d1)), q, 0.0),
        4: (q + np.arctan(a / d1), np.arctan(d3 / np.sqrt(d1**2 + a**2)), np.arctan(d1 / a), 0.0),
    }[m]
    return {"D": d, "H": h, "Dp": dp, "Hp": h}


@dataclass(frozen=True)
class LinkTable:
    """Per-RIS LinkSpecs for the legitimate (D, H) and adversary (Dp, Hp) links."""

    D: tuple
    H: tuple
    Dp: tuple
    Hp: tuple

    @property
    def n_ris(self) -> int:
        return len(self.D)


def build_link_table(topology: Topology, rician: float = 4.0, rician_adv: float = 0.8,
                     scatterers: int = 5, scatterers_adv: int | None = None,
                     spread: float = np.pi / 6, d_e: float = 0.5, d_s: float = 0.5) -> LinkTable:
    """LinkSpecs for the RISs selected in ``topology`` using the tabulated angles."""
    sc_adv = scatterers if scatterers_adv is None else scatterers_adv
    out = {"D": [], "H": [], "Dp": [], "Hp": []}
    for m in topology.ris:
        dist = table_distances(topology.d1, topology.d2, topology.d3, m)
        angles = _table_angles(topology.d1, topology.d2, topology.d3, m)
        for kind in out:
            adv = kind in ("Dp", "Hp")
            el_a, az_a, el_d, az_d = angles[kind]
            out[kind].append(LinkSpec(
                distance=float(dist[kind]),
                rician_factor=rician_adv if adv else rician,
                aoa_elev=el_a, aoa_azim=az_a, aod_elev=el_d, aod_azim=az_d,
                scatterers=sc_adv if adv else scatterers,
                spread_e=spread, spread_m=spread, spread_s=spread, d_e=d_e, d_s=d_s,
            ))
    return LinkTable(**{k: tuple(v) for k, v in out.items()})


def with_scatterers(table: LinkTable, sc: int) -> LinkTable:
    return LinkTable(*(tuple(replace(l, scatterers=sc) for l in links)
                       for links in (table.D, table.H, table.Dp, table.Hp)))
