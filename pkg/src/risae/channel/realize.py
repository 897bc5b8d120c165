"""Per-symbol channel realizations and cascade aggregation.

:class:`ChannelModel` precomputes the deterministic parts of every link (LOS
matrices, correlation square roots, path gains) once; :meth:`ChannelModel.realize`
then draws independent small-scale fading for a batch of symbol slots.

The large-scale gain of each cascade is moved entirely onto its RIS-to-decoder
link: ``D_m`` is drawn with unit path gain and ``H_m`` carries
``omega_D * omega_H * g**2``. Every cascade ``H_m diag(c) D_m`` is unchanged
by this split, while the signal impinging on each RIS stays at order one (an
automatic gain control in front of the RIS controller). The receiver gain
``g`` is chosen so that, with uniformly random RIS phases and transmit power
``tx_power``, the mean received signal power per decoder antenna is one; the
SNR in dB is then ``-10 log10(noise_var)`` for the normalized noise variance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonUnitModulus
from ..numerics import as_generator
from .arrays import ArrayGeometry, los_component
from .fading import MobilityConfig, doppler_evolve, link_factors, nlos_realization, rician_link
from .topology import LinkTable


@dataclass
class ChannelRealization:
    """Links of ``n`` symbol slots, one list entry per RIS.

    Shapes: ``D[m]`` (n, N_m, K_e), ``H[m]`` (n, K_d, N_m), ``Dp[m]``
    (n, N_m, K_a), ``Hp[m]`` (n, K_d, N_m). ``H_true`` / ``Hp_true`` hold the
    mobility-evolved links actually experienced (None when static).
    """

    D: list
    H: list
    Dp: list | None = None
    Hp: list | None = None
    H_true: list | None = None
    Hp_true: list | None = None

    @property
    def n_symbols(self) -> int:
        return self.D[0].shape[0]

    @property
    def has_adversary(self) -> bool:
        return self.Dp is not None

    def take(self, idx) -> "ChannelRealization":
        pick = (lambda xs: None if xs is None else [x[idx] for x in xs])
        return ChannelRealization(pick(self.D), pick(self.H), pick(self.Dp), pick(self.Hp),
                                  pick(self.H_true), pick(self.Hp_true))

    @staticmethod
    def concat(parts) -> "ChannelRealization":
        def cat(name):
            first = getattr(parts[0], name)
            if first is None:
                return None
            return [np.concatenate([getattr(p, name)[m] for p in parts]) for m in range(len(first))]
        return ChannelRealization(*(cat(n) for n in ("D", "H", "Dp", "Hp", "H_true", "Hp_true")))


@dataclass
class CascadeSet:
    """Aggregated legitimate cascade ``O`` (n, K_d, K_e) and adversary cascade ``C`` (n, K_d, K_a)."""

    O: np.ndarray
    C: np.ndarray | None
    phases: list


class _Link:
    def __init__(self, spec, geom, side, n_ant):
        self.spec = spec
        self.los = los_component(spec, geom, side, n_ant)
        self.factors = link_factors(spec, geom, side, n_ant)
        self.gain = spec.path_gain
        self.draw_gain = self.gain

    def draw(self, rng, n):
        nlos = nlos_realization(self.factors, rng, n)
        return rician_link(self.spec, self.los[None], nlos, gain=self.draw_gain)


class ChannelModel:
    """Generator of per-symbol channel realizations for one deployment.

    Parameters
    ----------
    links : LinkTable
    geom : ArrayGeometry
    k_e, k_d, k_a : int
        Antenna counts of encoder, decoder and adversary.
    tx_power : float
        Encoder transmit power in watts (per symbol vector).
    adversary : bool
        Whether adversary links are drawn.
    mobility : MobilityConfig or None
        Decoder mobility; the decoder keeps the static links as its CSI while
        the received signal travels over the evolved links.
    """

    def __init__(self, links: LinkTable, geom: ArrayGeometry, k_e: int, k_d: int, k_a: int,
                 tx_power: float = 1.0, adversary: bool = True, mobility: MobilityConfig | None = None):
        self.links = links
        self.geom = geom
        self.k_e, self.k_d, self.k_a = k_e, k_d, k_a
        self.tx_power = tx_power
        self.adversary = adversary
        self.mobility = mobility
        self.n_ris = links.n_ris
        self.n_elements = geom.n_elements
        self._D = [_Link(s, geom, "encoder-to-ris", k_e) for s in links.D]
        self._H = [_Link(s, geom, "ris-to-decoder", k_d) for s in links.H]
        self._Dp = [_Link(s, geom, "encoder-to-ris", k_a) for s in links.Dp] if adversary else None
        self._Hp = [_Link(s, geom, "ris-to-decoder", k_d) for s in links.Hp] if adversary else None
        self.rx_power_ref = tx_power * sum(
            self.n_elements * d.gain * h.gain for d, h in zip(self._D, self._H))
        self.rx_gain = 1.0 / np.sqrt(self.rx_power_ref)
        pairs = list(zip(self._D, self._H))
        if adversary:
            pairs += list(zip(self._Dp, self._Hp))
        for d, h in pairs:
            d.draw_gain = 1.0
            h.draw_gain = d.gain * h.gain * self.rx_gain**2

    def snr_db_for_noise(self, noise_power_w: float) -> float:
        """Receiver SNR (dB) corresponding to an absolute noise power in watts."""
        return 10 * np.log10(self.rx_power_ref / noise_power_w)

    def realize(self, rng, n: int) -> ChannelRealization:
        g = as_generator(rng)
        D = [l.draw(g, n) for l in self._D]
        H = [l.draw(g, n) for l in self._H]
        Dp = Hp = None
        if self.adversary:
            Dp = [l.draw(g, n) for l in self._Dp]
            Hp = [l.draw(g, n) for l in self._Hp]
        real = ChannelRealization(D, H, Dp, Hp)
        mob = self.mobility
        if mob is not None and mob.zeta < 1.0:
            real.H_true = [doppler_evolve(h, mob, g, np.sqrt(l.draw_gain))
                           for h, l in zip(H, self._H)]
            if self.adversary:
                real.Hp_true = [doppler_evolve(h, mob, g, np.sqrt(l.draw_gain))
                                for h, l in zip(Hp, self._Hp)]
        return real


def _check_unit(coeffs, tol=1e-9):
    dev = np.max(np.abs(np.abs(coeffs) - 1.0)) if np.size(coeffs) else 0.0
    if dev > tol:
        raise NonUnitModulus(f"reflection coefficient modulus deviates from 1 by {dev:.3e}")


def cascade(H, D, coeffs) -> np.ndarray:
    """``sum_m H_m diag(c_m) D_m`` over per-RIS lists of stacked matrices."""
    out = None
    for h, d, c in zip(H, D, coeffs):
        term = h @ (c[..., :, None] * d)
        out = term if out is None else out + term
    return out


def aggregate(real: ChannelRealization, coeffs) -> CascadeSet:
    """Legitimate and adversary cascades for per-RIS unit-modulus coefficients.

    ``coeffs[m]`` has shape (n, N_m) (or (N_m,), broadcast over symbols).
    """
    coeffs = [np.asarray(c, dtype=complex) for c in coeffs]
    if len(coeffs) != len(real.D):
        raise ValueError(f"expected {len(real.D)} coefficient vectors, got {len(coeffs)}")
    for c, d in zip(coeffs, real.D):
        if c.shape[-1] != d.shape[-2]:
            raise ValueError(f"coefficient length {c.shape[-1]} != RIS size {d.shape[-2]}")
        _check_unit(c)
    O = cascade(real.H, real.D, coeffs)
    C = cascade(real.Hp, real.Dp, coeffs) if real.has_adversary else None
    return CascadeSet(O, C, coeffs)
