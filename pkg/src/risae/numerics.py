"""Complex linear algebra, special functions and seeded random streams.

Matrices are plain ``numpy.ndarray`` objects with ``complex128`` dtype. Every
function here is pure; the only stateful object is :class:`RngStream`, which
must have a single owner.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import NonHermitian, RankDeficient

log = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-10
RIDGE_COND_LIMIT = 1e12


@dataclass
class RngStream:
    """Reproducible random stream keyed by ``(seed, stream_id)``.

    ``stream_id`` may be an int or a tuple of ints; tuples give hierarchical
    sub-streams (e.g. ``(snr_index, block_index)``) whose draws do not depend
    on how work is split between threads.
    """

    seed: int
    stream_id: int | tuple = 0
    _gen: np.random.Generator | None = field(default=None, repr=False, compare=False)

    @property
    def gen(self) -> np.random.Generator:
        if self._gen is None:
            key = self.stream_id if isinstance(self.stream_id, tuple) else (self.stream_id,)
            ss = np.random.SeedSequence(int(self.seed), spawn_key=tuple(int(k) for k in key))
            self._gen = np.random.Generator(np.random.PCG64(ss))
        return self._gen

    def child(self, *ids: int) -> "RngStream":
        key = self.stream_id if isinstance(self.stream_id, tuple) else (self.stream_id,)
        return RngStream(self.seed, tuple(key) + tuple(int(i) for i in ids))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.gen
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def kronecker(a, b) -> np.ndarray:
    """Kronecker product; block ``(i, j)`` of the result is ``a[i, j] * b``."""
    a = np.atleast_2d(np.asarray(a))
    b = np.atleast_2d(np.asarray(b))
    return np.kron(a, b)


def hermitian_sqrt(r, return_clamped: bool = False):
    """Principal square root of a Hermitian positive semi-definite matrix.

    Negative eigenvalues (numerical indefiniteness) are clamped to zero. With
    ``return_clamped=True`` the number of clamped eigenvalues is returned as a
    second value.
    """
    r = np.asarray(r, dtype=complex)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise NonHermitian(f"matrix must be square, got shape {r.shape}")
    asym = np.max(np.abs(r - r.conj().T)) if r.size else 0.0
    if asym > HERMITIAN_TOL:
        raise NonHermitian(f"max |R - R^H| = {asym:.3e} exceeds {HERMITIAN_TOL:g}")
    w, v = np.linalg.eigh(0.5 * (r + r.conj().T))
    clamped = int(np.count_nonzero(w < 0))
    if clamped:
        log.debug("hermitian_sqrt clamped %d negative eigenvalue(s), min %.3e", clamped, w.min())
    q = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    q = 0.5 * (q + q.conj().T)
    return (q, clamped) if return_clamped else q


def least_squares_solve(c, rhs) -> np.ndarray:
    """Minimum-residual solution of ``c @ x ~= rhs`` through the normal equations.

    A ridge term ``1e-10 * trace(C^H C) / cols`` is added when the Gram matrix
    condition number exceeds 1e12.
    """
    c = np.asarray(c, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex)
    if c.ndim != 2:
        raise ValueError("coefficient matrix must be 2-D")
    rows, cols = c.shape
    if rows < cols:
        raise ValueError(f"need rows >= cols, got {rows}x{cols}")
    gram = c.conj().T @ c
    target = c.conj().T @ rhs
    if not np.all(np.isfinite(gram)):
        raise RankDeficient("non-finite Gram matrix")
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > RIDGE_COND_LIMIT:
        lam = 1e-10 * np.real(np.trace(gram)) / cols
        gram = gram + lam * np.eye(cols)
        log.debug("least_squares_solve: cond %.3e, ridge %.3e", cond, lam)
    try:
        x = np.linalg.solve(gram, target)
    except np.linalg.LinAlgError as exc:
        raise RankDeficient(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise RankDeficient("solution is not finite")
    return x


def q_function(x):
    """Gaussian tail probability Q(x) = erfc(x / sqrt(2)) / 2."""
    out = 0.5 * special.erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


def bessel_j0(x):
    """Bessel function of the first kind, order zero."""
    out = special.j0(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def complex_gaussian(rng, rows: int, cols: int) -> np.ndarray:
    """``rows x cols`` matrix of i.i.d. CN(0, 1) entries."""
    g = as_generator(rng)
    return (g.standard_normal((rows, cols)) + 1j * g.standard_normal((rows, cols))) / np.sqrt(2.0)


def complex_gaussian_array(rng, shape) -> np.ndarray:
    """CN(0, 1) entries for an arbitrary shape."""
    g = as_generator(rng)
    return (g.standard_normal(shape) + 1j * g.standard_normal(shape)) / np.sqrt(2.0)
