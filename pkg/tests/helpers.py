"""Shared test utilities: finite differences, error norms and loop oracles."""

import cmath
import math

import numpy as np


def numeric_grad(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of scalar ``f`` at ``x`` (real or complex).

    For complex ``x`` the result is ``dL/dRe + 1j dL/dIm``, matching the tape's
    convention.
    """
    x = np.array(x, dtype=complex if np.iscomplexobj(x) else float)
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = g.reshape(-1)
    steps = [h, 1j * h] if np.iscomplexobj(x) else [h]
    for i in range(flat.size):
        for s in steps:
            old = flat[i]
            flat[i] = old + s
            fp = f(x)
            flat[i] = old - s
            fm = f(x)
            flat[i] = old
            d = (fp - fm) / (2 * h)
            gflat[i] += d if s == h else 1j * d
    return g


def rel_error(a, b, floor: float = 1e-6) -> float:
    """Max elementwise |a - b| / max(|b|, floor) style error on the whole array."""
    a = np.asarray(a)
    b = np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), floor))


def corr_loop(sc, d, psi, size):
    """Direct double-loop summation of the correlation formula."""
    q = (sc - 1) // 2
    out = np.zeros((size, size), dtype=complex)
    for i in range(size):
        for j in range(size):
            acc = 0j
            for t in range(-q, q + 1):
                v = t * psi / (1 - sc) if sc > 1 else 0.0
                acc += cmath.exp(1j * 2 * math.pi * d * (i - j) * math.sin(v))
            out[i, j] = acc / sc
    return out
