"""Reverse-mode differentiation over a linear tape of primitive operations.

A :class:`Var` wraps a numpy array. Primitive functions in this module take
their operands as ``Var`` objects plus an optional :class:`Tape`; when a tape
is given and some operand requires a gradient, the primitive appends one
record ``(output, parents, backward_fn)``. :meth:`Tape.backward` walks the
records once, newest first.

Gradient convention for complex arrays: the gradient of the real loss ``L``
with respect to ``z`` is ``dL/dRe(z) + 1j * dL/dIm(z)``, so that
``dL = Re(sum(conj(G) * dz))``. Real arrays carry ordinary real gradients.
"""

from __future__ import annotations

import numpy as np

from ..errors import TapeExhausted


class Var:
    __slots__ = ("value", "grad", "requires_grad", "name")

    def __init__(self, value, requires_grad: bool = False, name: str | None = None):
        self.value = np.asarray(value)
        self.grad = None
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Var({self.name or ''}{self.value.shape}, requires_grad={self.requires_grad})"


def const(value) -> Var:
    return value if isinstance(value, Var) else Var(value)


class Tape:
    def __init__(self):
        self._records = []
        self._exhausted = False

    def __len__(self):
        return len(self._records)

    def record(self, value, parents, backward) -> Var:
        out = Var(value, requires_grad=True)
        self._records.append((out, parents, backward))
        return out

    def backward(self, out: Var, seed=None) -> dict:
        """Propagate ``seed`` (default ones) from ``out`` to every leaf needing a gradient.

        Returns ``{leaf_var: gradient}`` and also stores each gradient on
        ``leaf_var.grad``. A tape can be traversed once.
        """
        if self._exhausted:
            raise TapeExhausted("tape already consumed; re-run the forward pass")
        self._exhausted = True
        grads = {id(out): np.ones_like(out.value) if seed is None else np.asarray(seed)}
        produced = set()
        leaves = {}
        for rec_out, parents, backward in reversed(self._records):
            produced.add(id(rec_out))
            g = grads.pop(id(rec_out), None)
            if g is None:
                continue
            for p, pg in zip(parents, backward(g)):
                if pg is None or not p.requires_grad:
                    continue
                leaves.setdefault(id(p), p)
                prev = grads.get(id(p))
                grads[id(p)] = pg if prev is None else prev + pg
        result = {}
        for key, var in leaves.items():
            if key in produced:
                continue
            var.grad = grads.get(key, np.zeros_like(var.value))
            result[var] = var.grad
        if out.requires_grad and id(out) not in produced:
            out.grad = grads.get(id(out))
            result[out] = out.grad
        return result


def _op(tape, value, parents, backward) -> Var:
    if tape is None or not any(p.requires_grad for p in parents):
        return Var(value)
    return tape.record(value, parents, backward)


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# ---------------------------------------------------------------- elementwise

def add(a: Var, b: Var, tape=None) -> Var:
    return _op(tape, a.value + b.value, (a, b),
               lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def scale(a: Var, s: float, tape=None) -> Var:
    return _op(tape, a.value * s, (a,), lambda g: (g * np.conj(s),))


def mul(a: Var, b: Var, tape=None) -> Var:
    """Elementwise product (real or complex, broadcasting)."""
    return _op(tape, a.value * b.value, (a, b),
               lambda g: (_unbroadcast(g * np.conj(b.value), a.shape),
                          _unbroadcast(g * np.conj(a.value), b.shape)))


def relu(x: Var, tape=None) -> Var:
    mask = x.value > 0
    return _op(tape, np.where(mask, x.value, 0.0), (x,), lambda g: (g * mask,))


def exp_j(theta: Var, tape=None) -> Var:
    """Unit-modulus ``exp(1j * theta)`` of a real array."""
    y = np.exp(1j * theta.value)
    return _op(tape, y, (theta,), lambda g: (-np.imag(y * np.conj(g)),))


# ---------------------------------------------------------------- real <-> complex

def real_to_complex(x: Var, tape=None) -> Var:
    """(N, 2K) real -> (N, K) complex; first K columns are the real parts."""
    k = x.shape[-1] // 2
    z = x.value[..., :k] + 1j * x.value[..., k:]
    return _op(tape, z, (x,), lambda g: (np.concatenate([g.real, g.imag], axis=-1),))


def complex_features(parts, tape=None) -> Var:
    """Row-wise features ``[Re p0, Im p0, Re p1, Im p1, ...]`` from complex (N, ...) arrays."""
    n = parts[0].shape[0]
    flats = [p.value.reshape(n, -1) for p in parts]
    sizes = [f.shape[1] for f in flats]
    out = np.concatenate([np.concatenate([f.real, f.imag], axis=1) for f in flats], axis=1)

    def backward(g):
        res, pos = [], 0
        for p, s in zip(parts, sizes):
            gr = g[:, pos:pos + s]
            gi = g[:, pos + s:pos + 2 * s]
            res.append((gr + 1j * gi).reshape(p.shape))
            pos += 2 * s
        return tuple(res)

    return _op(tape, out, tuple(parts), backward)


# ---------------------------------------------------------------- linear algebra

def dense(x: Var, w: Var, b: Var, tape=None) -> Var:
    """Row-wise affine map ``x @ w.T + b`` for x of shape (N, in)."""
    y = x.value @ w.value.T + b.value
    return _op(tape, y, (x, w, b),
               lambda g: (g @ w.value, g.T @ x.value, g.sum(axis=0)))


def bmatmul(a: Var, b: Var, tape=None) -> Var:
    """Batched complex matmul ``a @ b`` over leading axes."""
    y = a.value @ b.value

    def backward(g):
        ga = g @ np.conj(np.swapaxes(b.value, -1, -2))
        gb = np.conj(np.swapaxes(a.value, -1, -2)) @ g
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _op(tape, y, (a, b), backward)


def bmatvec(a: Var, x: Var, tape=None) -> Var:
    """Batched ``a[n] @ x[n]`` with a (N, p, q) and x (N, q) or (q,)."""
    xv = x.value
    y = np.einsum("npq,...q->np", a.value, xv) if xv.ndim == 1 else np.einsum("npq,nq->np", a.value, xv)

    def backward(g):
        ga = g[:, :, None] * np.conj(xv)[..., None, :] if xv.ndim > 1 else g[:, :, None] * np.conj(xv)[None, None, :]
        gx = np.einsum("npq,np->nq", np.conj(a.value), g)
        if xv.ndim == 1:
            gx = gx.sum(axis=0)
        return ga, gx

    return _op(tape, y, (a, x), backward)


def row_scale(c: Var, d: Var, tape=None) -> Var:
    """``diag(c[n]) @ d[n]``: c (N, p), d (N, p, q)."""
    y = c.value[..., :, None] * d.value

    def backward(g):
        gc = np.sum(g * np.conj(d.value), axis=-1)
        gd = g * np.conj(c.value)[..., :, None]
        return _unbroadcast(gc, c.shape), _unbroadcast(gd, d.shape)

    return _op(tape, y, (c, d), backward)


def reshape(x: Var, shape, tape=None) -> Var:
    old = x.shape
    return _op(tape, x.value.reshape(shape), (x,), lambda g: (g.reshape(old),))


def sum_vars(vs, tape=None) -> Var:
    out = vs[0]
    for v in vs[1:]:
        out = add(out, v, tape)
    return out
