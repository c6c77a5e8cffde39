"""Truncated univariate Taylor arithmetic (Taylor mode), batched over numpy axes.

A :class:`Jet` holds normalized coefficients ``c[k] = u^{(k)}(0) / k!`` of a
curve ``u(t)`` truncated at a fixed order.  Coefficient arrays have shape
``(order + 1, *batch)`` so one propagation handles many base points and probe
directions at once.

The elementary functions :func:`sin`, :func:`cos` and :func:`exp` dispatch on
their argument, so a map written against them works on floats, numpy arrays,
complex numbers and jets alike.
"""
from __future__ import annotations

import numpy as np

__all__ = ["Jet", "sin", "cos", "exp", "seed_line"]


class Jet:
    __slots__ = ("c",)
    __array_priority__ = 1000

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs, dtype=float)

    @property
    def order(self) -> int:
        return self.c.shape[0] - 1

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        c = np.zeros_like(self.c)
        c[0] = other
        return Jet(c)

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.c + other.c)
        c = self.c.copy()
        c[0] = c[0] + other
        return Jet(c)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * other)
        a, b = self.c, other.c
        out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
        for k in range(out.shape[0]):
            acc = a[0] * b[k]
            for j in range(1, k + 1):
                acc = acc + a[j] * b[k - j]
            out[k] = acc
        return Jet(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            raise NotImplementedError("division by a jet is not needed by any model map")
        return Jet(self.c / other)

    def __pow__(self, p: int):
        if not isinstance(p, int) or p < 0:
            raise NotImplementedError("only non-negative integer powers")
        out = self._coerce(1.0)
        for _ in range(p):
            out = out * self
        return out

    def sincos(self) -> tuple["Jet", "Jet"]:
        u = self.c
        s = np.zeros_like(u)
        c = np.zeros_like(u)
        s[0], c[0] = np.sin(u[0]), np.cos(u[0])
        for k in range(1, u.shape[0]):
            ds = np.zeros_like(u[0])
            dc = np.zeros_like(u[0])
            for j in range(1, k + 1):
                ds = ds + j * u[j] * c[k - j]
                dc = dc - j * u[j] * s[k - j]
            s[k], c[k] = ds / k, dc / k
        return Jet(s), Jet(c)

    def exp(self) -> "Jet":
        u = self.c
        e = np.zeros_like(u)
        e[0] = np.exp(u[0])
        for k in range(1, u.shape[0]):
            acc = np.zeros_like(u[0])
            for j in range(1, k + 1):
                acc = acc + j * u[j] * e[k - j]
            e[k] = acc / k
        return Jet(e)

    def derivative(self, k: int) -> np.ndarray:
        """k-th derivative of the underlying curve at t = 0."""
        return self.c[k] * float(np.prod(np.arange(1, k + 1)))

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, shape={self.c.shape[1:]})"


def sin(x):
    if isinstance(x, Jet):
        return x.sincos()[0]
    return np.sin(x)


def cos(x):
    if isinstance(x, Jet):
        return x.sincos()[1]
    return np.cos(x)


def exp(x):
    if isinstance(x, Jet):
        return x.exp()
    return np.exp(x)


def seed_line(x: np.ndarray, v: np.ndarray, order: int) -> list[Jet]:
    """Jets of the line ``x + t v``, one per coordinate.

    ``x`` and ``v`` have shape ``(*batch, m)``; each returned jet has batch
    shape ``batch``.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    x, v = np.broadcast_arrays(x, v)
    out = []
    for j in range(x.shape[-1]):
        c = np.zeros((order + 1,) + x.shape[:-1])
        c[0] = x[..., j]
        if order >= 1:
            c[1] = v[..., j]
        out.append(Jet(c))
    return out
