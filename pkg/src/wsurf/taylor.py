"""Truncated bivariate Taylor arithmetic.

A :class:`Jet` holds the Taylor coefficients of a function of two parameters
``(s, t)`` about a batch of base points, truncated at total degree ``order``.
Coefficient ``c[i, j]`` multiplies ``ds**i * dt**j``, so the partial
derivative ``d^(i+j) f / ds^i dt^j`` equals ``i! j! c[i, j]``.

Arithmetic on jets is exact up to floating-point rounding, which makes them a
convenient way to push closed-form immersions through the geometry pipeline
without finite differences.
"""

from __future__ import annotations

from math import factorial

import numpy as np

_MASKS: dict[int, np.ndarray] = {}


def _mask(order):
    m = _MASKS.get(order)
    if m is None:
        i, j = np.indices((order + 1, order + 1))
        m = (i + j) <= order
        _MASKS[order] = m
    return m


def _falling(p, k):
    out = 1.0
    for m in range(k):
        out *= p - m
    return out


class Jet:
    """Truncated Taylor polynomial in ``(ds, dt)`` over a batch of points."""

    __slots__ = ("c", "order")
    __array_priority__ = 100

    def __init__(self, c, order):
        self.c = c
        self.order = order

    # -- construction -----------------------------------------------------
    @classmethod
    def constant(cls, value, order, shape=()):
        value = np.asarray(value)
        if value.dtype.kind != "f":
            value = value.astype(float)
        value = np.broadcast_to(value, shape)
        c = np.zeros((order + 1, order + 1) + value.shape, dtype=value.dtype)
        c[0, 0] = value
        return cls(c, order)

    @classmethod
    def variable(cls, x0, axis, order):
        """The coordinate function ``s`` (axis 0) or ``t`` (axis 1) at ``x0``."""
        x0 = np.asarray(x0)
        if x0.dtype.kind != "f":
            x0 = x0.astype(float)
        c = np.zeros((order + 1, order + 1) + x0.shape, dtype=x0.dtype)
        c[0, 0] = x0
        if order >= 1:
            if axis == 0:
                c[1, 0] = 1.0
            else:
                c[0, 1] = 1.0
        return cls(c, order)

    @classmethod
    def from_derivatives(cls, derivs, order):
        """Build from a mapping ``(a, b) -> d^(a+b) f / ds^a dt^b``."""
        first = np.asarray(next(iter(derivs.values())))
        dtype = first.dtype if first.dtype.kind == "f" else float
        c = np.zeros((order + 1, order + 1) + first.shape, dtype=dtype)
        for (a, b), v in derivs.items():
            if a + b <= order:
                c[a, b] = np.asarray(v) / (factorial(a) * factorial(b))
        return cls(c, order)

    # -- access -----------------------------------------------------------
    @property
    def value(self):
        return self.c[0, 0]

    @property
    def shape(self):
        return self.c.shape[2:]

    def deriv(self, a, b):
        if a + b > self.order:
            raise ValueError(f"derivative ({a},{b}) exceeds jet order {self.order}")
        return self.c[a, b] * (factorial(a) * factorial(b))

    def ds(self):
        """Partial derivative in ``s``; the result has order ``order - 1``."""
        n = self.order
        if n == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        k = np.arange(1, n + 1).reshape((n, 1) + (1,) * len(self.shape))
        c = self.c[1:, :n] * k
        return Jet(c * _mask(n - 1).reshape(_mask(n - 1).shape + (1,) * len(self.shape)), n - 1)

    def dt(self):
        n = self.order
        if n == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        k = np.arange(1, n + 1).reshape((1, n) + (1,) * len(self.shape))
        c = self.c[:n, 1:] * k
        return Jet(c * _mask(n - 1).reshape(_mask(n - 1).shape + (1,) * len(self.shape)), n - 1)

    def truncate(self, order):
        if order >= self.order:
            return self
        return Jet(self.c[: order + 1, : order + 1].copy(), order)

    def __getitem__(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Jet(self.c[(slice(None), slice(None)) + idx], self.order)

    # -- arithmetic -------------------------------------------------------
    def _expand(self, ndim):
        extra = ndim - len(self.shape)
        if extra <= 0:
            return self.c
        return self.c.reshape(self.c.shape + (1,) * extra)

    def _coerce(self, other):
        if not isinstance(other, Jet):
            other = Jet.constant(other, self.order, np.shape(other))
        n = min(self.order, other.order)
        a, b = self.truncate(n), other.truncate(n)
        nd = max(len(a.shape), len(b.shape))
        return a._expand(nd), b._expand(nd), n

    def __add__(self, other):
        if np.isscalar(other):
            c = self.c.copy()
            c[0, 0] += other
            return Jet(c, self.order)
        a, b, n = self._coerce(other)
        return Jet(a + b, n)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c, self.order)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            return Jet(self.c * other, self.order)
        a, b, n = self._coerce(other)
        batch = np.broadcast_shapes(a.shape[2:], b.shape[2:])
        out = np.zeros((n + 1, n + 1) + batch, dtype=np.result_type(a, b))
        for i in range(n + 1):
            for j in range(n + 1 - i):
                out[i:, j:] += a[i, j] * b[: n + 1 - i, : n + 1 - j]
        out *= _mask(n).reshape(_mask(n).shape + (1,) * len(batch))
        return Jet(out, n)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if np.isscalar(other):
            return Jet(self.c / other, self.order)
        if not isinstance(other, Jet):
            other = Jet.constant(other, self.order, np.shape(other))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) and p >= 0:
            out = Jet.constant(1.0, self.order, self.shape)
            base = self
            k = int(p)
            while k:
                if k & 1:
                    out = out * base
                base = base * base
                k >>= 1
            return out
        return self.power(float(p))

    # -- elementary functions ---------------------------------------------
    def compose(self, derivs):
        """Apply a univariate function given its derivatives at the base value.

        ``derivs[k]`` must hold ``f^(k)(x0)`` for ``k = 0..order``.
        """
        n = self.order
        xi = Jet(self.c.copy(), n)
        xi.c[0, 0] = 0.0
        out = Jet.constant(derivs[0], n, np.broadcast_shapes(self.shape, np.shape(derivs[0])))
        term = None
        for k in range(1, n + 1):
            term = xi if term is None else term * xi
            out = out + term * (np.asarray(derivs[k]) / factorial(k))
        return out

    def power(self, p):
        x0 = self.value
        return self.compose([_falling(p, k) * x0 ** (p - k) for k in range(self.order + 1)])

    def reciprocal(self):
        return self.power(-1.0)

    def sqrt(self):
        return self.power(0.5)

    def exp(self):
        e = np.exp(self.value)
        return self.compose([e] * (self.order + 1))

    def log(self):
        x0 = self.value
        d = [np.log(x0)] + [(-1.0) ** (k - 1) * factorial(k - 1) * x0 ** (-k) for k in range(1, self.order + 1)]
        return self.compose(d)

    def sin(self):
        s, c = np.sin(self.value), np.cos(self.value)
        cyc = [s, c, -s, -c]
        return self.compose([cyc[k % 4] for k in range(self.order + 1)])

    def cos(self):
        s, c = np.sin(self.value), np.cos(self.value)
        cyc = [c, -s, -c, s]
        return self.compose([cyc[k % 4] for k in range(self.order + 1)])

    def sinh(self):
        s, c = np.sinh(self.value), np.cosh(self.value)
        return self.compose([s if k % 2 == 0 else c for k in range(self.order + 1)])

    def cosh(self):
        s, c = np.sinh(self.value), np.cosh(self.value)
        return self.compose([c if k % 2 == 0 else s for k in range(self.order + 1)])


def as_jet(x, order, shape=()):
    return x if isinstance(x, Jet) else Jet.constant(x, order, shape)


# Helpers that accept either jets or plain arrays, so closed-form immersions
# can be written once and evaluated on both.
def sin(x):
    return x.sin() if isinstance(x, Jet) else np.sin(x)


def cos(x):
    return x.cos() if isinstance(x, Jet) else np.cos(x)


def sinh(x):
    return x.sinh() if isinstance(x, Jet) else np.sinh(x)


def cosh(x):
    return x.cosh() if isinstance(x, Jet) else np.cosh(x)


def exp(x):
    return x.exp() if isinstance(x, Jet) else np.exp(x)


def sqrt(x):
    return x.sqrt() if isinstance(x, Jet) else np.sqrt(x)


# -- small linear algebra on lists of jets ---------------------------------
def dot(u, v):
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


def cross(u, v):
    return [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]


def values(vec):
    """Stack the base values of a list of jets along the last axis."""
    return np.stack([x.value if isinstance(x, Jet) else np.asarray(x) for x in vec], axis=-1)
