"""Truncated bivariate Taylor jets for forward-mode differentiation.

A jet of order K stores the normalized Taylor coefficients

    c[i, j] = d^(i+j) f / dx^i dy^j / (i! j!)

for every monomial with i + j <= K, over an arbitrary numpy batch shape.
Arithmetic truncates at order K, so propagating seeded variables through
an expression yields exact partial derivatives up to order K (no finite
differences involved).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DomainError, NonDifferentiable


@lru_cache(maxsize=None)
def monomials(order: int) -> tuple[tuple[int, int], ...]:
    return tuple((d - j, j) for d in range(order + 1) for j in range(d + 1))


@lru_cache(maxsize=None)
def _index(order: int) -> dict:
    return {m: k for k, m in enumerate(monomials(order))}


@lru_cache(maxsize=None)
def _product_table(order: int) -> tuple[tuple[int, int, int], ...]:
    mons = monomials(order)
    idx = _index(order)
    table = []
    for a, (ia, ja) in enumerate(mons):
        for b, (ib, jb) in enumerate(mons):
            if ia + ja + ib + jb <= order:
                table.append((idx[(ia + ib, ja + jb)], a, b))
    return tuple(sorted(table))


class Jet:
    """Order-K jet in the two variables (x, y)."""

    __slots__ = ("c", "order")
    __array_priority__ = 100  # make ndarray <op> Jet defer to Jet

    def __init__(self, coeffs: np.ndarray, order: int):
        self.c = coeffs
        self.order = order

    # -- construction ---------------------------------------------------------

    @classmethod
    def variable(cls, value, which: str, order: int) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros((len(monomials(order)),) + value.shape)
        c[0] = value
        if order >= 1:
            c[1 if which == "x" else 2] = 1.0
        return cls(c, order)

    @classmethod
    def constant(cls, value, order: int, shape=()) -> "Jet":
        c = np.zeros((len(monomials(order)),) + tuple(shape))
        c[0] = value
        return cls(c, order)

    # -- access ---------------------------------------------------------------

    @property
    def value(self) -> np.ndarray:
        return self.c[0]

    def partial(self, i: int, j: int) -> np.ndarray:
        """The partial derivative d^(i+j)/dx^i dy^j."""
        return self.c[_index(self.order)[(i, j)]] * (factorial(i) * factorial(j))

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(np.asarray(other, dtype=float), self.order, np.shape(self.c[0]))

    # -- arithmetic -----------------------------------------------------------

    def __neg__(self):
        return Jet(-self.c, self.order)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.c + other.c, self.order)
        c = self.c.copy()
        c[0] = c[0] + other
        return Jet(c, self.order)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            return Jet(self.c - other.c, self.order)
        return self + (-np.asarray(other, dtype=float))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * other, self.order)
        a, b = self.c, other.c
        shape = np.broadcast_shapes(a.shape[1:], b.shape[1:])
        out = np.zeros((a.shape[0],) + shape)
        for k, i, j in _product_table(self.order):
            out[k] += a[i] * b[j]
        return Jet(out, self.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / other, self.order)
        return self * reciprocal(other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __repr__(self):
        return f"Jet(order={self.order}, value={self.c[0]!r})"


def _compose(u: Jet, derivs: list) -> Jet:
    """g(u) from the derivatives g^(k)(u0), k = 0..order."""
    delta = Jet(u.c.copy(), u.order)
    delta.c[0] = 0.0
    out = Jet.constant(derivs[0], u.order, np.shape(u.c[0]))
    power = None
    for k in range(1, u.order + 1):
        power = delta if power is None else power * delta
        out = out + power * (derivs[k] / factorial(k))
    return out


def reciprocal(u: Jet) -> Jet:
    u0 = u.c[0]
    if np.any(u0 == 0.0):
        raise DomainError("division by zero")
    return _compose(u, [(-1.0) ** k * factorial(k) / u0 ** (k + 1) for k in range(u.order + 1)])


def power(u: Jet, p: float) -> Jet:
    u0 = u.c[0]
    is_int = float(p).is_integer()
    if is_int and 0 <= p <= 64:
        # repeated squaring: far cheaper than a Taylor composition
        k = int(p)
        result = Jet.constant(1.0, u.order, np.shape(u0))
        base = u
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result
    if is_int and p >= 0:
        derivs = []
        for k in range(u.order + 1):
            if k > p:
                derivs.append(np.zeros_like(u0))
                continue
            coef = np.prod([p - i for i in range(k)]) if k else 1.0
            derivs.append(coef * u0 ** (p - k))
        return _compose(u, derivs)
    if is_int:
        if np.any(u0 == 0.0):
            raise DomainError("zero raised to a negative power")
    else:
        if np.any(u0 < 0.0):
            raise DomainError("non-integer power of a negative number")
    zero = u0 == 0.0
    if np.any(zero):
        if p < 0:
            raise DomainError("zero raised to a negative power")
        varying = u.c[1:][:, zero] if np.ndim(u0) else u.c[1:]
        if np.any(varying != 0.0):
            raise NonDifferentiable("non-integer power is not differentiable at 0")
    safe = np.where(zero, 1.0, u0)
    derivs = []
    coef = 1.0
    for k in range(u.order + 1):
        term = coef * safe ** (p - k)
        derivs.append(np.where(zero, 0.0 if k or p > 0 else 1.0, term))
        coef *= p - k
    return _compose(u, derivs)


def exp(u: Jet) -> Jet:
    e = np.exp(u.c[0])
    return _compose(u, [e] * (u.order + 1))


def log(u: Jet) -> Jet:
    u0 = u.c[0]
    if np.any(u0 <= 0.0):
        raise DomainError("log of a non-positive number")
    derivs = [np.log(u0)]
    for k in range(1, u.order + 1):
        derivs.append((-1.0) ** (k - 1) * factorial(k - 1) / u0 ** k)
    return _compose(u, derivs)


def sqrt(u: Jet) -> Jet:
    return power(u, 0.5)


def _cyclic(u: Jet, cycle) -> Jet:
    vals = [f(u.c[0]) for f in cycle]
    return _compose(u, [vals[k % len(vals)] for k in range(u.order + 1)])


def sin(u: Jet) -> Jet:
    return _cyclic(u, (np.sin, np.cos, lambda v: -np.sin(v), lambda v: -np.cos(v)))


def cos(u: Jet) -> Jet:
    return _cyclic(u, (np.cos, lambda v: -np.sin(v), lambda v: -np.cos(v), np.sin))


def sinh(u: Jet) -> Jet:
    return _cyclic(u, (np.sinh, np.cosh))


def cosh(u: Jet) -> Jet:
    return _cyclic(u, (np.cosh, np.sinh))


@lru_cache(maxsize=None)
def _tanh_polys(order: int):
    # d/du P(tanh u) = P'(t) (1 - t^2)
    polys = [np.array([0.0, 1.0])]
    for _ in range(order):
        polys.append(P.polymul(P.polyder(polys[-1]), [1.0, 0.0, -1.0]))
    return polys


def tanh(u: Jet) -> Jet:
    t = np.tanh(u.c[0])
    return _compose(u, [P.polyval(t, c) for c in _tanh_polys(u.order)])


@dataclass(frozen=True)
class Jet2:
    """Value, gradient and Hessian of a scalar field at one point."""

    v: float
    dx: float
    dy: float
    dxx: float
    dxy: float
    dyy: float

    @classmethod
    def from_jet(cls, jet: Jet) -> "Jet2":
        return cls(
            float(jet.partial(0, 0)),
            float(jet.partial(1, 0)),
            float(jet.partial(0, 1)),
            float(jet.partial(2, 0)),
            float(jet.partial(1, 1)),
            float(jet.partial(0, 2)),
        )

    def as_tuple(self) -> tuple:
        return (self.v, self.dx, self.dy, self.dxx, self.dxy, self.dyy)
