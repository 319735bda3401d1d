"""Truncated multivariate Taylor polynomials (jets).

A :class:`Jet` carries the Taylor coefficients of a scalar function at a
point, up to a fixed total degree.  Arithmetic on jets follows the product
and chain rules exactly, so polynomial and rational expressions evaluated on
jet-valued coordinates return exact derivatives (up to rounding).

Every jet lives in a :class:`JetSpace` which fixes the number of variables
and the maximal degree.  A jet may carry fewer valid orders than its space
(``order`` attribute), which happens after differentiation; arithmetic
propagates the minimum valid order.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np


class JetSpace:
    """Monomial bookkeeping for jets in ``nvars`` variables up to ``order``."""

    def __init__(self, nvars: int, order: int):
        self.nvars = nvars
        self.order = order
        monos = []
        for deg in range(order + 1):
            for combo in itertools.combinations_with_replacement(range(nvars), deg):
                alpha = [0] * nvars
                for i in combo:
                    alpha[i] += 1
                monos.append(tuple(alpha))
        self.monomials = monos
        self.index = {m: k for k, m in enumerate(monos)}
        self.size = len(monos)
        self.degree = np.array([sum(m) for m in monos])

        ii, jj, kk = [], [], []
        for i, a in enumerate(monos):
            for j, b in enumerate(monos):
                s = tuple(x + y for x, y in zip(a, b))
                k = self.index.get(s)
                if k is not None:
                    ii.append(i)
                    jj.append(j)
                    kk.append(k)
        self._mul = (np.array(ii), np.array(jj), np.array(kk))

        # d/dx_i maps coefficient of alpha + e_i (times alpha_i + 1) onto alpha
        self._deriv = []
        for i in range(nvars):
            src, dst, fac = [], [], []
            for k, a in enumerate(monos):
                up = list(a)
                up[i] += 1
                k_up = self.index.get(tuple(up))
                if k_up is not None:
                    src.append(k_up)
                    dst.append(k)
                    fac.append(up[i])
            self._deriv.append((np.array(src, dtype=int), np.array(dst, dtype=int),
                                np.array(fac, dtype=float)))

        self._unit = [self.index[tuple(1 if j == i else 0 for j in range(nvars))]
                      for i in range(nvars)] if order >= 1 else []

    def constant(self, value: float) -> "Jet":
        c = np.zeros(self.size)
        c[0] = value
        return Jet(self, c, self.order)

    def variables(self, point) -> list["Jet"]:
        """Coordinate jets ``x_i`` expanded about ``point``."""
        point = np.asarray(point, dtype=float)
        if point.shape != (self.nvars,):
            raise ValueError(f"expected a point with {self.nvars} coordinates")
        out = []
        for i, v in enumerate(point):
            c = np.zeros(self.size)
            c[0] = v
            if self.order >= 1:
                c[self._unit[i]] = 1.0
            out.append(Jet(self, c, self.order))
        return out


@lru_cache(maxsize=None)
def jet_space(nvars: int, order: int) -> JetSpace:
    return JetSpace(nvars, order)


class Jet:
    """Truncated Taylor polynomial of a scalar function.

    ``c[k]`` is the Taylor coefficient of monomial ``space.monomials[k]``,
    i.e. the partial derivative divided by ``alpha!``.
    """

    __slots__ = ("space", "c", "order")
    __array_priority__ = 1000

    def __init__(self, space: JetSpace, c: np.ndarray, order: int):
        self.space = space
        self.order = order
        if order < space.order:
            c = np.where(space.degree > order, 0.0, c)
        self.c = c

    # -- accessors ---------------------------------------------------------

    @property
    def value(self) -> float:
        return float(self.c[0])

    @property
    def grad(self) -> np.ndarray:
        if self.order < 1:
            raise ValueError("jet carries no first derivatives")
        return self.c[self.space._unit].copy()

    @property
    def hess(self) -> np.ndarray:
        if self.order < 2:
            raise ValueError("jet carries no second derivatives")
        n = self.space.nvars
        h = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                alpha = [0] * n
                alpha[i] += 1
                alpha[j] += 1
                k = self.space.index[tuple(alpha)]
                h[i, j] = self.c[k] * (2.0 if i == j else 1.0)
        return h

    def derivative(self, alpha) -> float:
        """Partial derivative of multi-index ``alpha`` at the base point."""
        alpha = tuple(alpha)
        if sum(alpha) > self.order:
            raise ValueError("requested derivative exceeds the jet order")
        k = self.space.index[alpha]
        return float(self.c[k] * math.prod(math.factorial(a) for a in alpha))

    def diff(self, i: int) -> "Jet":
        """Jet of the partial derivative along variable ``i`` (order drops by one)."""
        if self.order < 1:
            raise ValueError("cannot differentiate an order-0 jet")
        src, dst, fac = self.space._deriv[i]
        c = np.zeros(self.space.size)
        c[dst] = self.c[src] * fac
        return Jet(self.space, c, self.order - 1)

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.space is not self.space:
                raise ValueError("jets from different spaces")
            return other
        return Jet(self.space, _const_coeffs(self.space, float(other)), self.space.order)

    def __add__(self, other):
        other = self._coerce(other)
        return Jet(self.space, self.c + other.c, min(self.order, other.order))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        return Jet(self.space, self.c - other.c, min(self.order, other.order))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return Jet(self.space, -self.c, self.order)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.space, self.c * float(other), self.order)
        other = self._coerce(other)
        ii, jj, kk = self.space._mul
        c = np.bincount(kk, weights=self.c[ii] * other.c[jj], minlength=self.space.size)
        return Jet(self.space, c, min(self.order, other.order))

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        a0 = self.c[0]
        if a0 == 0.0:
            raise ZeroDivisionError("jet with zero constant term")
        h = Jet(self.space, -self.c / a0, self.order)
        h.c[0] = 0.0
        # 1/a = (1/a0) * sum_k (-(a - a0)/a0)^k, nilpotent beyond the order
        total = self.space.constant(1.0)
        term = self.space.constant(1.0)
        for _ in range(self.order):
            term = term * h
            total = total + term
        return Jet(self.space, total.c / a0, self.order)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.space, self.c / float(other), self.order)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * float(other)

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers are supported")
        out = self.space.constant(1.0)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return Jet(self.space, out.c, min(out.order, self.order))

    def __repr__(self):
        return f"Jet(value={self.value:.6g}, order={self.order})"


def _const_coeffs(space: JetSpace, value: float) -> np.ndarray:
    c = np.zeros(space.size)
    c[0] = value
    return c


def as_jet(space: JetSpace, x) -> Jet:
    if isinstance(x, Jet):
        return x
    return space.constant(float(x))


def stack(jets, space: JetSpace | None = None) -> np.ndarray:
    """Coefficient array of a nested list of jets (and constants).

    The trailing axis indexes monomials.
    """
    arr = np.asarray(jets, dtype=object)
    if space is None:
        space = next(j.space for j in arr.flat if isinstance(j, Jet))
    out = np.empty(arr.shape + (space.size,))
    for idx in np.ndindex(arr.shape):
        out[idx] = as_jet(space, arr[idx]).c
    return out


def derivatives(coeffs: np.ndarray, space: JetSpace, upto: int = 2):
    """Value, gradient and Hessian arrays from a stacked coefficient array.

    Returns ``[f, df, ddf]`` truncated to ``upto`` with derivative axes
    appended last, e.g. ``df[..., i] = d f / d x_i``.
    """
    n = space.nvars
    out = [coeffs[..., 0].copy()]
    if upto >= 1:
        out.append(coeffs[..., space._unit])
    if upto >= 2:
        h = np.empty(coeffs.shape[:-1] + (n, n))
        for i in range(n):
            for j in range(n):
                alpha = [0] * n
                alpha[i] += 1
                alpha[j] += 1
                k = space.index[tuple(alpha)]
                h[..., i, j] = coeffs[..., k] * (2.0 if i == j else 1.0)
        out.append(h)
    return out
