"""Truncated bivariate Taylor arithmetic.

A :class:`Jet` stores the coefficients ``c[i, j]`` of ``x**i * w**j`` for
``i + j <= order``. Arithmetic is exact up to the truncation order, which is
enough to expand the vector field along a polynomial surface without symbolic
algebra or finite differences.
"""

from __future__ import annotations

import math
from typing import Union

import numpy as np

Number = Union[int, float]


def _mask(order: int) -> np.ndarray:
    i, j = np.indices((order + 1, order + 1))
    return (i + j) <= order


class Jet:
    __slots__ = ("c", "order")
    __array_priority__ = 100

    def __init__(self, c: np.ndarray, order: int):
        self.order = order
        self.c = np.where(_mask(order), np.asarray(c, dtype=float), 0.0)

    @classmethod
    def constant(cls, value: float, order: int) -> "Jet":
        c = np.zeros((order + 1, order + 1))
        c[0, 0] = value
        return cls(c, order)

    @classmethod
    def variable(cls, axis: int, order: int, value: float = 0.0) -> "Jet":
        c = np.zeros((order + 1, order + 1))
        c[0, 0] = value
        if order >= 1:
            c[(1, 0) if axis == 0 else (0, 1)] = 1.0
        return cls(c, order)

    @classmethod
    def from_coeffs(cls, coeffs: dict, order: int, constant: float = 0.0) -> "Jet":
        c = np.zeros((order + 1, order + 1))
        c[0, 0] = constant
        for (i, j), v in coeffs.items():
            if i + j <= order:
                c[i, j] += v
        return cls(c, order)

    @property
    def value(self) -> float:
        return float(self.c[0, 0])

    def degree_part(self, n: int) -> np.ndarray:
        """Degree-n coefficients; entry ``i`` multiplies ``x**i * w**(n - i)``."""
        return np.array([self.c[i, n - i] for i in range(n + 1)])

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.order != self.order:
                raise ValueError("jet orders differ")
            return other
        return Jet.constant(float(other), self.order)

    def __add__(self, other):
        return Jet(self.c + self._coerce(other).c, self.order)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c, self.order)

    def __sub__(self, other):
        return Jet(self.c - self._coerce(other).c, self.order)

    def __rsub__(self, other):
        return Jet(self._coerce(other).c - self.c, self.order)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * float(other), self.order)
        other = self._coerce(other)
        n = self.order
        out = np.zeros((n + 1, n + 1))
        for i, j in zip(*np.nonzero(self.c)):
            out[i:, j:] += self.c[i, j] * other.c[: n + 1 - i, : n + 1 - j]
        return Jet(out, n)

    __rmul__ = __mul__

    def _series(self, derivs) -> "Jet":
        # f(c0 + d) = sum_k f^(k)(c0)/k! d**k, with d nilpotent beyond `order`
        c0 = self.value
        d = self - c0
        out = Jet.constant(derivs[0], self.order)
        term = Jet.constant(1.0, self.order)
        for k in range(1, self.order + 1):
            term = term * d
            out = out + term * (derivs[k] / math.factorial(k))
        return out

    def reciprocal(self) -> "Jet":
        c0 = self.value
        if c0 == 0.0:
            raise ZeroDivisionError("reciprocal of a jet with zero constant term")
        derivs = [math.factorial(k) * (-1) ** k * c0 ** (-1 - k) for k in range(self.order + 1)]
        return self._series(derivs)

    def sqrt(self) -> "Jet":
        c0 = self.value
        if not c0 > 0.0:
            raise ValueError("sqrt of a jet with non-positive constant term")
        derivs = []
        coef = 1.0
        for k in range(self.order + 1):
            derivs.append(coef * c0 ** (0.5 - k))
            coef *= 0.5 - k
        return self._series(derivs)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / float(other), self.order)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * float(other)

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        out = Jet.constant(1.0, self.order)
        for _ in range(k):
            out = out * self
        return out

    def derivative(self, axis: int) -> "Jet":
        """Partial derivative; the top-degree coefficients of the result are zero."""
        n = self.order
        out = np.zeros((n + 1, n + 1))
        if axis == 0:
            out[:-1, :] = self.c[1:, :] * np.arange(1, n + 1)[:, None]
        else:
            out[:, :-1] = self.c[:, 1:] * np.arange(1, n + 1)[None, :]
        return Jet(out, n)

    def __call__(self, x, w):
        x = np.asarray(x, dtype=float)
        w = np.asarray(w, dtype=float)
        out = np.zeros(np.broadcast(x, w).shape)
        for i, j in zip(*np.nonzero(self.c)):
            out = out + self.c[i, j] * x**i * w**j
        return float(out) if out.ndim == 0 else out

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, c={self.c!r})"


def jet_sqrt(v):
    if isinstance(v, Jet):
        return v.sqrt()
    return np.sqrt(v)
