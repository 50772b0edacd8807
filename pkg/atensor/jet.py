#!/usr/bin/env python3
"""
Forward-mode jets over chart coordinates

A Jet carries a scalar value together with its gradient, Hessian and
(optionally) third-derivative tensor with respect to the n active chart
coordinates. Arithmetic propagates all carried orders exactly; mixing jets
of different orders truncates to the lower one.
"""

import math
import numbers
from dataclasses import dataclass
from typing import Any, Optional, Sequence, Tuple

import numpy as np

from .errors import EvaluationError


def _sym3(hess: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """H_ij g_k + H_ik g_j + H_jk g_i"""
    return (
        hess[:, :, None] * grad[None, None, :]
        + hess[:, None, :] * grad[None, :, None]
        + hess[None, :, :] * grad[:, None, None]
    )


def _falling(p: float, k: int) -> float:
    """p (p-1) ... (p-k+1)"""
    out = 1.0
    for i in range(k):
        out *= p - i
    return out


class Jet:
    """Scalar with derivatives up to order 1, 2 or 3"""

    __slots__ = ("value", "grad", "hess", "third")

    # numpy scalars must defer to the reflected operators below
    __array_ufunc__ = None

    def __init__(
        self,
        value: float,
        grad: np.ndarray,
        hess: Optional[np.ndarray] = None,
        third: Optional[np.ndarray] = None,
    ):
        if third is not None and hess is None:
            raise ValueError("third derivatives require a Hessian")
        self.value = float(value)
        self.grad = np.asarray(grad, dtype=float)
        self.hess = None if hess is None else np.asarray(hess, dtype=float)
        self.third = None if third is None else np.asarray(third, dtype=float)

    @classmethod
    def variable(cls, value: float, index: int, dim: int, order: int = 2) -> "Jet":
        """Seed for coordinate x^index"""
        if order not in (1, 2, 3):
            raise ValueError(f"Unsupported jet order: {order}")
        grad = np.zeros(dim)
        grad[index] = 1.0
        hess = np.zeros((dim, dim)) if order >= 2 else None
        third = np.zeros((dim, dim, dim)) if order >= 3 else None
        return cls(value, grad, hess, third)

    @classmethod
    def constant(cls, value: float, dim: int, order: int = 2) -> "Jet":
        hess = np.zeros((dim, dim)) if order >= 2 else None
        third = np.zeros((dim, dim, dim)) if order >= 3 else None
        return cls(value, np.zeros(dim), hess, third)

    @property
    def order(self) -> int:
        if self.hess is None:
            return 1
        if self.third is None:
            return 2
        return 3

    @property
    def dim(self) -> int:
        return self.grad.shape[0]

    def __repr__(self) -> str:
        return f"Jet(value={self.value!r}, order={self.order}, dim={self.dim})"

    # -- arithmetic -------------------------------------------------------

    def _compose(self, d0: float, d1: float, d2: float = 0.0, d3: float = 0.0) -> "Jet":
        """Chain rule for phi(self) given phi and its first three derivatives at value"""
        g = self.grad
        grad = d1 * g
        hess = third = None
        if self.hess is not None:
            hess = d2 * np.outer(g, g) + d1 * self.hess
        if self.third is not None:
            third = (
                d3 * g[:, None, None] * g[None, :, None] * g[None, None, :]
                + d2 * _sym3(self.hess, g)
                + d1 * self.third
            )
        return Jet(d0, grad, hess, third)

    def _scaled(self, factor: float, offset: float = 0.0) -> "Jet":
        return Jet(
            factor * self.value + offset,
            factor * self.grad,
            None if self.hess is None else factor * self.hess,
            None if self.third is None else factor * self.third,
        )

    def __neg__(self) -> "Jet":
        return self._scaled(-1.0)

    def __pos__(self) -> "Jet":
        return self

    def __add__(self, other: Any) -> "Jet":
        if isinstance(other, Jet):
            order = min(self.order, other.order)
            return Jet(
                self.value + other.value,
                self.grad + other.grad,
                self.hess + other.hess if order >= 2 else None,
                self.third + other.third if order >= 3 else None,
            )
        if isinstance(other, numbers.Real):
            return self._scaled(1.0, float(other))
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other: Any) -> "Jet":
        if isinstance(other, (Jet, numbers.Real)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other: Any) -> "Jet":
        if isinstance(other, numbers.Real):
            return self._scaled(-1.0, float(other))
        return NotImplemented

    def __mul__(self, other: Any) -> "Jet":
        if isinstance(other, Jet):
            order = min(self.order, other.order)
            f, g = self, other
            grad = f.value * g.grad + g.value * f.grad
            hess = third = None
            if order >= 2:
                hess = (
                    f.value * g.hess
                    + g.value * f.hess
                    + np.outer(f.grad, g.grad)
                    + np.outer(g.grad, f.grad)
                )
            if order >= 3:
                third = (
                    f.third * g.value
                    + _sym3(f.hess, g.grad)
                    + _sym3(g.hess, f.grad)
                    + f.value * g.third
                )
            return Jet(f.value * g.value, grad, hess, third)
        if isinstance(other, numbers.Real):
            return self._scaled(float(other))
        return NotImplemented

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        u = self.value
        if u == 0.0:
            raise EvaluationError("Division by a jet with zero value")
        return self._compose(1.0 / u, -1.0 / u**2, 2.0 / u**3, -6.0 / u**4)

    def __truediv__(self, other: Any) -> "Jet":
        if isinstance(other, Jet):
            return self * other.reciprocal()
        if isinstance(other, numbers.Real):
            if other == 0:
                raise EvaluationError("Division of a jet by zero")
            return self._scaled(1.0 / float(other))
        return NotImplemented

    def __rtruediv__(self, other: Any) -> "Jet":
        if isinstance(other, numbers.Real):
            return self.reciprocal() * float(other)
        return NotImplemented

    def _power(self, p: float) -> "Jet":
        u = self.value
        coeffs = []
        for k in range(4):
            c = _falling(p, k)
            coeffs.append(0.0 if c == 0.0 else c * np.power(u, p - k))
        return self._compose(*coeffs)

    def __pow__(self, other: Any) -> "Jet":
        if isinstance(other, Jet):
            return (other * self.log()).exp()
        if isinstance(other, numbers.Real):
            p = float(other)
            if p == 2.0:
                return self * self
            return self._power(p)
        return NotImplemented

    def __rpow__(self, other: Any) -> "Jet":
        if isinstance(other, numbers.Real):
            return (self * math.log(float(other))).exp()
        return NotImplemented

    # -- elementary functions --------------------------------------------

    def sin(self) -> "Jet":
        s, c = math.sin(self.value), math.cos(self.value)
        return self._compose(s, c, -s, -c)

    def cos(self) -> "Jet":
        s, c = math.sin(self.value), math.cos(self.value)
        return self._compose(c, -s, -c, s)

    def tan(self) -> "Jet":
        t = math.tan(self.value)
        sec2 = 1.0 + t * t
        return self._compose(t, sec2, 2.0 * t * sec2, 2.0 * sec2 * (1.0 + 3.0 * t * t))

    def exp(self) -> "Jet":
        e = math.exp(self.value)
        return self._compose(e, e, e, e)

    def log(self) -> "Jet":
        u = self.value
        if u <= 0.0:
            raise EvaluationError(f"log of non-positive jet value {u}")
        return self._compose(math.log(u), 1.0 / u, -1.0 / u**2, 2.0 / u**3)

    def sqrt(self) -> "Jet":
        if self.value < 0.0:
            raise EvaluationError(f"sqrt of negative jet value {self.value}")
        return self._power(0.5)

    def arctan(self) -> "Jet":
        u = self.value
        q = 1.0 + u * u
        return self._compose(math.atan(u), 1.0 / q, -2.0 * u / q**2, (6.0 * u * u - 2.0) / q**3)


def _dispatch(name: str, np_func):
    def func(u):
        if isinstance(u, Jet):
            return getattr(u, name)()
        return np_func(u)

    func.__name__ = name
    func.__doc__ = f"{name} over jets, floats and arrays"
    return func


sin = _dispatch("sin", np.sin)
cos = _dispatch("cos", np.cos)
tan = _dispatch("tan", np.tan)
exp = _dispatch("exp", np.exp)
log = _dispatch("log", np.log)
sqrt = _dispatch("sqrt", np.sqrt)
arctan = _dispatch("arctan", np.arctan)


def seed(point: Sequence[float], order: int) -> list:
    """Jet variables for every coordinate of point; plain floats when order is 0"""
    x = np.asarray(point, dtype=float)
    if order == 0:
        return [float(v) for v in x]
    dim = x.shape[0]
    return [Jet.variable(v, i, dim, order) for i, v in enumerate(x)]


@dataclass
class TensorJet:
    """Array-valued jet: derivative axes trail the component axes"""

    value: np.ndarray
    grad: Optional[np.ndarray] = None
    hess: Optional[np.ndarray] = None
    third: Optional[np.ndarray] = None

    @property
    def order(self) -> int:
        for k, part in enumerate((self.grad, self.hess, self.third)):
            if part is None:
                return k
        return 3

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    def truncated(self, order: int) -> "TensorJet":
        parts = [self.grad, self.hess, self.third]
        return TensorJet(self.value, *[p if k < order else None for k, p in enumerate(parts)])


def jet_array(entries: Any, dim: int, order: int) -> TensorJet:
    """Pack a nested list of Jets and plain numbers into a TensorJet"""
    arr = np.array(entries, dtype=object)
    shape = arr.shape
    value = np.empty(shape)
    grad = np.zeros(shape + (dim,)) if order >= 1 else None
    hess = np.zeros(shape + (dim, dim)) if order >= 2 else None
    third = np.zeros(shape + (dim, dim, dim)) if order >= 3 else None

    for idx in np.ndindex(*shape):
        entry = arr[idx]
        if isinstance(entry, Jet):
            if entry.order < order:
                raise EvaluationError(
                    f"Component {idx} carries order {entry.order}, expected {order}"
                )
            value[idx] = entry.value
            if grad is not None:
                grad[idx] = entry.grad
            if hess is not None:
                hess[idx] = entry.hess
            if third is not None:
                third[idx] = entry.third
        else:
            try:
                value[idx] = float(entry)
            except (TypeError, ValueError) as e:
                raise EvaluationError(f"Component {idx} is not numeric: {entry!r}") from e

    return TensorJet(value, grad, hess, third)
