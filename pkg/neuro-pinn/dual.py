"""Forward-mode dual numbers over numpy arrays.

A Dual carries a primal value of any broadcastable shape and a tangent
block with one extra trailing axis, one column per seeded direction.
Model vector fields are written with plain numpy ufuncs (np.tanh,
np.cosh, np.exp); Dual implements __array_ufunc__ so the same code
yields exact partial derivatives with respect to every seeded input.
"""

from __future__ import annotations

from typing import Any, Sequence, Tuple, Union

import numpy as np

Number = Union[int, float, np.ndarray]


class Dual:
    """Dual number: value plus tangents along ``m`` directions."""

    __slots__ = ("val", "eps")

    def __init__(self, val: Any, eps: Any):
        self.val = np.asarray(val, dtype=float)
        self.eps = np.asarray(eps, dtype=float)

    @property
    def n_dirs(self) -> int:
        return self.eps.shape[-1]

    def tangent(self) -> np.ndarray:
        """Tangent block broadcast to ``val.shape + (m,)``."""
        return np.broadcast_to(self.eps, self.val.shape + (self.n_dirs,))

    def __repr__(self):
        return f"Dual(val={self.val!r}, eps={self.eps!r})"

    # arithmetic

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.eps + other.eps)
        return Dual(self.val + other, self.eps)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, self.eps - other.eps)
        return Dual(self.val - other, self.eps)

    def __rsub__(self, other):
        return Dual(other - self.val, -self.eps)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.val * other.val,
                self.eps * other.val[..., None] + self.val[..., None] * other.eps,
            )
        other = np.asarray(other, dtype=float)
        return Dual(self.val * other, self.eps * other[..., None])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            inv = 1.0 / other.val
            val = self.val * inv
            return Dual(
                val,
                (self.eps - val[..., None] * other.eps) * inv[..., None],
            )
        inv = 1.0 / np.asarray(other, dtype=float)
        return Dual(self.val * inv, self.eps * inv[..., None])

    def __rtruediv__(self, other):
        inv = 1.0 / self.val
        val = np.asarray(other, dtype=float) * inv
        return Dual(val, -self.eps * (val * inv)[..., None])

    def __neg__(self):
        return Dual(-self.val, -self.eps)

    def __pos__(self):
        return self

    def __pow__(self, power):
        if isinstance(power, Dual):
            raise TypeError("Dual exponents are not supported")
        val = self.val ** power
        return Dual(val, self.eps * (power * self.val ** (power - 1))[..., None])

    # numpy ufunc dispatch

    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__" or kwargs:
            return NotImplemented
        if ufunc in _BINARY:
            a, b = inputs
            return _BINARY[ufunc](a, b)
        if ufunc in _UNARY:
            (x,) = inputs
            return _UNARY[ufunc](x)
        return NotImplemented


def _tanh(x: Dual) -> Dual:
    t = np.tanh(x.val)
    return Dual(t, x.eps * (1.0 - t * t)[..., None])


def _cosh(x: Dual) -> Dual:
    return Dual(np.cosh(x.val), x.eps * np.sinh(x.val)[..., None])


def _sinh(x: Dual) -> Dual:
    return Dual(np.sinh(x.val), x.eps * np.cosh(x.val)[..., None])


def _exp(x: Dual) -> Dual:
    e = np.exp(x.val)
    return Dual(e, x.eps * e[..., None])


def _log(x: Dual) -> Dual:
    return Dual(np.log(x.val), x.eps / x.val[..., None])


def _sqrt(x: Dual) -> Dual:
    r = np.sqrt(x.val)
    return Dual(r, x.eps * (0.5 / r)[..., None])


_UNARY = {
    np.tanh: _tanh,
    np.cosh: _cosh,
    np.sinh: _sinh,
    np.exp: _exp,
    np.log: _log,
    np.sqrt: _sqrt,
    np.negative: lambda x: -x,
    np.positive: lambda x: x,
}

_BINARY = {
    np.add: lambda a, b: a + b if isinstance(a, Dual) else b + a,
    np.subtract: lambda a, b: a - b if isinstance(a, Dual) else b.__rsub__(a),
    np.multiply: lambda a, b: a * b if isinstance(a, Dual) else b * a,
    np.true_divide: lambda a, b: a / b if isinstance(a, Dual) else b.__rtruediv__(a),
    np.power: lambda a, b: a ** b,
}


def seed(values: Sequence[Number], n_dirs: int, offset: int = 0) -> Tuple[Dual, ...]:
    """
    Lift plain values to Duals seeded along consecutive unit directions.

    Args:
        values: Primal values (scalars or arrays)
        n_dirs: Total number of tangent directions
        offset: Direction index of the first value

    Returns:
        One Dual per value; value i has unit tangent in direction offset + i
    """
    out = []
    for i, v in enumerate(values):
        eps = np.zeros(n_dirs)
        eps[offset + i] = 1.0
        out.append(Dual(v, eps))
    return tuple(out)


def value_of(x: Any) -> np.ndarray:
    """Primal part of a Dual, or the input itself."""
    return x.val if isinstance(x, Dual) else np.asarray(x, dtype=float)


def tangent_of(x: Any, shape: Tuple[int, ...], n_dirs: int) -> np.ndarray:
    """Tangent block of ``x`` broadcast to ``shape + (n_dirs,)``; zeros for constants."""
    if isinstance(x, Dual):
        return np.broadcast_to(x.eps, shape + (n_dirs,))
    return np.zeros(shape + (n_dirs,))
