"""Forward-mode automatic differentiation on dual and hyper-dual numbers.

First derivatives propagate through :class:`Dual` (value + one derivative
channel), mixed second derivatives through :class:`HyperDual` (value, two
first-order channels, one cross channel).  Both carry either python floats or
numpy arrays in every channel, so a single arithmetic pass can differentiate a
function at one point or at a whole batch of points at once.

Conventions
-----------
* A plain number entering dual arithmetic is promoted with zero derivative
  parts, so evaluating on duals with silent seeds reproduces the plain value
  bit for bit (the value channel performs exactly the same float operations).
* ``hessian_mixed(f, x, i, j)`` seeds the first channel on ``x[i]`` and the
  second on ``x[j]``; ``i == j`` yields the diagonal second derivative.
* The finite-difference oracle ``fd_grad`` is kept deliberately independent
  of the dual path (pure f-evaluations) so the two can cross-check each other.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, InvalidInputError, InvalidParameterError

__all__ = [
    "Dual",
    "HyperDual",
    "ScalarField",
    "grad",
    "fd_grad",
    "hessian_mixed",
    "hessian",
    "sqrt",
    "sin",
    "cos",
    "exp",
    "sinh",
    "cosh",
]


def _first_bad_component(mask) -> int | None:
    """Index of the first True entry of a boolean array, None for scalars."""
    mask = np.asarray(mask)
    if mask.ndim == 0:
        return None
    return int(np.argmax(mask))


def _check_value_domain(value, ok_mask, what: str) -> None:
    ok = np.asarray(ok_mask)
    if not bool(np.all(ok)):
        comp = _first_bad_component(~ok)
        at = "" if comp is None else f" at component {comp}"
        raise DomainError(f"{what} left the admissible domain{at}", component=comp)


class Dual:
    """value + deriv * eps with eps^2 = 0.  Channels are floats or ndarrays."""

    # Keep numpy from consuming us in mixed expressions; its binary ufuncs
    # then return NotImplemented and python falls back to our reflected ops.
    __array_ufunc__ = None
    __array_priority__ = 1000.0

    __slots__ = ("value", "deriv")

    def __init__(self, value, deriv):
        self.value = value
        self.deriv = deriv

    def __repr__(self):
        return f"Dual({self.value!r}, {self.deriv!r})"

    @staticmethod
    def _lift(x) -> "Dual":
        if isinstance(x, Dual):
            return x
        if isinstance(x, HyperDual):
            raise InvalidInputError("cannot mix Dual and HyperDual in one expression")
        return Dual(x, 0.0)

    def __add__(self, other):
        o = Dual._lift(other)
        return Dual(self.value + o.value, self.deriv + o.deriv)

    __radd__ = __add__

    def __sub__(self, other):
        o = Dual._lift(other)
        return Dual(self.value - o.value, self.deriv - o.deriv)

    def __rsub__(self, other):
        o = Dual._lift(other)
        return Dual(o.value - self.value, o.deriv - self.deriv)

    def __neg__(self):
        return Dual(-self.value, -self.deriv)

    def __mul__(self, other):
        o = Dual._lift(other)
        return Dual(self.value * o.value, self.deriv * o.value + self.value * o.deriv)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = Dual._lift(other)
        v = self.value / o.value
        return Dual(v, (self.deriv - v * o.deriv) / o.value)

    def __rtruediv__(self, other):
        return Dual._lift(other) / self

    def __pow__(self, n):
        if isinstance(n, (Dual, HyperDual)):
            raise InvalidInputError("exponent must be a plain number")
        if not float(n).is_integer():
            _check_value_domain(self.value, np.asarray(self.value) > 0.0, f"x**{n}")
        v = self.value ** n
        return Dual(v, n * self.value ** (n - 1) * self.deriv)


class HyperDual:
    """value + d1*eps1 + d2*eps2 + d12*eps1*eps2 with eps1^2 = eps2^2 = 0."""

    __array_ufunc__ = None
    __array_priority__ = 1000.0

    __slots__ = ("value", "d1", "d2", "d12")

    def __init__(self, value, d1, d2, d12):
        self.value = value
        self.d1 = d1
        self.d2 = d2
        self.d12 = d12

    def __repr__(self):
        return f"HyperDual({self.value!r}, {self.d1!r}, {self.d2!r}, {self.d12!r})"

    @staticmethod
    def _lift(x) -> "HyperDual":
        if isinstance(x, HyperDual):
            return x
        if isinstance(x, Dual):
            raise InvalidInputError("cannot mix Dual and HyperDual in one expression")
        return HyperDual(x, 0.0, 0.0, 0.0)

    def __add__(self, other):
        o = HyperDual._lift(other)
        return HyperDual(self.value + o.value, self.d1 + o.d1,
                         self.d2 + o.d2, self.d12 + o.d12)

    __radd__ = __add__

    def __sub__(self, other):
        o = HyperDual._lift(other)
        return HyperDual(self.value - o.value, self.d1 - o.d1,
                         self.d2 - o.d2, self.d12 - o.d12)

    def __rsub__(self, other):
        return HyperDual._lift(other) - self

    def __neg__(self):
        return HyperDual(-self.value, -self.d1, -self.d2, -self.d12)

    def __mul__(self, other):
        o = HyperDual._lift(other)
        return HyperDual(
            self.value * o.value,
            self.d1 * o.value + self.value * o.d1,
            self.d2 * o.value + self.value * o.d2,
            self.d12 * o.value + self.value * o.d12 + self.d1 * o.d2 + self.d2 * o.d1,
        )

    __rmul__ = __mul__

    def _reciprocal(self) -> "HyperDual":
        a = self.value
        inv = 1.0 / a
        inv2 = inv * inv
        return HyperDual(inv, -self.d1 * inv2, -self.d2 * inv2,
                         -self.d12 * inv2 + 2.0 * self.d1 * self.d2 * inv2 * inv)

    def __truediv__(self, other):
        return self * HyperDual._lift(other)._reciprocal()

    def __rtruediv__(self, other):
        return HyperDual._lift(other) * self._reciprocal()

    def __pow__(self, n):
        if isinstance(n, (Dual, HyperDual)):
            raise InvalidInputError("exponent must be a plain number")
        if not float(n).is_integer():
            _check_value_domain(self.value, np.asarray(self.value) > 0.0, f"x**{n}")
        a = self.value
        return _chain2(self, a ** n, n * a ** (n - 1), n * (n - 1) * a ** (n - 2))


def _chain1(x: Dual, f0, f1) -> Dual:
    return Dual(f0, f1 * x.deriv)


def _chain2(x: HyperDual, f0, f1, f2) -> HyperDual:
    return HyperDual(f0, f1 * x.d1, f1 * x.d2, f1 * x.d12 + f2 * x.d1 * x.d2)


def sqrt(x):
    """Square root with derivative propagation; negative values are a domain error."""
    if isinstance(x, Dual):
        _check_value_domain(x.value, np.asarray(x.value) > 0.0, "sqrt")
        r = np.sqrt(x.value)
        return _chain1(x, r, 0.5 / r)
    if isinstance(x, HyperDual):
        _check_value_domain(x.value, np.asarray(x.value) > 0.0, "sqrt")
        r = np.sqrt(x.value)
        return _chain2(x, r, 0.5 / r, -0.25 / (r * x.value))
    _check_value_domain(x, np.asarray(x) >= 0.0, "sqrt")
    return np.sqrt(x)


def _unary(name: str, f, df, d2f):
    def op(x):
        if isinstance(x, Dual):
            return _chain1(x, f(x.value), df(x.value))
        if isinstance(x, HyperDual):
            return _chain2(x, f(x.value), df(x.value), d2f(x.value))
        return f(x)

    op.__name__ = name
    op.__doc__ = f"{name} with first/second derivative propagation."
    return op


sin = _unary("sin", np.sin, np.cos, lambda v: -np.sin(v))
cos = _unary("cos", np.cos, lambda v: -np.sin(v), lambda v: -np.cos(v))
exp = _unary("exp", np.exp, np.exp, np.exp)
sinh = _unary("sinh", np.sinh, np.cosh, np.sinh)
cosh = _unary("cosh", np.cosh, np.sinh, np.cosh)


@dataclass(frozen=True)
class ScalarField:
    """A scalar function of ``arity`` real arguments, written in generic
    arithmetic so it accepts plain numbers, Dual or HyperDual entries, and
    numpy-array channels for batched evaluation."""

    arity: int
    eval: Callable

    def __post_init__(self):
        if self.arity < 1:
            raise InvalidInputError(f"arity must be >= 1, got {self.arity}")

    def __call__(self, xs: Sequence):
        if len(xs) != self.arity:
            raise InvalidInputError(
                f"expected {self.arity} arguments, got {len(xs)}")
        return self.eval(xs)


def grad(f: ScalarField, x: Sequence[float]) -> np.ndarray:
    """Exact gradient of f at x via one seeded dual pass per coordinate."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != f.arity:
        raise InvalidInputError(
            f"point has shape {x.shape}, expected ({f.arity},)")
    out = np.empty(f.arity)
    for i in range(f.arity):
        xs = [Dual(x[j], 1.0 if j == i else 0.0) for j in range(f.arity)]
        r = f(xs)
        if not isinstance(r, Dual):
            raise InvalidInputError("field did not propagate dual numbers")
        out[i] = r.deriv
    return out


def fd_grad(f: ScalarField, x: Sequence[float], h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient oracle, independent of the dual path.

    The step for coordinate i is h*max(1, |x[i]|) so the stencil stays
    well-scaled for both small and large coordinates.
    """
    if h <= 0.0:
        raise InvalidParameterError(f"finite-difference step must be positive, got {h}")
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != f.arity:
        raise InvalidInputError(
            f"point has shape {x.shape}, expected ({f.arity},)")
    out = np.empty(f.arity)
    for i in range(f.arity):
        hi = h * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += hi
        xm[i] -= hi
        fp = f(list(xp))
        fm = f(list(xm))
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise DomainError(f"non-finite value on the stencil of coordinate {i}",
                              component=i)
        out[i] = (fp - fm) / (2.0 * hi)
    return out


def hessian_mixed(f: ScalarField, x: Sequence[float], i: int, j: int) -> float:
    """Second derivative d^2 f / dx_i dx_j via one hyper-dual pass (i == j ok)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != f.arity:
        raise InvalidInputError(
            f"point has shape {x.shape}, expected ({f.arity},)")
    if not (0 <= i < f.arity and 0 <= j < f.arity):
        raise InvalidInputError(f"indices ({i}, {j}) out of range for arity {f.arity}")
    xs = [HyperDual(x[k], 1.0 if k == i else 0.0, 1.0 if k == j else 0.0, 0.0)
          for k in range(f.arity)]
    r = f(xs)
    if not isinstance(r, HyperDual):
        raise InvalidInputError("field did not propagate hyper-dual numbers")
    return float(r.d12)


def hessian(f: ScalarField, x: Sequence[float]) -> np.ndarray:
    """Full symmetric Hessian assembled from hyper-dual passes over i <= j."""
    x = np.asarray(x, dtype=float)
    k = f.arity
    out = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            out[i, j] = hessian_mixed(f, x, i, j)
            out[j, i] = out[i, j]
    return out
