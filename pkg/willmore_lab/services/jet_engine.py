"""Truncated bivariate Taylor arithmetic.

A ``Jet2`` of order K holds the coefficients c_ab = d^a_x d^b_y f / (a! b!) of a
scalar field at a point, for all a + b <= K. Coefficients live along the first
array axis in graded lexicographic order (degree ascending, then b ascending), so

    index(a, b) = d (d + 1) / 2 + b,   d = a + b.

Any trailing axes are a batch of independent base points; every operation is
vectorized over them. The layout is public: other services read raw coefficients.
"""
from functools import lru_cache
from math import factorial
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from willmore_lab.exceptions import JetDomainError, JetOrderError

MAX_ORDER = 6
DEFAULT_ORDER = 5

Scalar = Union[float, int, np.number, np.ndarray]


def coefficient_count(order: int) -> int:
    return (order + 1) * (order + 2) // 2


def coefficient_index(a: int, b: int) -> int:
    d = a + b
    return d * (d + 1) // 2 + b


@lru_cache(maxsize=None)
def monomials(order: int) -> Tuple[Tuple[int, int], ...]:
    return tuple((d - b, b) for d in range(order + 1) for b in range(d + 1))


@lru_cache(maxsize=None)
def _product_table(order: int) -> Tuple[Tuple[np.ndarray, np.ndarray], ...]:
    # For each left monomial i: the right monomials js it meets and the targets ks.
    mons = monomials(order)
    table = []
    for a1, b1 in mons:
        js, ks = [], []
        for j, (a2, b2) in enumerate(mons):
            if a1 + b1 + a2 + b2 <= order:
                js.append(j)
                ks.append(coefficient_index(a1 + a2, b1 + b2))
        table.append((np.array(js, dtype=np.intp), np.array(ks, dtype=np.intp)))
    return tuple(table)


@lru_cache(maxsize=None)
def _derivative_table(order: int, axis: int) -> Tuple[np.ndarray, np.ndarray]:
    sources, factors = [], []
    for a, b in monomials(order - 1):
        if axis == 0:
            sources.append(coefficient_index(a + 1, b))
            factors.append(a + 1)
        else:
            sources.append(coefficient_index(a, b + 1))
            factors.append(b + 1)
    return np.array(sources, dtype=np.intp), np.array(factors, dtype=float)


def _order_from_count(count: int) -> int:
    for order in range(MAX_ORDER + 1):
        if coefficient_count(order) == count:
            return order
    raise JetOrderError(f"{count} coefficients do not form a triangular jet of order <= {MAX_ORDER}")


def _per_coefficient(vector: np.ndarray, batch_ndim: int) -> np.ndarray:
    return vector.reshape(vector.shape + (1,) * batch_ndim)


def _require(ok: np.ndarray, values: np.ndarray, message: str) -> None:
    ok = np.asarray(ok)
    if not np.all(ok):
        bad = np.asarray(values)[~ok] if np.ndim(values) else np.asarray(values)
        offending = float(np.ravel(bad)[0])
        raise JetDomainError(f"{message}, got {offending!r}", value=offending)


def _is_constant(other) -> bool:
    return isinstance(other, (int, float, np.number, np.ndarray)) and not isinstance(other, bool)


class Jet2:
    __slots__ = ("order", "coeffs")
    # Make numpy hand binary operators back to us instead of broadcasting elementwise.
    __array_ufunc__ = None

    def __init__(self, coeffs, order: Optional[int] = None):
        coeffs = np.asarray(coeffs)
        if coeffs.dtype.kind not in "f":
            coeffs = coeffs.astype(float)
        if order is None:
            order = _order_from_count(coeffs.shape[0])
        if not 0 <= order <= MAX_ORDER:
            raise JetOrderError(f"Jet order must lie in [0, {MAX_ORDER}], got {order}")
        if coeffs.shape[0] != coefficient_count(order):
            raise JetOrderError(
                f"Order {order} needs {coefficient_count(order)} coefficients, got {coeffs.shape[0]}"
            )
        self.order = order
        self.coeffs = coeffs

    # Construction

    @classmethod
    def constant(cls, value: Scalar, order: int, dtype=None) -> "Jet2":
        value = np.asarray(value, dtype=dtype if dtype is not None else np.result_type(value, float))
        coeffs = np.zeros((coefficient_count(order),) + value.shape, dtype=value.dtype)
        coeffs[0] = value
        return cls(coeffs, order)

    @classmethod
    def variable(cls, value: Scalar, order: int, axis: int, dtype=None) -> "Jet2":
        """Jet of the coordinate function x (axis 0) or y (axis 1) at ``value``."""
        jet = cls.constant(value, order, dtype)
        if order >= 1:
            jet.coeffs[1 + axis] = 1
        return jet

    @classmethod
    def coordinates(cls, x: Scalar, y: Scalar, order: int, dtype=None) -> Tuple["Jet2", "Jet2"]:
        x, y = np.broadcast_arrays(np.asarray(x), np.asarray(y))
        return cls.variable(x, order, 0, dtype), cls.variable(y, order, 1, dtype)

    # Introspection

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[0]

    @property
    def batch_shape(self) -> Tuple[int, ...]:
        return self.coeffs.shape[1:]

    @property
    def dtype(self):
        return self.coeffs.dtype

    def coefficient(self, a: int, b: int) -> np.ndarray:
        if a + b > self.order:
            raise JetOrderError(f"Coefficient ({a}, {b}) exceeds jet order {self.order}")
        return self.coeffs[coefficient_index(a, b)]

    def partial(self, a: int, b: int) -> np.ndarray:
        """The derivative d^a_x d^b_y f at the base point."""
        return factorial(a) * factorial(b) * self.coefficient(a, b)

    def truncate(self, order: int) -> "Jet2":
        if order > self.order:
            raise JetOrderError(f"Cannot raise jet order from {self.order} to {order}")
        return Jet2(self.coeffs[:coefficient_count(order)], order)

    def rescale(self, sx: float, sy: float) -> "Jet2":
        """Jet of (u, v) -> f(x0 + sx u, y0 + sy v) at u = v = 0."""
        weights = np.array([float(sx) ** a * float(sy) ** b for a, b in monomials(self.order)])
        return Jet2(self.coeffs * _per_coefficient(weights, len(self.batch_shape)), self.order)

    def astype(self, dtype) -> "Jet2":
        return Jet2(self.coeffs.astype(dtype), self.order)

    def __getitem__(self, index) -> "Jet2":
        if not isinstance(index, tuple):
            index = (index,)
        return Jet2(self.coeffs[(slice(None),) + index], self.order)

    def __repr__(self) -> str:
        return f"Jet2(order={self.order}, batch={self.batch_shape}, value={self.value!r})"

    # Arithmetic

    def _check_order(self, other: "Jet2") -> None:
        if other.order != self.order:
            raise JetOrderError(f"Jet order mismatch: {self.order} vs {other.order}")

    def _add_constant(self, other: Scalar, sign: float = 1.0) -> "Jet2":
        other = np.asarray(other)
        shape = np.broadcast_shapes(self.batch_shape, other.shape)
        dtype = np.result_type(self.coeffs, other, float)
        coeffs = np.array(np.broadcast_to(self.coeffs, self.coeffs.shape[:1] + shape), dtype=dtype)
        if sign < 0:
            coeffs = -coeffs
        coeffs[0] = coeffs[0] + other
        return Jet2(coeffs, self.order)

    def __add__(self, other):
        if isinstance(other, Jet2):
            self._check_order(other)
            return Jet2(self.coeffs + other.coeffs, self.order)
        if _is_constant(other):
            return self._add_constant(other)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self) -> "Jet2":
        return Jet2(-self.coeffs, self.order)

    def __pos__(self) -> "Jet2":
        return self

    def __sub__(self, other):
        if isinstance(other, Jet2):
            self._check_order(other)
            return Jet2(self.coeffs - other.coeffs, self.order)
        if _is_constant(other):
            return self._add_constant(-np.asarray(other))
        return NotImplemented

    def __rsub__(self, other):
        if _is_constant(other):
            return self._add_constant(other, sign=-1.0)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Jet2):
            self._check_order(other)
            return Jet2(_multiply(self.coeffs, other.coeffs, self.order), self.order)
        if _is_constant(other):
            return Jet2(self.coeffs * np.asarray(other), self.order)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet2):
            return self * other.recip()
        if _is_constant(other):
            return Jet2(self.coeffs / np.asarray(other), self.order)
        return NotImplemented

    def __rtruediv__(self, other):
        if _is_constant(other):
            return self.recip() * other
        return NotImplemented

    def __pow__(self, exponent):
        if isinstance(exponent, (int, np.integer)) and exponent >= 0:
            return self._integer_power(int(exponent))
        return self.power(float(exponent))

    def _integer_power(self, n: int) -> "Jet2":
        result = Jet2.constant(np.ones(self.batch_shape, dtype=self.dtype), self.order)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # Differential operators

    def _derivative(self, axis: int) -> "Jet2":
        if self.order == 0:
            raise JetOrderError("Cannot differentiate an order-0 jet")
        sources, factors = _derivative_table(self.order, axis)
        coeffs = self.coeffs[sources] * _per_coefficient(factors, len(self.batch_shape))
        return Jet2(coeffs.astype(self.dtype, copy=False), self.order - 1)

    def dx(self) -> "Jet2":
        return self._derivative(0)

    def dy(self) -> "Jet2":
        return self._derivative(1)

    def laplacian(self) -> "Jet2":
        return laplacian_flat(self)

    # Elementary functions

    def exp(self) -> "Jet2":
        e = np.exp(self.value)
        return _compose(self, [e / factorial(n) for n in range(self.order + 1)])

    def log(self) -> "Jet2":
        v = self.value
        _require(v > 0, v, "log requires a positive base value")
        taylor = [np.log(v)] + [(-1.0) ** (n + 1) / (n * v ** n) for n in range(1, self.order + 1)]
        return _compose(self, taylor)

    def sin(self) -> "Jet2":
        s, c = np.sin(self.value), np.cos(self.value)
        cycle = (s, c, -s, -c)
        return _compose(self, [cycle[n % 4] / factorial(n) for n in range(self.order + 1)])

    def cos(self) -> "Jet2":
        s, c = np.sin(self.value), np.cos(self.value)
        cycle = (c, -s, -c, s)
        return _compose(self, [cycle[n % 4] / factorial(n) for n in range(self.order + 1)])

    def sinh(self) -> "Jet2":
        sh, ch = np.sinh(self.value), np.cosh(self.value)
        return _compose(self, [(sh if n % 2 == 0 else ch) / factorial(n) for n in range(self.order + 1)])

    def cosh(self) -> "Jet2":
        sh, ch = np.sinh(self.value), np.cosh(self.value)
        return _compose(self, [(ch if n % 2 == 0 else sh) / factorial(n) for n in range(self.order + 1)])

    def power(self, p: float, what: str = "pow") -> "Jet2":
        p = float(p)
        if p.is_integer() and p >= 0:
            return self._integer_power(int(p))
        v = self.value
        if p.is_integer():
            _require(v != 0, v, f"{what} requires a nonzero base value")
        else:
            _require(v > 0, v, f"{what} requires a positive base value")
        taylor: List[np.ndarray] = []
        binomial = 1.0
        for n in range(self.order + 1):
            taylor.append(binomial * v ** (p - n))
            binomial *= (p - n) / (n + 1)
        return _compose(self, taylor)

    def sqrt(self) -> "Jet2":
        return self.power(0.5, what="sqrt")

    def recip(self) -> "Jet2":
        return self.power(-1.0, what="recip")

    def atan(self) -> "Jet2":
        return atan2(self, Jet2.constant(np.ones(self.batch_shape, dtype=self.dtype), self.order))


def _multiply(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    shape = (a.shape[0],) + np.broadcast_shapes(a.shape[1:], b.shape[1:])
    out = np.zeros(shape, dtype=np.result_type(a, b))
    for i, (js, ks) in enumerate(_product_table(order)):
        out[ks] += a[i] * b[js]
    return out


def _compose(f: Jet2, taylor: Sequence[np.ndarray]) -> Jet2:
    """g o f from taylor[n] = g^(n)(f0) / n!, by Horner's rule in h = f - f0."""
    h = f - f.value
    result = Jet2.constant(np.broadcast_to(taylor[f.order], f.batch_shape), f.order, dtype=f.dtype)
    for n in range(f.order - 1, -1, -1):
        result = result * h + taylor[n]
    return result


class ComplexJet2:
    """A complex-valued field as a pair of real jets of equal order."""

    __slots__ = ("re", "im")
    __array_ufunc__ = None

    def __init__(self, re: Jet2, im: Optional[Jet2] = None):
        if im is None:
            im = Jet2(np.zeros_like(re.coeffs), re.order)
        if re.order != im.order:
            raise JetOrderError(f"Real and imaginary parts differ in order: {re.order} vs {im.order}")
        self.re = re
        self.im = im

    @classmethod
    def coordinate(cls, x: Scalar, y: Scalar, order: int, dtype=None) -> "ComplexJet2":
        """Jet of z = x + iy."""
        xj, yj = Jet2.coordinates(x, y, order, dtype)
        return cls(xj, yj)

    @property
    def order(self) -> int:
        return self.re.order

    @property
    def value(self) -> np.ndarray:
        return self.re.value + 1j * self.im.value

    def conj(self) -> "ComplexJet2":
        return ComplexJet2(self.re, -self.im)

    def truncate(self, order: int) -> "ComplexJet2":
        return ComplexJet2(self.re.truncate(order), self.im.truncate(order))

    def abs2(self) -> Jet2:
        return self.re * self.re + self.im * self.im

    def __add__(self, other):
        if isinstance(other, ComplexJet2):
            return ComplexJet2(self.re + other.re, self.im + other.im)
        if isinstance(other, Jet2):
            return ComplexJet2(self.re + other, self.im)
        if _is_constant(other) or isinstance(other, complex):
            other = np.asarray(other)
            return ComplexJet2(self.re + np.real(other), self.im + np.imag(other))
        return NotImplemented

    __radd__ = __add__

    def __neg__(self) -> "ComplexJet2":
        return ComplexJet2(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, ComplexJet2):
            return ComplexJet2(
                self.re * other.re - self.im * other.im,
                self.re * other.im + self.im * other.re,
            )
        if isinstance(other, Jet2):
            return ComplexJet2(self.re * other, self.im * other)
        if _is_constant(other) or isinstance(other, complex):
            other = np.asarray(other)
            if np.iscomplexobj(other):
                a, b = np.real(other), np.imag(other)
                return ComplexJet2(self.re * a - self.im * b, self.re * b + self.im * a)
            return ComplexJet2(self.re * other, self.im * other)
        return NotImplemented

    __rmul__ = __mul__

    def dz(self) -> "ComplexJet2":
        return wirtinger_dz(self)

    def dzbar(self) -> "ComplexJet2":
        return wirtinger_dzbar(self)

    def __repr__(self) -> str:
        return f"ComplexJet2(order={self.order}, value={self.value!r})"


# Module-level operations

def jet_add(a: Jet2, b: Jet2) -> Jet2:
    if a.order != b.order:
        raise JetOrderError(f"Jet order mismatch: {a.order} vs {b.order}")
    return a + b


def jet_mul(a: Jet2, b: Jet2) -> Jet2:
    if a.order != b.order:
        raise JetOrderError(f"Jet order mismatch: {a.order} vs {b.order}")
    return a * b


def jet_scale(a: Jet2, s: Scalar) -> Jet2:
    return a * s


def atan2(y: Jet2, x: Jet2) -> Jet2:
    """Jet of the angle of x + iy, continuous around the base angle."""
    if y.order != x.order:
        raise JetOrderError(f"Jet order mismatch: {y.order} vs {x.order}")
    x0, y0 = x.value, y.value
    rho2 = x0 * x0 + y0 * y0
    _require(rho2 > 0, rho2, "atan2 requires a base point away from the origin")
    # (x + iy) / (x0 + iy0) = 1 + eps, angle = theta0 + Im log(1 + eps)
    eps = ComplexJet2((x * x0 + y * y0) / rho2 - 1.0, (y * x0 - x * y0) / rho2)
    order = x.order
    series = ComplexJet2(Jet2.constant(np.zeros(eps.re.batch_shape, dtype=eps.re.dtype), order))
    for n in range(order, 0, -1):
        series = (series + (-1.0) ** (n + 1) / n) * eps
    return series.im + np.arctan2(y0, x0)


_UNARY: Dict[str, Callable[[Jet2], Jet2]] = {
    "exp": Jet2.exp,
    "log": Jet2.log,
    "sin": Jet2.sin,
    "cos": Jet2.cos,
    "sinh": Jet2.sinh,
    "cosh": Jet2.cosh,
    "sqrt": Jet2.sqrt,
    "recip": Jet2.recip,
    "atan": Jet2.atan,
}

ELEMENTARY_FUNCTIONS = tuple(sorted(_UNARY)) + ("atan2", "pow")


def jet_elementary(f: Jet2, fn: str, *args) -> Jet2:
    """Apply a named elementary function; ``atan2`` takes the x-jet and ``pow`` the exponent."""
    if fn == "atan2":
        (x,) = args
        return atan2(f, x)
    if fn == "pow":
        (p,) = args
        return f.power(p)
    try:
        return _UNARY[fn](f)
    except KeyError:
        raise ValueError(f"Unknown elementary function {fn!r}; expected one of {ELEMENTARY_FUNCTIONS}")


def wirtinger_dz(f: ComplexJet2) -> ComplexJet2:
    """d/dz = (d/dx - i d/dy) / 2."""
    if f.order == 0:
        raise JetOrderError("Wirtinger derivatives need a jet of order >= 1")
    ux, uy, vx, vy = f.re.dx(), f.re.dy(), f.im.dx(), f.im.dy()
    return ComplexJet2((ux + vy) * 0.5, (vx - uy) * 0.5)


def wirtinger_dzbar(f: ComplexJet2) -> ComplexJet2:
    """d/dzbar = (d/dx + i d/dy) / 2."""
    if f.order == 0:
        raise JetOrderError("Wirtinger derivatives need a jet of order >= 1")
    ux, uy, vx, vy = f.re.dx(), f.re.dy(), f.im.dx(), f.im.dy()
    return ComplexJet2((ux - vy) * 0.5, (vx + uy) * 0.5)


def laplacian_flat(f: Jet2) -> Jet2:
    if f.order < 2:
        raise JetOrderError(f"The flat Laplacian needs a jet of order >= 2, got {f.order}")
    return f.dx().dx() + f.dy().dy()


def common_order(*jets: Jet2) -> int:
    return min(j.order for j in jets)


def truncate_all(jets: Sequence[Jet2], order: Optional[int] = None) -> List[Jet2]:
    """Bring a group of jets to one order (the lowest, unless given)."""
    order = common_order(*jets) if order is None else order
    return [j.truncate(order) for j in jets]


# Vector helpers over sequences of jets or plain arrays

def dot(a: Sequence, b: Sequence):
    total = a[0] * b[0]
    for x, y in zip(a[1:], b[1:]):
        total = total + x * y
    return total


def cross3(a: Sequence, b: Sequence) -> Tuple:
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def norm_squared(a: Sequence):
    return dot(a, a)


def values(vector: Sequence) -> np.ndarray:
    """Base values of a vector of jets (or arrays), stacked along the first axis."""
    return np.stack([c.value if isinstance(c, Jet2) else np.asarray(c) for c in vector])
