"""Forward-mode dual numbers with arbitrary nesting.

A ``Dual(re, du)`` represents ``re + du*eps`` with ``eps**2 == 0``. Both parts
may themselves be duals, which gives exact higher derivatives: seeding
``Dual(Dual(x, a), Dual(b, 0))`` and reading ``.du.du`` of the result yields the
mixed second derivative along directions ``a`` and ``b``.

Evaluators written with plain arithmetic and the functions in this module
(``sin``, ``cos``, ``sqrt``, ``exp``, ``log``) work unchanged on floats and
duals.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np


class Dual:
    __slots__ = ("re", "du")

    def __init__(self, re, du=0.0):
        self.re = re
        self.du = du

    def __repr__(self) -> str:
        return f"Dual({self.re!r}, {self.du!r})"

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.re + other.re, self.du + other.du)
        return Dual(self.re + other, self.du)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.re - other.re, self.du - other.du)
        return Dual(self.re - other, self.du)

    def __rsub__(self, other):
        return Dual(other - self.re, -self.du)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.re * other.re, self.re * other.du + self.du * other.re)
        return Dual(self.re * other, self.du * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            inv = 1.0 / other.re
            q = self.re * inv
            return Dual(q, (self.du - q * other.du) * inv)
        return Dual(self.re / other, self.du / other)

    def __rtruediv__(self, other):
        inv = 1.0 / self.re
        q = other * inv
        return Dual(q, -q * self.du * inv)

    def __neg__(self):
        return Dual(-self.re, -self.du)

    def __pos__(self):
        return self

    def __pow__(self, n):
        if isinstance(n, int):
            if n == 0:
                return 1.0
            if n < 0:
                return 1.0 / (self ** (-n))
            result = self
            for _ in range(n - 1):
                result = result * self
            return result
        if isinstance(n, Dual):
            return exp(n * log(self))
        return Dual(self.re ** n, n * self.re ** (n - 1) * self.du)

    # comparisons act on the innermost real part (for pivoting and guards)
    def __lt__(self, other):
        return real(self) < real(other)

    def __gt__(self, other):
        return real(self) > real(other)

    def __abs__(self):
        return -self if real(self) < 0 else self


def real(x) -> float:
    """Strip every level of nesting and return the primal value."""
    while isinstance(x, Dual):
        x = x.re
    return x


def sin(x):
    if isinstance(x, Dual):
        return Dual(sin(x.re), cos(x.re) * x.du)
    return np.sin(x) if isinstance(x, np.ndarray) else math.sin(x)


def cos(x):
    if isinstance(x, Dual):
        return Dual(cos(x.re), -sin(x.re) * x.du)
    return np.cos(x) if isinstance(x, np.ndarray) else math.cos(x)


def exp(x):
    if isinstance(x, Dual):
        e = exp(x.re)
        return Dual(e, e * x.du)
    return np.exp(x) if isinstance(x, np.ndarray) else math.exp(x)


def log(x):
    if isinstance(x, Dual):
        return Dual(log(x.re), x.du / x.re)
    return np.log(x) if isinstance(x, np.ndarray) else math.log(x)


def sqrt(x):
    if isinstance(x, Dual):
        r = sqrt(x.re)
        return Dual(r, x.du / (2.0 * r))
    return np.sqrt(x) if isinstance(x, np.ndarray) else math.sqrt(x)


def eps_part(x):
    """Tangent part of ``x``; zero for anything that is not a dual."""
    return x.du if isinstance(x, Dual) else 0.0


def real_part(x):
    return x.re if isinstance(x, Dual) else x


def to_float_array(values, part: Callable = real) -> np.ndarray:
    """Apply ``part`` elementwise to a nested sequence and return a float array."""
    arr = np.asarray(values, dtype=object)
    out = np.empty(arr.shape, dtype=float)
    flat_in = arr.reshape(-1)
    flat_out = out.reshape(-1)
    for i, v in enumerate(flat_in):
        flat_out[i] = part(v)
    return out


def derivative(f: Callable, x: float) -> float:
    """First derivative of a scalar function."""
    return eps_part(f(Dual(x, 1.0)))


def second_derivative(f: Callable, x: float) -> float:
    y = f(Dual(Dual(x, 1.0), Dual(1.0, 0.0)))
    return _path(y, "du", "du")


def taylor2(f: Callable, x: float) -> tuple[float, float, float]:
    """Value, first and second derivative of a scalar function of one variable."""
    y = f(Dual(Dual(x, 1.0), Dual(1.0, 0.0)))
    return _path(y, "re", "re"), _path(y, "re", "du"), _path(y, "du", "du")


def _path(x, *attrs):
    for a in attrs:
        if not isinstance(x, Dual):
            if a == "du":
                return 0.0
            continue
        x = getattr(x, a)
    return real(x)


def seed_first(coords: Sequence, direction: int) -> list:
    return [Dual(c, 1.0 if i == direction else 0.0) for i, c in enumerate(coords)]


def seed_second(coords: Sequence, a: int, b: int) -> list:
    return [
        Dual(Dual(c, 1.0 if i == a else 0.0), Dual(1.0 if i == b else 0.0, 0.0))
        for i, c in enumerate(coords)
    ]


def split_second(y) -> tuple[float, float, float, float]:
    """Unpack a value seeded with :func:`seed_second`.

    Returns ``(f, d_a f, d_b f, d_a d_b f)``.
    """
    return _path(y, "re", "re"), _path(y, "re", "du"), _path(y, "du", "re"), _path(y, "du", "du")


def jacobian(f: Callable[[Sequence], Sequence], p: Sequence[float]) -> np.ndarray:
    """Exact Jacobian of an array-valued function; axis 0 is the direction."""
    p = [float(c) for c in p]
    return np.stack([to_float_array(f(seed_first(p, k)), eps_part) for k in range(len(p))])


def inverse(a: Sequence[Sequence]) -> list[list]:
    """Gauss-Jordan inverse that works for float and dual entries alike."""
    n = len(a)
    m = [list(row) + [1.0 if i == j else 0.0 for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(real(m[r][col])))
        if real(m[piv][col]) == 0.0:
            raise ZeroDivisionError("singular matrix")
        m[col], m[piv] = m[piv], m[col]
        inv_p = 1.0 / m[col][col]
        m[col] = [v * inv_p for v in m[col]]
        for r in range(n):
            if r != col:
                fac = m[r][col]
                if isinstance(fac, Dual) or fac != 0.0:
                    m[r] = [vr - fac * vc for vr, vc in zip(m[r], m[col])]
    return [row[n:] for row in m]


def flatten(values, depth: int) -> list:
    """Flatten a nested sequence of known depth."""
    out = list(values)
    for _ in range(depth - 1):
        out = [v for row in out for v in row]
    return out


def value_and_gradient(fn: Callable, p: Sequence[float], shape: tuple[int, ...]):
    """Evaluate ``fn`` once with all coordinate directions seeded at the same time.

    The tangent part of each dual is a vector over directions. Returns
    ``(value, grad)`` with ``grad`` shaped ``(len(p),) + shape``.
    """
    n = len(p)
    eye = np.eye(n)
    flat = flatten(fn([Dual(float(c), eye[i]) for i, c in enumerate(p)]), len(shape))
    size = len(flat)
    val = np.empty(size)
    grad = np.zeros((size, n))
    for i, v in enumerate(flat):
        if isinstance(v, Dual):
            val[i] = v.re
            grad[i] = v.du
        else:
            val[i] = v
    return val.reshape(shape), grad.T.reshape((n,) + shape)
