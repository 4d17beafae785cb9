"""Interval scalars and interval matrices with outward rounding.

Rounding is emulated without touching the FPU mode. Scalar operations use
error-free transformations so exact results stay exact; the matrix kernels
move every round-to-nearest result one ulp outward with ``nextafter``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Real

import numpy as np

from . import _rounding as rnd
from ._backend import kernels

_INF = math.inf


def _dn(x: float) -> float:
    return math.nextafter(x, -_INF)


def _up(x: float) -> float:
    return math.nextafter(x, _INF)


@dataclass(frozen=True)
class Interval:
    """Closed real interval ``[lo, hi]`` with double endpoints."""

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not lo <= hi:
            raise ValueError(f"invalid interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, x) -> Interval:
        return cls(float(x), float(x))

    @staticmethod
    def coerce(x) -> Interval:
        if isinstance(x, Interval):
            return x
        if isinstance(x, (Real, np.floating, np.integer)):
            return Interval.point(x)
        raise TypeError(f"cannot convert {type(x).__name__} to Interval")

    # -- inspection -------------------------------------------------------
    @property
    def mid(self) -> float:
        return 0.5 * self.lo + 0.5 * self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def mag(self) -> float:
        return max(abs(self.lo), abs(self.hi))

    def mig(self) -> float:
        if self.lo <= 0.0 <= self.hi:
            return 0.0
        return min(abs(self.lo), abs(self.hi))

    def contains(self, x) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= x <= self.hi

    __contains__ = contains

    def __iter__(self):
        yield self.lo
        yield self.hi

    # -- arithmetic -------------------------------------------------------
    def __neg__(self) -> Interval:
        return Interval(-self.hi, -self.lo)

    def __add__(self, other) -> Interval:
        o = Interval.coerce(other)
        return Interval(rnd.add(self.lo, o.lo, False), rnd.add(self.hi, o.hi, True))

    __radd__ = __add__

    def __sub__(self, other) -> Interval:
        o = Interval.coerce(other)
        return Interval(rnd.add(self.lo, -o.hi, False), rnd.add(self.hi, -o.lo, True))

    def __rsub__(self, other) -> Interval:
        return Interval.coerce(other) - self

    def __mul__(self, other) -> Interval:
        o = Interval.coerce(other)
        pairs = ((self.lo, o.lo), (self.lo, o.hi), (self.hi, o.lo), (self.hi, o.hi))
        return Interval(min(rnd.mul(x, y, False) for x, y in pairs),
                        max(rnd.mul(x, y, True) for x, y in pairs))

    __rmul__ = __mul__

    def __truediv__(self, other) -> Interval:
        o = Interval.coerce(other)
        if o.lo <= 0.0 <= o.hi:
            raise ZeroDivisionError(f"division by interval containing zero {o}")
        pairs = ((self.lo, o.lo), (self.lo, o.hi), (self.hi, o.lo), (self.hi, o.hi))
        return Interval(min(rnd.div(x, y, False) for x, y in pairs),
                        max(rnd.div(x, y, True) for x, y in pairs))

    def __rtruediv__(self, other) -> Interval:
        return Interval.coerce(other) / self

    def __pow__(self, k: int) -> Interval:
        if not isinstance(k, (int, np.integer)) or k < 0:
            raise ValueError("only nonnegative integer powers are supported")
        if k == 0:
            return Interval(1.0, 1.0)
        if self.lo >= 0.0:
            base = self
        elif k % 2 == 0:
            base = abs(self)
        else:
            return -((-self) ** k)
        lo, hi = base.lo, base.hi
        rlo, rhi = 1.0, 1.0
        for _ in range(k):
            rlo = max(rnd.mul(rlo, lo, False), 0.0)
            rhi = rnd.mul(rhi, hi, True)
        return Interval(rlo, rhi)

    def __abs__(self) -> Interval:
        return Interval(self.mig(), self.mag())

    def square(self) -> Interval:
        return self ** 2

    def sqrt(self) -> Interval:
        if self.lo < 0.0:
            raise ValueError(f"sqrt of interval with negative part {self}")
        lo = max(rnd.sqrt(self.lo, False), 0.0)
        hi = rnd.sqrt(self.hi, True)
        return Interval(lo, hi)

    def expm1(self) -> Interval:
        """Enclosure of ``exp(x) - 1``; monotone, so endpoints suffice."""
        return Interval(_expm1_bounds(self.lo)[0], _expm1_bounds(self.hi)[1])

    def exp(self) -> Interval:
        return self.expm1() + 1.0

    def hull(self, other) -> Interval:
        o = Interval.coerce(other)
        return Interval(min(self.lo, o.lo), max(self.hi, o.hi))

    def __repr__(self) -> str:
        return f"Interval({self.lo!r}, {self.hi!r})"


_EXP_ORDER = 20


def _expm1_bounds(x: float) -> tuple[float, float]:
    """Rigorous enclosure of expm1 at a double point."""
    if x == 0.0:
        return 0.0, 0.0
    if x < 0.0:
        # expm1(x) = -expm1(-x) / (1 + expm1(-x))
        e = _expm1_interval(-x)
        r = -e / (e + 1.0)
        return r.lo, r.hi
    e = _expm1_interval(x)
    return e.lo, e.hi


def _expm1_interval(x: float) -> Interval:
    # x > 0; scale so the series argument is at most 1/2
    s = max(0, math.frexp(x)[1] + 1)
    z = Interval.point(math.ldexp(x, -s))
    if math.ldexp(z.lo, s) != x:
        raise OverflowError("argument too small to scale exactly")
    r = _EXP_ORDER
    # Horner for z * (1 + z/2 * (1 + z/3 * (...)))
    acc = Interval(1.0, 1.0)
    for k in range(r, 1, -1):
        acc = (z / k) * acc + 1.0
    acc = z * acc
    # tail sum_{k > r} z^k/k! <= z^(r+1)/(r+1)! / (1 - z/(r+2))
    tail = (z ** (r + 1)) / float(math.factorial(r + 1)) / (1.0 - z / float(r + 2))
    acc = Interval(acc.lo, (acc + Interval(0.0, tail.hi)).hi)
    for _ in range(s):
        acc = acc * (acc + 2.0)
    return acc


class IntervalMatrix:
    """Dense matrix of intervals stored as two endpoint arrays."""

    __slots__ = ("lo", "hi")
    __array_priority__ = 1000

    def __init__(self, lo, hi=None):
        lo = np.array(lo, dtype=float, ndmin=2, order="C")
        hi = lo.copy() if hi is None else np.array(hi, dtype=float, ndmin=2, order="C")
        if lo.shape != hi.shape or lo.ndim != 2:
            raise ValueError(f"endpoint shapes differ: {lo.shape} vs {hi.shape}")
        if not np.all(lo <= hi):
            raise ValueError("lower endpoint exceeds upper endpoint")
        self.lo = lo
        self.hi = hi

    @classmethod
    def point(cls, a) -> IntervalMatrix:
        return cls(a)

    @classmethod
    def coerce(cls, a) -> IntervalMatrix:
        if isinstance(a, IntervalMatrix):
            return a
        return cls(a)

    @classmethod
    def eye(cls, n: int) -> IntervalMatrix:
        return cls(np.eye(n))

    @classmethod
    def from_interval(cls, x: Interval) -> IntervalMatrix:
        return cls([[x.lo]], [[x.hi]])

    # -- inspection -------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return self.lo.shape

    @property
    def T(self) -> IntervalMatrix:
        return IntervalMatrix(self.lo.T, self.hi.T)

    def mid(self) -> np.ndarray:
        return 0.5 * self.lo + 0.5 * self.hi

    def rad(self) -> np.ndarray:
        return self.hi - self.lo

    def mag(self) -> np.ndarray:
        return np.maximum(np.abs(self.lo), np.abs(self.hi))

    def mig(self) -> np.ndarray:
        straddle = (self.lo <= 0.0) & (self.hi >= 0.0)
        return np.where(straddle, 0.0, np.minimum(np.abs(self.lo), np.abs(self.hi)))

    def is_point(self) -> bool:
        return bool(np.array_equal(self.lo, self.hi))

    def contains(self, a) -> bool:
        if isinstance(a, IntervalMatrix):
            return bool(np.all(self.lo <= a.lo) and np.all(a.hi <= self.hi))
        a = np.asarray(a, dtype=float)
        return bool(np.all(self.lo <= a) and np.all(a <= self.hi))

    def __getitem__(self, idx):
        lo = self.lo[idx]
        hi = self.hi[idx]
        if np.ndim(lo) == 0:
            return Interval(lo, hi)
        if np.ndim(lo) == 1:
            raise IndexError("use 2-d slices to keep matrix shape")
        return IntervalMatrix(lo, hi)

    def __repr__(self) -> str:
        return f"IntervalMatrix(shape={self.shape}, max_width={np.max(self.rad(), initial=0.0):.3g})"

    # -- arithmetic -------------------------------------------------------
    def __neg__(self) -> IntervalMatrix:
        return IntervalMatrix(-self.hi, -self.lo)

    def __add__(self, other) -> IntervalMatrix:
        o = IntervalMatrix.coerce(other)
        return IntervalMatrix(np.nextafter(self.lo + o.lo, -np.inf),
                              np.nextafter(self.hi + o.hi, np.inf))

    __radd__ = __add__

    def __sub__(self, other) -> IntervalMatrix:
        o = IntervalMatrix.coerce(other)
        return IntervalMatrix(np.nextafter(self.lo - o.hi, -np.inf),
                              np.nextafter(self.hi - o.lo, np.inf))

    def __rsub__(self, other) -> IntervalMatrix:
        return IntervalMatrix.coerce(other) - self

    def __matmul__(self, other) -> IntervalMatrix:
        o = IntervalMatrix.coerce(other)
        if self.shape[1] != o.shape[0]:
            raise ValueError(f"matmul shape mismatch {self.shape} @ {o.shape}")
        lo, hi = kernels.matmul(
            np.ascontiguousarray(self.lo), np.ascontiguousarray(self.hi),
            np.ascontiguousarray(o.lo), np.ascontiguousarray(o.hi),
        )
        return IntervalMatrix(lo, hi)

    def __rmatmul__(self, other) -> IntervalMatrix:
        return IntervalMatrix.coerce(other) @ self

    def scale(self, c) -> IntervalMatrix:
        """Multiply every entry by the scalar (or scalar interval) ``c``."""
        c = Interval.coerce(c)
        p = np.stack([self.lo * c.lo, self.lo * c.hi, self.hi * c.lo, self.hi * c.hi])
        return IntervalMatrix(np.nextafter(p.min(axis=0), -np.inf),
                              np.nextafter(p.max(axis=0), np.inf))

    def __mul__(self, c) -> IntervalMatrix:
        if isinstance(c, (Interval, Real, np.floating, np.integer)):
            return self.scale(c)
        return NotImplemented

    __rmul__ = __mul__

    def inflate(self, r: float) -> IntervalMatrix:
        """Widen every entry by ``[-r, r]``."""
        return self + IntervalMatrix(np.full(self.shape, -r), np.full(self.shape, r))

    def hull(self, other) -> IntervalMatrix:
        o = IntervalMatrix.coerce(other)
        return IntervalMatrix(np.minimum(self.lo, o.lo), np.maximum(self.hi, o.hi))

    def embed(self, n: int, row: int, col: int, base=None) -> IntervalMatrix:
        """Place this block into an ``n x n`` matrix (identity unless ``base``)."""
        base = IntervalMatrix.eye(n) if base is None else IntervalMatrix.coerce(base)
        lo = base.lo.copy()
        hi = base.hi.copy()
        r, c = self.shape
        lo[row:row + r, col:col + c] = self.lo
        hi[row:row + r, col:col + c] = self.hi
        return IntervalMatrix(lo, hi)
