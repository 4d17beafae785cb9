"""Verified enclosures built on :mod:`timingcert.interval.core`."""
from __future__ import annotations

import math

import numpy as np

from . import _rounding as rnd
from ._backend import kernels
from .core import Interval, IntervalMatrix

#: Taylor order of the verified matrix exponential after scaling.
EXP_TAYLOR_ORDER = 20
#: Rump's method is abandoned in favour of the Frobenius bound from here on.
RUMP_ALPHA_LIMIT = 0.5


class NotPositiveDefiniteError(ArithmeticError):
    """A Cholesky pivot interval reached zero or below."""

    def __init__(self, pivot: int):
        super().__init__(f"positive definiteness not verifiable at pivot {pivot}")
        self.pivot = pivot


class SingularIntervalError(ArithmeticError):
    """A triangular diagonal interval contains zero."""

    def __init__(self, pivot: int):
        super().__init__(f"diagonal interval {pivot} contains zero")
        self.pivot = pivot


def _sum_sq(values: np.ndarray, up: bool) -> float:
    """Directed-rounded sum of squares of nonnegative values."""
    total = 0.0
    for v in np.ravel(values):
        if v == 0.0:
            continue
        v = float(v)
        total = max(rnd.add(total, rnd.mul(v, v, up), up), 0.0)
    return total


def frobenius_norm_bound(a) -> Interval:
    """Enclosure whose upper end bounds the spectral norm of every member.

    The upper endpoint is the Frobenius norm of the entrywise magnitude,
    rounded up. The lower endpoint is the largest entry mignitude, which is
    itself a lower bound on the spectral norm.
    """
    a = IntervalMatrix.coerce(a)
    hi = rnd.sqrt(_sum_sq(a.mag(), True), True)
    lo = float(np.max(a.mig(), initial=0.0))
    return Interval(min(lo, hi), hi)


def vector_norm_enclosure(v) -> Interval:
    """Euclidean norm enclosure of an interval vector (any shape, flattened)."""
    v = IntervalMatrix.coerce(v)
    hi = rnd.sqrt(_sum_sq(v.mag(), True), True)
    lo = rnd.sqrt(_sum_sq(v.mig(), False), False)
    return Interval(min(lo, hi), hi)


def spectral_norm_enclosure(a) -> Interval:
    """Enclose the largest singular value of every member of ``a``.

    Uses Rump's bound: with ``V`` an approximate right-singular basis of the
    midpoint, ``V^T A^T A V = D + E`` gives

        sqrt((max d - eps) / (1 + alpha)) <= ||A|| <= sqrt((max d + eps) / (1 - alpha))

    where ``alpha >= ||I - V^T V||`` and ``eps >= ||E||``. Falls back to the
    Frobenius bound when ``alpha >= RUMP_ALPHA_LIMIT``.
    """
    a = IntervalMatrix.coerce(a)
    frob = frobenius_norm_bound(a)
    if frob.hi == 0.0:
        return Interval(0.0, 0.0)
    mid = a.mid()
    try:
        _, _, vh = np.linalg.svd(mid)
    except np.linalg.LinAlgError:
        return frob
    v = IntervalMatrix.point(np.ascontiguousarray(vh.T))
    vtv = v.T @ v
    alpha = frobenius_norm_bound(IntervalMatrix.eye(v.shape[0]) - vtv).hi
    if not alpha < RUMP_ALPHA_LIMIT:
        return frob
    b = a @ v
    g = b.T @ b
    d_lo = np.diag(g.lo).copy()
    d_hi = np.diag(g.hi).copy()
    off = IntervalMatrix(g.lo.copy(), g.hi.copy())
    np.fill_diagonal(off.lo, 0.0)
    np.fill_diagonal(off.hi, 0.0)
    eps = frobenius_norm_bound(off).hi
    dmax_hi = float(np.max(d_hi))
    dmax_lo = max(float(np.max(d_lo)), 0.0)
    upper = (Interval.point(dmax_hi) + eps) / (1.0 - Interval.point(alpha))
    hi = min(upper.sqrt().hi, frob.hi)
    lower = Interval.point(dmax_lo) - eps
    if lower.lo > 0.0:
        lo = (Interval(lower.lo, lower.lo) / (1.0 + Interval.point(alpha))).sqrt().lo
    else:
        lo = 0.0
    lo = max(lo, frob.lo)
    return Interval(min(lo, hi), hi)


def _remainder_radius(theta: Interval, order: int) -> float:
    # sum_{k > r} theta^k / k! <= theta^(r+1) / (r+1)! / (1 - theta/(r+2))
    if theta.hi == 0.0:
        return 0.0
    rem = (theta ** (order + 1)) / float(math.factorial(order + 1))
    rem = rem / (1.0 - theta / float(order + 2))
    return rem.hi


def exp_enclosure(a, order: int = EXP_TAYLOR_ORDER) -> IntervalMatrix:
    """Interval matrix containing ``expm(M)`` for every member ``M`` of ``a``.

    Scaling and squaring: ``M / 2^s`` has Frobenius bound at most 1/2, the
    Taylor polynomial of degree ``order`` is evaluated in Horner form, the
    truncation error is added as an entrywise ball, then ``s`` squarings.
    """
    a = IntervalMatrix.coerce(a)
    n, m = a.shape
    if n != m:
        raise ValueError("exp_enclosure needs a square matrix")
    theta0 = frobenius_norm_bound(a).hi
    s = 0
    if theta0 > 0.5:
        s = max(0, math.frexp(theta0)[1] + 1)
    scaled = a.scale(math.ldexp(1.0, -s)) if s else a
    theta = Interval(0.0, frobenius_norm_bound(scaled).hi)
    eye = IntervalMatrix.eye(n)
    acc = eye
    for k in range(order, 0, -1):
        acc = eye + (scaled.scale(1.0 / Interval.point(k)) @ acc)
    rad = _remainder_radius(theta, order)
    if rad:
        acc = acc.inflate(rad)
    for _ in range(s):
        acc = acc @ acc
    return acc


def cholesky_enclosure(p) -> IntervalMatrix:
    """Lower-triangular enclosure of the Cholesky factor of every SPD member.

    Only the lower triangle of ``p`` is read. Strictly positive diagonal
    lower endpoints certify that every symmetric member is positive definite.
    """
    p = IntervalMatrix.coerce(p)
    if p.shape[0] != p.shape[1]:
        raise ValueError("cholesky_enclosure needs a square matrix")
    llo, lhi, failed = kernels.cholesky(np.ascontiguousarray(p.lo), np.ascontiguousarray(p.hi))
    if failed >= 0:
        raise NotPositiveDefiniteError(int(failed))
    return IntervalMatrix(llo, lhi)


def triangular_inverse_enclosure(low) -> IntervalMatrix:
    """Enclosure of the inverse of every member of a lower-triangular interval matrix."""
    low = IntervalMatrix.coerce(low)
    if low.shape[0] != low.shape[1]:
        raise ValueError("triangular_inverse_enclosure needs a square matrix")
    xlo, xhi, failed = kernels.lower_inverse(np.ascontiguousarray(low.lo),
                                              np.ascontiguousarray(low.hi))
    if failed >= 0:
        raise SingularIntervalError(int(failed))
    return IntervalMatrix(xlo, xhi)
