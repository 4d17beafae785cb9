"""Directed rounding for scalar doubles without touching the FPU mode.

Each ``*_up``/``*_dn`` computes the round-to-nearest result, recovers the
sign of the rounding error with an error-free transformation (TwoSum,
Dekker's TwoProduct), and steps one ulp only when the error points the
wrong way. Exact results therefore stay exact. Where the transformation is
not reliable (overflow, underflow range) the step is taken unconditionally.
"""
import math

_INF = math.inf
_SPLIT = 134217729.0  # 2**27 + 1
_SAFE_HI = 1e300
_SAFE_LO = 1e-290


def _split(a):
    c = _SPLIT * a
    hi = c - (c - a)
    return hi, a - hi


def _sum_err(a, b, s):
    bb = s - a
    return (a - (s - bb)) + (b - bb)


def _prod_err(a, b, p):
    ah, al = _split(a)
    bh, bl = _split(b)
    return al * bl - (((p - ah * bh) - al * bh) - ah * bl)


def _safe(*xs):
    return all(x == 0.0 or _SAFE_LO < abs(x) < _SAFE_HI for x in xs)


def _overflow(r, finite_inputs, up):
    # a finite exact result that rounded to +-inf: clamp the inner bound
    if finite_inputs and ((r > 0.0) != up):
        return math.nextafter(r, -_INF if r > 0.0 else _INF)
    return r


def _step(x, err, up):
    if up:
        return x if err <= 0.0 else math.nextafter(x, _INF)
    return x if err >= 0.0 else math.nextafter(x, -_INF)


def add(a, b, up):
    s = a + b
    if not math.isfinite(s):
        return _overflow(s, math.isfinite(a) and math.isfinite(b), up)
    if not _safe(a, b, s):
        return math.nextafter(s, _INF if up else -_INF)
    return _step(s, _sum_err(a, b, s), up)


def mul(a, b, up):
    p = a * b
    if a == 0.0 or b == 0.0:
        return 0.0
    if not math.isfinite(p):
        return _overflow(p, math.isfinite(a) and math.isfinite(b), up)
    if p == 0.0 or not _safe(a, b, p):
        return math.nextafter(p, _INF if up else -_INF)
    return _step(p, _prod_err(a, b, p), up)


def div(a, b, up):
    q = a / b
    if a == 0.0:
        return 0.0
    if not math.isfinite(q):
        return _overflow(q, math.isfinite(a) and b != 0.0, up)
    if q == 0.0 or not _safe(a, b, q):
        return math.nextafter(q, _INF if up else -_INF)
    # a = q*b + rem  with  q*b = p + e  (exact)
    p = q * b
    e = _prod_err(q, b, p)
    rem = (a - p) - e
    # the true quotient exceeds q when rem/b > 0
    err = rem if b > 0.0 else -rem
    return _step(q, err, up)


def sqrt(x, up):
    if x == 0.0:
        return 0.0
    r = math.sqrt(x)
    if not _safe(x, r * r):
        return math.nextafter(r, _INF if up else -_INF)
    p = r * r
    e = _prod_err(r, r, p)
    # r^2 - x: positive means r is above the true root
    d = (p - x) + e
    return _step(r, -d, up)
