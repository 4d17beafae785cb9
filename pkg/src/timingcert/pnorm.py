"""P-ellipsoid matrix norms and the deviation bound ``h(delta)``.

With ``P = K K^T`` (``K`` lower triangular) the induced norm of ``A`` is

    ||A||_P = ||K^T A K^{-T}||_2

which is enclosed with the verified spectral norm. A deviation term
``M1 (expm(A tau) - I) M2`` is bounded for ``|tau| <= delta`` by

    h(delta) = ||M1|| ||M2|| (exp(||A|| delta) - 1) + sum_{i=1}^r g_i delta^i
    g_i = (||M1 A^i M2|| - ||M1|| ||A||^i ||M2||) / i!

(all norms in P), i.e. exact Taylor terms up to order ``r`` and the
submultiplicative bound for the tail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .decomp import Decomposition, DecompositionEnclosure, Kind
from .interval import (
    Interval,
    IntervalMatrix,
    NotPositiveDefiniteError,
    cholesky_enclosure,
    spectral_norm_enclosure,
    triangular_inverse_enclosure,
    vector_norm_enclosure,
)

#: Number of exact Taylor terms in ``h``.
DEFAULT_ORDER = 10


class EllipsoidNorm:
    """Induced matrix norm of ``|x|_P = sqrt(x^T P x)`` with ``P = K K^T``.

    Parameters
    ----------
    K : array_like or IntervalMatrix
        Lower-triangular factor. A float array is taken as exact, so the
        norm certified is the one of ``P = K K^T`` evaluated exactly.
    """

    def __init__(self, K):
        if isinstance(K, IntervalMatrix):
            Ki = K
        else:
            K = np.array(K, dtype=float, ndmin=2)
            if K.shape[0] != K.shape[1]:
                raise ValueError("K must be square")
            if not np.array_equal(K, np.tril(K)):
                raise ValueError("K must be lower triangular")
            Ki = IntervalMatrix.point(K)
        if not np.all(np.diag(Ki.lo) > 0.0):
            bad = int(np.nonzero(~(np.diag(Ki.lo) > 0.0))[0][0])
            raise NotPositiveDefiniteError(bad)
        self.K = Ki
        self.KT = Ki.T
        self.K_inv = triangular_inverse_enclosure(Ki)
        self.K_inv_T = self.K_inv.T
        self._Kf = Ki.mid()
        self._Kinv_f = solve_triangular(self._Kf, np.eye(self.n), lower=True)

    @classmethod
    def from_matrix(cls, P) -> EllipsoidNorm:
        """Norm of a full symmetric ``P``; positive definiteness is verified
        through an interval Cholesky factor."""
        return cls(cholesky_enclosure(P))

    @property
    def n(self) -> int:
        return self.K.shape[0]

    @property
    def factor(self) -> np.ndarray:
        """Floating lower-triangular factor (midpoint if ``K`` is an interval)."""
        return self._Kf

    def transform(self, A) -> IntervalMatrix:
        """Enclosure of ``K^T A K^{-T}``."""
        return self.KT @ (IntervalMatrix.coerce(A) @ self.K_inv_T)

    def left(self, u) -> Interval:
        """``|K^T u|``, the P-length of the column ``u``."""
        return vector_norm_enclosure(self.KT @ _col(u))

    def right(self, v) -> Interval:
        """``|K^{-1} v|``, the dual length of the row ``v^T``."""
        return vector_norm_enclosure(self.K_inv @ _col(v))

    def approx(self, A) -> float:
        """Unverified floating value of ``||A||_P``."""
        return float(np.linalg.norm(self._Kf.T @ np.asarray(A) @ self._Kinv_f.T, 2))


def _col(v) -> IntervalMatrix:
    if isinstance(v, IntervalMatrix):
        return v if v.shape[1] == 1 else v.T
    return IntervalMatrix.point(np.asarray(v, dtype=float).reshape(-1, 1))


def pnorm(norm: EllipsoidNorm, A) -> Interval:
    """Enclosure of ``||A||_P``."""
    return spectral_norm_enclosure(norm.transform(A))


@dataclass(frozen=True)
class DeviationBound:
    """Verified ``h(delta_max)`` for one deviation channel."""

    kind: Kind | None
    delta_max: float
    gamma: tuple
    nM1: Interval
    nM2: Interval
    nA: Interval
    value: Interval


def h_bound(nM1: Interval, nM2: Interval, nA: Interval, term_norms, delta: float):
    """Coefficients ``g_i`` and the enclosure of ``h(delta)``.

    ``term_norms[i - 1]`` encloses ``||M1 A^i M2||_P``.
    """
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    c = nM1 * nM2
    gamma = []
    a_pow = Interval(1.0, 1.0)
    for i, t in enumerate(term_norms, start=1):
        a_pow = a_pow * nA
        gamma.append((t - c * a_pow) / float(math.factorial(i)))
    if delta == 0.0:
        return tuple(gamma), Interval(0.0, 0.0)
    d = Interval.point(delta)
    val = c * (nA * d).expm1()
    d_pow = Interval(1.0, 1.0)
    for g in gamma:
        d_pow = d_pow * d
        val = val + g * d_pow
    return tuple(gamma), Interval(max(val.lo, 0.0), max(val.hi, 0.0))


def deviation_bound(norm: EllipsoidNorm, factors, delta_max: float,
                    r: int = DEFAULT_ORDER, kind: Kind | None = None) -> DeviationBound:
    """Bound ``||M1 (expm(sign A tau) - I) M2||_P`` over ``|tau| <= delta_max``.

    Dense reference implementation; :func:`structured_bounds` computes the
    same quantity faster for the decomposition's rank-one terms.
    """
    if r < 1:
        raise ValueError("order r must be at least 1")
    M1, A, M2, sign = factors
    A = IntervalMatrix.coerce(A)
    if sign < 0:
        A = -A
    M1 = IntervalMatrix.coerce(M1)
    M2 = IntervalMatrix.coerce(M2)
    nM1, nM2, nA = pnorm(norm, M1), pnorm(norm, M2), pnorm(norm, A)
    W = M2
    terms = []
    for _ in range(r):
        W = A @ W
        terms.append(pnorm(norm, M1 @ W))
    gamma, val = h_bound(nM1, nM2, nA, terms, float(delta_max))
    return DeviationBound(kind, float(delta_max), gamma, nM1, nM2, nA, val)


def structured_bounds(norm: EllipsoidNorm, dec: Decomposition, enc: DecompositionEnclosure,
                      deltas: dict, r: int = DEFAULT_ORDER, nA: Interval | None = None) -> list:
    """:class:`DeviationBound` for every generator of ``dec``.

    Every deviation factor ``E - I`` of a sensor or actuator event is a
    single row, so each ``M1 A^i M2`` has rank one and its P-norm is the
    product of two vector lengths; only ``||A_cont||_P`` and
    ``||E_ctrl expm(A_cont T/2)||_P`` need the matrix spectral norm.
    ``A`` and ``-A`` give identical norms here, so the sign is irrelevant.
    """
    if r < 1:
        raise ValueError("order r must be at least 1")
    sys, spec = dec.system, dec.spec
    lay = spec.layout
    n = spec.n
    eye = np.eye(n)
    A = IntervalMatrix.point(spec.A_cont)
    if nA is None:
        nA = pnorm(norm, A)
    nM1_u = pnorm(norm, enc.M1_u)
    EhT = enc.E_half.T
    one = Interval(1.0, 1.0)

    # actuator side: r_i^T is the jump row, w_k = A^k e_u
    r_len, e_len, w_pows = [], [], []
    for i in range(sys.m):
        row = spec.E_u[i][lay.u.start + i] - eye[lay.u.start + i]
        r_len.append(norm.right(row))
        e = IntervalMatrix.point(eye[:, [lay.u.start + i]])
        e_len.append(norm.left(e))
        ws = []
        w = e
        for _ in range(r):
            w = A @ w
            ws.append(w)
        w_pows.append(ws)
    # sensor side: s_j^T is the jump row, a_j = E_ctrl e_y
    s_rows, a_len, s_len = [], [], []
    for j in range(sys.p):
        k = lay.y.start + j
        s = spec.E_y[j][k] - eye[k]
        s_rows.append(s)
        a_len.append(norm.left(spec.E_ctrl[:, k]))
        s_len.append(norm.right(s))

    out = []
    for g in dec.generators:
        kd = g.kind
        delta = float(deltas.get(kd, 0.0))
        if kd.family == "u":
            M1w = [enc.M1_u @ w for w in w_pows[kd.i]]
            terms = [norm.left(v) * r_len[kd.i] for v in M1w]
            nM1, nM2 = nM1_u, e_len[kd.i] * r_len[kd.i]
        elif kd.family == "y":
            b = EhT @ _col(s_rows[kd.j])
            nM1, nM2 = a_len[kd.j] * norm.right(b), one
            terms = []
            c = b
            AT = A.T
            for _ in range(r):
                c = AT @ c
                terms.append(a_len[kd.j] * norm.right(c))
        else:
            srow = IntervalMatrix.point(s_rows[kd.j].reshape(1, -1))
            scale = a_len[kd.j] * r_len[kd.i]
            terms = [abs((srow @ w)[0, 0]) * scale for w in w_pows[kd.i]]
            nM1 = a_len[kd.j] * s_len[kd.j]
            nM2 = e_len[kd.i] * r_len[kd.i]
        gamma, val = h_bound(nM1, nM2, nA, terms, delta)
        out.append(DeviationBound(kd, delta, gamma, nM1, nM2, nA, val))
    return out


def sampled_max(norm: EllipsoidNorm, gen, delta_max: float, samples: int = 100) -> float:
    """Largest floating ``||gen(tau)||_P`` over evenly spaced ``tau``.

    The grid covers ``[-delta_max, delta_max]``, or ``[0, delta_max]`` for
    one-sided (actuator-to-sensor) terms.
    """
    if delta_max <= 0.0:
        return 0.0
    lo = 0.0 if gen.one_sided else -delta_max
    return max(norm.approx(gen(t)) for t in np.linspace(lo, delta_max, samples))


__all__ = [
    "DEFAULT_ORDER",
    "DeviationBound",
    "EllipsoidNorm",
    "deviation_bound",
    "h_bound",
    "pnorm",
    "sampled_max",
    "structured_bounds",
]
