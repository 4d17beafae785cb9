"""Verified numerics: outward-rounded interval scalars and matrices.

The hot loops (interval matrix product, Cholesky, triangular inverse) run in
a compiled extension when it is built and in numpy otherwise; see
:data:`BACKEND`.
"""
from ._backend import BACKEND
from .core import Interval, IntervalMatrix
from .enclosures import (
    EXP_TAYLOR_ORDER,
    NotPositiveDefiniteError,
    SingularIntervalError,
    cholesky_enclosure,
    exp_enclosure,
    frobenius_norm_bound,
    spectral_norm_enclosure,
    triangular_inverse_enclosure,
    vector_norm_enclosure,
)

__all__ = [
    "BACKEND",
    "EXP_TAYLOR_ORDER",
    "Interval",
    "IntervalMatrix",
    "NotPositiveDefiniteError",
    "SingularIntervalError",
    "cholesky_enclosure",
    "exp_enclosure",
    "frobenius_norm_bound",
    "spectral_norm_enclosure",
    "triangular_inverse_enclosure",
    "vector_norm_enclosure",
]
