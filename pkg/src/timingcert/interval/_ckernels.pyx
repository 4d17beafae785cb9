# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled interval kernels.

Every routine here mirrors ``_pykernels`` operation by operation, so both
backends return bit-identical endpoints. Each rounded floating-point
operation is followed by a one-ulp outward ``nextafter`` step.
"""
import numpy as np

from libc.math cimport INFINITY, nextafter, sqrt


cdef inline double _dn(double x) noexcept nogil:
    return nextafter(x, -INFINITY)


cdef inline double _up(double x) noexcept nogil:
    return nextafter(x, INFINITY)


cdef inline void _imul(double a, double b, double c, double d,
                       double* lo, double* hi) noexcept nogil:
    cdef double p1 = a * c
    cdef double p2 = a * d
    cdef double p3 = b * c
    cdef double p4 = b * d
    cdef double mn = p1
    cdef double mx = p1
    if p2 < mn:
        mn = p2
    if p3 < mn:
        mn = p3
    if p4 < mn:
        mn = p4
    if p2 > mx:
        mx = p2
    if p3 > mx:
        mx = p3
    if p4 > mx:
        mx = p4
    lo[0] = _dn(mn)
    hi[0] = _up(mx)


cdef inline void _idiv(double a, double b, double c, double d,
                       double* lo, double* hi) noexcept nogil:
    # caller guarantees 0 not in [c, d]
    cdef double q1 = a / c
    cdef double q2 = a / d
    cdef double q3 = b / c
    cdef double q4 = b / d
    cdef double mn = q1
    cdef double mx = q1
    if q2 < mn:
        mn = q2
    if q3 < mn:
        mn = q3
    if q4 < mn:
        mn = q4
    if q2 > mx:
        mx = q2
    if q3 > mx:
        mx = q3
    if q4 > mx:
        mx = q4
    lo[0] = _dn(mn)
    hi[0] = _up(mx)


def matmul(const double[:, ::1] alo, const double[:, ::1] ahi,
           const double[:, ::1] blo, const double[:, ::1] bhi):
    cdef Py_ssize_t n = alo.shape[0]
    cdef Py_ssize_t kk = alo.shape[1]
    cdef Py_ssize_t m = blo.shape[1]
    clo_arr = np.zeros((n, m))
    chi_arr = np.zeros((n, m))
    cdef double[:, ::1] clo = clo_arr
    cdef double[:, ::1] chi = chi_arr
    cdef Py_ssize_t i, j, k
    cdef double slo, shi, plo, phi
    with nogil:
        for i in range(n):
            for j in range(m):
                slo = 0.0
                shi = 0.0
                for k in range(kk):
                    _imul(alo[i, k], ahi[i, k], blo[k, j], bhi[k, j], &plo, &phi)
                    slo = _dn(slo + plo)
                    shi = _up(shi + phi)
                clo[i, j] = slo
                chi[i, j] = shi
    return clo_arr, chi_arr


def cholesky(const double[:, ::1] plo, const double[:, ::1] phi):
    """Return (llo, lhi, failed_pivot); failed_pivot is -1 on success."""
    cdef Py_ssize_t n = plo.shape[0]
    llo_arr = np.zeros((n, n))
    lhi_arr = np.zeros((n, n))
    cdef double[:, ::1] llo = llo_arr
    cdef double[:, ::1] lhi = lhi_arr
    cdef Py_ssize_t i, j, k
    cdef double slo, shi, a, b, qlo, qhi, tlo, thi, dlo, dhi
    cdef Py_ssize_t failed = -1
    with nogil:
        for j in range(n):
            slo = plo[j, j]
            shi = phi[j, j]
            for k in range(j):
                a = llo[j, k]
                b = lhi[j, k]
                if a >= 0.0:
                    qlo = _dn(a * a)
                    qhi = _up(b * b)
                elif b <= 0.0:
                    qlo = _dn(b * b)
                    qhi = _up(a * a)
                else:
                    qlo = 0.0
                    qhi = _up(a * a if a * a > b * b else b * b)
                if qlo < 0.0:
                    qlo = 0.0
                slo = _dn(slo - qhi)
                shi = _up(shi - qlo)
            if slo <= 0.0:
                failed = j
                break
            dlo = _dn(sqrt(slo))
            dhi = _up(sqrt(shi))
            if dlo <= 0.0:
                failed = j
                break
            llo[j, j] = dlo
            lhi[j, j] = dhi
            for i in range(j + 1, n):
                tlo = plo[i, j]
                thi = phi[i, j]
                for k in range(j):
                    _imul(llo[i, k], lhi[i, k], llo[j, k], lhi[j, k], &qlo, &qhi)
                    tlo = _dn(tlo - qhi)
                    thi = _up(thi - qlo)
                _idiv(tlo, thi, dlo, dhi, &qlo, &qhi)
                llo[i, j] = qlo
                lhi[i, j] = qhi
    return llo_arr, lhi_arr, failed


def lower_inverse(const double[:, ::1] llo, const double[:, ::1] lhi):
    """Return (xlo, xhi, failed_pivot) for the inverse of a lower-triangular interval matrix."""
    cdef Py_ssize_t n = llo.shape[0]
    xlo_arr = np.zeros((n, n))
    xhi_arr = np.zeros((n, n))
    cdef double[:, ::1] xlo = xlo_arr
    cdef double[:, ::1] xhi = xhi_arr
    cdef Py_ssize_t i, j, k
    cdef double slo, shi, plo, phi, qlo, qhi
    cdef Py_ssize_t failed = -1
    with nogil:
        for i in range(n):
            if llo[i, i] <= 0.0 and lhi[i, i] >= 0.0:
                failed = i
                break
        if failed < 0:
            for i in range(n):
                _idiv(1.0, 1.0, llo[i, i], lhi[i, i], &qlo, &qhi)
                xlo[i, i] = qlo
                xhi[i, i] = qhi
                for j in range(i):
                    slo = 0.0
                    shi = 0.0
                    for k in range(j, i):
                        _imul(llo[i, k], lhi[i, k], xlo[k, j], xhi[k, j], &plo, &phi)
                        slo = _dn(slo + plo)
                        shi = _up(shi + phi)
                    _idiv(-shi, -slo, llo[i, i], lhi[i, i], &qlo, &qhi)
                    xlo[i, j] = qlo
                    xhi[i, j] = qhi
    return xlo_arr, xhi_arr, failed
