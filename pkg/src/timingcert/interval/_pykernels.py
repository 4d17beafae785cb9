"""Pure numpy interval kernels.

Operation order matches ``_ckernels.pyx`` exactly so that both backends
produce identical endpoints; vectorisation only runs over independent
output entries, never across a reduction.
"""
import numpy as np

_NEG = -np.inf
_POS = np.inf


def _dn(x):
    return np.nextafter(x, _NEG)


def _up(x):
    return np.nextafter(x, _POS)


def _products(a, b, c, d):
    p1 = a * c
    p2 = a * d
    p3 = b * c
    p4 = b * d
    mn = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
    mx = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
    return _dn(mn), _up(mx)


def _quotients(a, b, c, d):
    q1 = a / c
    q2 = a / d
    q3 = b / c
    q4 = b / d
    mn = np.minimum(np.minimum(q1, q2), np.minimum(q3, q4))
    mx = np.maximum(np.maximum(q1, q2), np.maximum(q3, q4))
    return _dn(mn), _up(mx)


def matmul(alo, ahi, blo, bhi):
    n, kk = alo.shape
    m = blo.shape[1]
    clo = np.zeros((n, m))
    chi = np.zeros((n, m))
    point = np.array_equal(alo, ahi) and np.array_equal(blo, bhi)
    for k in range(kk):
        if point:
            p = alo[:, k, None] * blo[None, k, :]
            plo, phi = _dn(p), _up(p)
        else:
            plo, phi = _products(alo[:, k, None], ahi[:, k, None],
                                 blo[None, k, :], bhi[None, k, :])
        clo = _dn(clo + plo)
        chi = _up(chi + phi)
    return clo, chi


def _square(a, b):
    if a >= 0.0:
        qlo, qhi = _dn(a * a), _up(b * b)
    elif b <= 0.0:
        qlo, qhi = _dn(b * b), _up(a * a)
    else:
        qlo, qhi = 0.0, _up(a * a if a * a > b * b else b * b)
    return max(float(qlo), 0.0), float(qhi)


def cholesky(plo, phi):
    n = plo.shape[0]
    llo = np.zeros((n, n))
    lhi = np.zeros((n, n))
    for j in range(n):
        slo = plo[j, j]
        shi = phi[j, j]
        for k in range(j):
            qlo, qhi = _square(llo[j, k], lhi[j, k])
            slo = _dn(slo - qhi)
            shi = _up(shi - qlo)
        if slo <= 0.0:
            return llo, lhi, j
        dlo = _dn(np.sqrt(slo))
        dhi = _up(np.sqrt(shi))
        if dlo <= 0.0:
            return llo, lhi, j
        llo[j, j] = dlo
        lhi[j, j] = dhi
        if j + 1 < n:
            tlo = plo[j + 1:, j].copy()
            thi = phi[j + 1:, j].copy()
            for k in range(j):
                qlo, qhi = _products(llo[j + 1:, k], lhi[j + 1:, k], llo[j, k], lhi[j, k])
                tlo = _dn(tlo - qhi)
                thi = _up(thi - qlo)
            llo[j + 1:, j], lhi[j + 1:, j] = _quotients(tlo, thi, dlo, dhi)
    return llo, lhi, -1


def lower_inverse(llo, lhi):
    n = llo.shape[0]
    xlo = np.zeros((n, n))
    xhi = np.zeros((n, n))
    diag_lo = np.diag(llo)
    diag_hi = np.diag(lhi)
    bad = np.nonzero((diag_lo <= 0.0) & (diag_hi >= 0.0))[0]
    if bad.size:
        return xlo, xhi, int(bad[0])
    for i in range(n):
        dlo, dhi = llo[i, i], lhi[i, i]
        qlo, qhi = _quotients(1.0, 1.0, dlo, dhi)
        xlo[i, i], xhi[i, i] = qlo, qhi
        if i == 0:
            continue
        slo = np.zeros(i)
        shi = np.zeros(i)
        for k in range(i):
            # entry j accumulates k = j, j+1, ..., i-1 in ascending order
            plo, phi = _products(llo[i, k], lhi[i, k], xlo[k, :k + 1], xhi[k, :k + 1])
            slo[:k + 1] = _dn(slo[:k + 1] + plo)
            shi[:k + 1] = _up(shi[:k + 1] + phi)
        xlo[i, :i], xhi[i, :i] = _quotients(-shi, -slo, dlo, dhi)
    return xlo, xhi, -1
