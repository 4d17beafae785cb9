import itertools

import numpy as np
import pytest

from timingcert.decomp import Kind, decompose, enclose, enclosed_factors, factor_form
from timingcert.lis_sim import transition_matrix
from timingcert.systems import random_system


def _random_timing(rng, sys):
    return rng.uniform(-0.5, 0.5, size=sys.m + sys.p) * sys.T * 0.999


def test_generator_count_and_order(rng):
    sys = random_system(rng, 2, 1, 2, 3)
    dec = decompose(sys)
    kinds = [g.kind for g in dec.generators]
    assert len(kinds) == sys.m + sys.p + sys.m * sys.p
    assert kinds == sorted(kinds, key=lambda k: k.sort_key)
    assert [str(k) for k in kinds[:3]] == ["U(1)", "U(2)", "Y(1)"]
    assert str(kinds[-1]) == "UY(2,3)"


def test_generators_vanish_at_zero(rng):
    for _ in range(10):
        dec = decompose(random_system(rng))
        for g in dec.generators:
            assert not g(0.0).any()


def test_pair_term_zero_for_nonpositive_argument(rng):
    dec = decompose(random_system(rng, 1, 1, 1, 1))
    g = dec.generator(Kind("uy", i=0, j=0))
    assert not g(-0.001).any()
    assert g(0.001).any()


def test_single_channel_matches_product(rng):
    for _ in range(20):
        sys = random_system(rng, 1, 1, 1, 1)
        dec = decompose(sys)
        t = _random_timing(rng, sys)
        A = transition_matrix(dec.spec, t)
        assert np.allclose(dec.evaluate(t), A, rtol=1e-10, atol=1e-10 * np.abs(A).max())


def test_factor_forms(rng):
    sys = random_system(rng, 2, 2, 2, 2)
    dec = decompose(sys)
    spec = dec.spec
    I = np.eye(sys.n)
    M1, A, M2, s = factor_form(dec, Kind("u", i=1))
    assert s == -1 and np.array_equal(M2, spec.E_u[1] - I)
    assert np.array_equal(M1, spec.E_ctrl @ dec.E_half)
    M1, A, M2, s = factor_form(dec, Kind("y", j=0))
    assert s == 1 and np.array_equal(M2, I)
    assert np.array_equal(M1, spec.E_ctrl @ (spec.E_y[0] - I) @ dec.E_half)
    M1, A, M2, s = factor_form(dec, Kind("uy", i=0, j=1))
    assert s == 1 and np.array_equal(M1, spec.E_ctrl @ (spec.E_y[1] - I))
    assert np.array_equal(M2, spec.E_u[0] - I)
    assert A is spec.A_cont


def test_factor_form_reproduces_generator(rng):
    from scipy.linalg import expm

    sys = random_system(rng, 2, 2, 2, 2)
    dec = decompose(sys)
    for g in dec.generators:
        M1, A, M2, s = factor_form(dec, g.kind)
        tau = 0.1 * sys.T
        ref = M1 @ (expm(A * s * tau) - np.eye(sys.n)) @ M2
        assert np.allclose(g(tau), ref, rtol=1e-11, atol=1e-12)


def test_enclosures_contain_floating_factors(rng):
    for _ in range(10):
        sys = random_system(rng)
        dec = decompose(sys)
        enc = enclose(dec)
        scale = np.abs(dec.A_nominal).max()
        assert np.all(enc.A_nominal.lo <= dec.A_nominal + 1e-12 * scale)
        assert np.all(dec.A_nominal - 1e-12 * scale <= enc.A_nominal.hi)
        for g in dec.generators:
            M1 = enclosed_factors(dec, enc, g.kind)[0]
            tol = 1e-12 * max(1.0, np.abs(g.M1).max())
            assert np.all(M1.lo <= g.M1 + tol) and np.all(g.M1 - tol <= M1.hi)


def test_continuity_toward_zero(rng):
    sys = random_system(rng, 2, 2, 2, 2, T=0.3)
    dec = decompose(sys)
    for g in dec.generators:
        norms = [np.linalg.norm(g(f * sys.T), 2) for f in (1e-3, 1e-6, 1e-9)]
        assert norms[0] > norms[1] > norms[2] >= 0.0
        assert norms[2] < 1e-6 * max(norms[0], 1e-300) + 1e-12


def test_product_expansion_small(rng):
    # prod (A_k + B_k) equals the sum over all digit vectors d of the
    # ordered products picking A_k (d_k = 0) or B_k (d_k = 1)
    N = 3
    A = [rng.normal(size=(4, 4)) for _ in range(N)]
    B = [rng.normal(size=(4, 4)) for _ in range(N)]
    direct = np.eye(4)
    for k in range(N):
        direct = (A[k] + B[k]) @ direct
    total = np.zeros((4, 4))
    for d in itertools.product((0, 1), repeat=N):
        X = np.eye(4)
        for k in range(N):
            X = (B[k] if d[k] else A[k]) @ X
        total += X
    assert np.allclose(total, direct, rtol=1e-12, atol=1e-12)


def test_unknown_kind():
    with pytest.raises(ValueError):
        Kind("z")
