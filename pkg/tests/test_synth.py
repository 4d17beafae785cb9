import numpy as np
import pytest

from timingcert.decomp import decompose
from timingcert.pnorm import EllipsoidNorm, pnorm
from timingcert.synth import (
    INFEASIBLE,
    OK,
    SynthesisProblem,
    beta_search,
    deviation_set,
    initial_parameters,
    inverse_transform_cholesky,
    lmi_P,
    lmi_residuals,
    lyapunov_P,
    next_beta,
    norm_lmi_holds,
    precondition,
    spectral_radius,
)
from timingcert.systems import double_integrator, scalar_deadbeat


def _stable(rng, n, rho=0.9):
    A = rng.normal(size=(n, n))
    return A * (rho * rng.uniform(0.2, 1.0) / spectral_radius(A))


# -- Lyapunov ------------------------------------------------------------------------------

def test_lyapunov_zero_matrix():
    r = lyapunov_P(np.zeros((3, 3)), 0.5)
    assert r.ok and np.allclose(r.K, np.eye(3), atol=1e-14)


def test_lyapunov_scalar():
    r = lyapunov_P(np.array([[0.5]]), 1.0)
    assert r.P[0, 0] == pytest.approx(4.0 / 3.0, rel=1e-14)
    assert pnorm(EllipsoidNorm(r.K), [[0.5]]).contains(0.5)


def test_lyapunov_jordan_block():
    A = np.array([[0.5, 1.0], [0.0, 0.5]])
    r = lyapunov_P(A, 0.9)
    e = pnorm(EllipsoidNorm(r.K), A)
    assert e.hi <= 0.9 and e.lo > 0.5


def test_lyapunov_infeasible():
    r = lyapunov_P(np.array([[1.1]]), 1.0)
    assert not r.ok and r.status == INFEASIBLE


def test_lyapunov_posterior(rng):
    for _ in range(20):
        n = int(rng.integers(1, 9))
        A = _stable(rng, n)
        rb = 0.5 * (1 + spectral_radius(A))
        r = lyapunov_P(A, rb)
        assert r.ok
        assert pnorm(EllipsoidNorm(r.K), A).hi <= rb + 1e-6


# -- LMI ------------------------------------------------------------------------------------

def test_lmi_nominal_only(rng):
    A = _stable(rng, 4)
    r = lmi_P(SynthesisProblem(A, (), 0.95, 0.0))
    assert r.ok and r.gamma > 0.0
    assert pnorm(EllipsoidNorm(r.K), A).hi < 0.95


def test_lmi_zero_matrix():
    r = lmi_P(SynthesisProblem(np.zeros((2, 2)), (np.zeros((2, 2)),), 0.5, 0.1))
    assert r.ok and r.gamma == pytest.approx(1.0, abs=1e-5)


def test_lmi_scalar():
    r = lmi_P(SynthesisProblem(np.array([[0.5]]), (np.array([[0.1]]),), 0.9, 0.2))
    assert r.ok and r.gamma == pytest.approx(1.0, abs=1e-5)


def test_lmi_infeasible_cases():
    assert lmi_P(SynthesisProblem(np.array([[0.95]]), (), 0.9, 0.0)).status == INFEASIBLE
    prob = SynthesisProblem(np.array([[0.5]]), (np.array([[0.3]]),), 0.9, 0.2)
    assert lmi_P(prob).status == INFEASIBLE
    prob = SynthesisProblem(np.array([[0.5]]), (np.array([[0.3]]),), 0.9, 0.0)
    assert lmi_P(prob).status == INFEASIBLE


def test_lmi_posterior_checks(rng):
    for _ in range(10):
        n = int(rng.integers(2, 6))
        A = _stable(rng, n, 0.8)
        devs = tuple(0.01 * rng.normal(size=(n, n)) for _ in range(3))
        prob = SynthesisProblem(A, devs, 0.95, 0.2)
        r = lmi_P(prob)
        assert r.status == OK
        res = lmi_residuals(r.P, prob, r.gamma)
        assert min(res.values()) >= -1e-8


def test_norm_lmi_equivalence(rng):
    agree = 0
    for _ in range(100):
        n = int(rng.integers(1, 6))
        M = rng.normal(size=(n, n))
        X = rng.normal(size=(n, n))
        P = X @ X.T + 0.1 * np.eye(n)
        norm = EllipsoidNorm(np.linalg.cholesky(P))
        c = norm.approx(M) * rng.uniform(0.8, 1.2)
        e = pnorm(norm, M)
        if e.lo <= c <= e.hi:
            continue
        assert norm_lmi_holds(M, P, c) == (e.hi < c)
        agree += 1
    assert agree >= 95


# -- preconditioning -------------------------------------------------------------------------

def test_precondition_scalar():
    R_inv, At, devs = precondition(np.array([[0.9]]), [np.array([[0.1]])])
    assert At[0, 0] == pytest.approx(0.9, rel=1e-12)
    assert devs[0][0, 0] == pytest.approx(0.1, rel=1e-12)


def test_precondition_contracts(rng):
    for _ in range(10):
        A = _stable(rng, 4, 0.95)
        R_inv, At, _ = precondition(A)
        assert np.linalg.norm(At, 2) < 1.0
        assert np.allclose(R_inv, np.triu(R_inv))


def test_precondition_near_identity():
    A = np.diag([0.5, 0.3])
    _, At, _ = precondition(A)
    assert np.allclose(At, A, atol=1e-6)


def test_inverse_transform_examples(rng):
    K = _tril(rng, 3)
    assert np.array_equal(inverse_transform_cholesky(K, np.eye(3)), K.T)
    out = inverse_transform_cholesky(np.array([[2.0]]), np.array([[3.0]]))
    assert out[0, 0] == 6.0 and out[0, 0] ** 2 == 36.0
    R_inv = np.triu(rng.normal(size=(3, 3))) + 3 * np.eye(3)
    Kt = _tril(rng, 3)
    Pt = Kt @ Kt.T
    F = inverse_transform_cholesky(Kt, R_inv)
    assert np.allclose(F.T @ F, R_inv.T @ Pt @ R_inv, rtol=1e-10, atol=1e-10)
    assert np.allclose(F, np.triu(F))


def _tril(rng, n):
    K = np.tril(rng.normal(size=(n, n)))
    K[np.diag_indices(n)] = np.abs(K[np.diag_indices(n)]) + 1.0
    return K


# -- heuristic ---------------------------------------------------------------------------------

def test_initial_parameters():
    rb, b, dh = initial_parameters(0.5, 1, 1)
    assert rb == pytest.approx(0.9) and b == pytest.approx(0.25 * 0.1 / 3)
    assert initial_parameters(0.0, 2, 3)[0] == pytest.approx(0.8)
    assert dh == 2.0


def test_small_gamma_shrinks_step():
    _, dh = next_beta(0.01, 2.0, 1e-6, 0.5, 0.9)
    assert dh == pytest.approx(0.9)


def test_large_norm_shrinks_beta():
    b, dh = next_beta(0.08, 2.0, 0.1, 1.2, 0.9)
    assert b == pytest.approx(0.02) and dh == 2.0


def test_deviation_set_size():
    sys = double_integrator(T=0.1, jitter_u=0.001, jitter_y=0.001)
    devs = deviation_set(decompose(sys))
    assert len(devs) == 8
    assert all(np.any(D) for D in devs)


def test_beta_search_deadbeat():
    sys = scalar_deadbeat(T=1.0, jitter=1e-3)
    res = beta_search(sys)
    assert res.ok and res.rho_tilde < 1.0
    assert res.rho_bar == pytest.approx(0.8 + 0.2 * spectral_radius(decompose(sys).A_nominal))


def test_beta_search_unstable_nominal():
    one = [[1.0]]
    from timingcert.model import ClosedLoopSystem

    sys = ClosedLoopSystem(one, one, one, [[0.0]], [[0.0]], one, 1.0)
    res = beta_search(sys)
    assert not res.ok and res.fallback
