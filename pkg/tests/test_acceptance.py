"""Exit criteria. Each test is named ``test_criterion_NN_*``; the terminal
summary prints one PASS/FAIL line per criterion with the measured values."""
import json
import math
import time
from pathlib import Path

import mpmath
import numpy as np
import pytest

from timingcert.cli import main, parse_config, to_dict
from timingcert.decomp import decompose, enclose
from timingcert.interval import exp_enclosure, spectral_norm_enclosure
from timingcert.lis_sim import sample_periods, transition_matrix
from timingcert.model import build_lis, structured_exp
from timingcert.pnorm import EllipsoidNorm, pnorm, sampled_max, structured_bounds
from timingcert.synth import (
    SynthesisProblem,
    beta_search,
    lmi_P,
    lmi_residuals,
    lyapunov_P,
    norm_lmi_holds,
    spectral_radius,
)
from timingcert.systems import (
    block_diagonal,
    double_integrator,
    four_axis,
    random_system,
    scalar_deadbeat,
)
from timingcert.verify import certified_scale, certify, channel_deltas

pytestmark = pytest.mark.acceptance

DATA = Path(__file__).parent / "data"


def _rng(k):
    return np.random.default_rng(1000 + k)


def _timing(rng, sys):
    return rng.uniform(-0.5, 0.5, size=sys.m + sys.p) * sys.T * 0.999


def _admissible(rng, sys, shape):
    lo = np.concatenate([sys.dt_u_lo, sys.dt_y_lo])
    hi = np.concatenate([sys.dt_u_hi, sys.dt_y_hi])
    return rng.uniform(lo, hi, size=(*shape, lo.size))


# 1 -------------------------------------------------------------------------------------------

def test_criterion_01_decomposition_equivalence(record):
    rng = _rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        sys = random_system(rng, max_dim=3)
        dec = decompose(sys)
        spec = dec.spec
        for _ in range(20):
            t = _timing(rng, sys)
            A = transition_matrix(spec, t)
            err = np.linalg.norm(dec.evaluate(t) - A) / np.linalg.norm(A)
            worst = max(worst, err)
    elapsed = time.perf_counter() - t0
    record(f"max rel err {worst:.2e} over 2000 timings, {elapsed:.1f} s")
    assert worst <= 1e-9
    assert elapsed <= 60.0


# 2 -------------------------------------------------------------------------------------------

def test_criterion_02_event_matrix_lemmas(record):
    rng = _rng(2)
    checks = 0
    for _ in range(100):
        sys = random_system(rng, max_dim=3)
        spec = build_lis(sys)
        I = np.eye(sys.n)
        X1 = structured_exp(sys, rng.uniform(-0.5, 0.5) * sys.T)
        X2 = structured_exp(sys, rng.uniform(-0.5, 0.5) * sys.T)
        # controller event commutes with the flow
        assert np.array_equal(spec.E_ctrl @ X1, X1 @ spec.E_ctrl)
        Du = [("u", i, E - I) for i, E in enumerate(spec.E_u)]
        Dy = [("y", j, E - I) for j, E in enumerate(spec.E_y)]
        # actuation ignores earlier flow, measurement ignores later flow
        for _, _, D in Du:
            assert np.array_equal(D @ X1, D)
        for _, _, D in Dy:
            assert np.array_equal(X1 @ D, D)
        ds = Du + Dy
        for a, i, Da in ds:
            for b, j, Db in ds:
                if (a, i) != (b, j):
                    if (a, b) != ("y", "u"):
                        assert not (Da @ X1 @ Db).any()
                    else:
                        assert not (Da @ Db).any()
                Ea, Eb = Da + I, Db + I
                assert np.array_equal(Ea @ Eb, Eb @ Ea)
                checks += 2
        for a in ds:
            for b in ds:
                for c in ds:
                    if len({a[:2], b[:2], c[:2]}) == 3:
                        assert not (a[2] @ X1 @ b[2] @ X2 @ c[2]).any()
                        checks += 1
        # order of simultaneous events is immaterial
        sched = list(spec.E_u) + list(spec.E_y)
        fwd = np.eye(sys.n)
        for E in sched:
            fwd = E @ fwd
        bwd = np.eye(sys.n)
        for E in reversed(sched):
            bwd = E @ bwd
        assert np.array_equal(fwd, bwd)
    record(f"{checks} exact identities on 100 instances")


# 3 -------------------------------------------------------------------------------------------

def test_criterion_03_verified_enclosures(record):
    rng = _rng(3)
    worst_w = 0.0
    for k in range(1000):
        n = int(rng.integers(1, 17))
        m = int(rng.integers(1, 17))
        A = rng.normal(size=(n, m)) * 10.0 ** rng.uniform(-3, 3)
        s = np.linalg.svd(A, compute_uv=False)[0]
        e = spectral_norm_enclosure(A)
        assert e.lo <= s <= e.hi, (k, e, s)
        worst_w = max(worst_w, e.width / s)
    assert worst_w <= 1e-6
    mpmath.mp.dps = 40
    for k in range(200):
        n = int(rng.integers(1, 7))
        A = rng.normal(size=(n, n))
        A *= rng.uniform(0.0, 5.0) / np.linalg.norm(A, 2)
        enc = exp_enclosure(A)
        ref = mpmath.expm(mpmath.matrix(A.tolist()))
        for i in range(n):
            for j in range(n):
                assert mpmath.mpf(enc.lo[i, j]) <= ref[i, j] <= mpmath.mpf(enc.hi[i, j]), (k, i, j)
    record(f"spectral: 1000 matrices, max rel width {worst_w:.1e}; exp: 200 matrices")


# 4 -------------------------------------------------------------------------------------------

def _random_factor(rng, sys, dec):
    rho = spectral_radius(dec.A_nominal)
    if rho < 0.999:
        res = lyapunov_P(dec.A_nominal, 0.5 * (1.0 + rho))
        if res.ok:
            return res.K
    K = np.tril(rng.normal(size=(sys.n, sys.n)))
    K[np.diag_indices(sys.n)] = np.abs(K[np.diag_indices(sys.n)]) + 1.0
    return K


def test_criterion_04_bound_soundness_and_tightness(record):
    rng = _rng(4)
    worst_gap = 0.0
    terms = 0
    for _ in range(50):
        sys = random_system(rng, max_dim=3, jitter=0.01)
        dec = decompose(sys)
        norm = EllipsoidNorm(_random_factor(rng, sys, dec))
        enc = enclose(dec)
        deltas = channel_deltas(sys)
        for b in structured_bounds(norm, dec, enc, deltas):
            g = dec.generator(b.kind)
            smax = sampled_max(norm, g, deltas[b.kind], samples=100)
            assert smax <= b.value.hi, (b.kind, smax, b.value)
            terms += 1
            if deltas[b.kind] <= sys.T / 100 and b.value.hi > 0.0:
                worst_gap = max(worst_gap, (b.value.hi - smax) / b.value.hi)
    record(f"{terms} terms sound, max relative gap {worst_gap:.2e}")
    assert worst_gap <= 0.5


# 5 -------------------------------------------------------------------------------------------

def test_criterion_05_positive_certified_window(record):
    t0 = time.perf_counter()
    sys = double_integrator(T=0.1, jitter_u=0.01, jitter_y=0.01)
    res = beta_search(sys.scaled_timing(0.2))
    s, cert = certified_scale(sys, res.K, iterations=25)
    elapsed = time.perf_counter() - t0
    record(f"certified scale {s:.4g} (window +-{s * 0.01:.3g} s at T = 0.1 s), "
           f"rho_tilde {cert.rho_tilde.hi:.10f}, {elapsed:.1f} s")
    assert s > 0.0 and cert.stable
    assert elapsed <= 120.0


# 6 -------------------------------------------------------------------------------------------

def _decay_instances():
    di = double_integrator(T=0.1, jitter_u=0.0005, jitter_y=0.0005)
    return [
        ("deadbeat", scalar_deadbeat(T=1.0, jitter=1e-3)),
        ("double integrator", di),
        ("four-axis", four_axis()),
    ]


def test_criterion_06_certified_decay_vs_simulation(record):
    rng = _rng(6)
    stable_seen = 0
    for name, sys in _decay_instances():
        K = beta_search(sys).K
        cert = certify(sys, K)
        if not cert.stable:
            record(f"{name}: not certified (rho_tilde {cert.rho_tilde.hi:.4f}), skipped")
            continue
        stable_seen += 1
        P = K @ K.T
        C = math.sqrt(np.linalg.cond(P))
        rho = cert.rho_tilde.hi
        spec = build_lis(sys)
        timings = _admissible(rng, sys, (1000, 50))
        k = np.arange(51)
        violations = 0
        worst = 0.0
        for run in range(1000):
            x0 = rng.normal(size=sys.n)
            xs = sample_periods(spec, timings[run], x0)
            ratio = np.linalg.norm(xs, axis=1) / (C * rho ** k * np.linalg.norm(x0))
            worst = max(worst, float(ratio.max()))
            violations += int(np.sum(ratio > 1.0))
        record(f"{name}: rho_tilde {rho:.6f}, 1000x50 runs, {violations} violations, "
               f"max |x_k|/bound {worst:.3f}")
        assert violations == 0
    assert stable_seen == 3


# 7 -------------------------------------------------------------------------------------------

def test_criterion_07_lyapunov_lmi_posteriors(record):
    rng = _rng(7)
    worst = -np.inf
    for _ in range(100):
        n = int(rng.integers(1, 17))
        A = rng.normal(size=(n, n))
        A *= rng.uniform(0.05, 0.98) / spectral_radius(A)
        rho_bar = 0.5 * (1.0 + spectral_radius(A))
        res = lyapunov_P(A, rho_bar)
        assert res.ok
        e = pnorm(EllipsoidNorm(res.K), A)
        worst = max(worst, e.hi - rho_bar)
        assert e.hi <= rho_bar + 1e-6
    lmi_ok = 0
    for _ in range(20):
        n = int(rng.integers(1, 9))
        A = rng.normal(size=(n, n))
        A *= rng.uniform(0.1, 0.9) / spectral_radius(A)
        devs = tuple(0.02 * rng.normal(size=(n, n)) for _ in range(int(rng.integers(0, 4))))
        prob = SynthesisProblem(A, devs, 0.95, 0.3)
        res = lmi_P(prob)
        if res.ok:
            lmi_ok += 1
            assert min(lmi_residuals(res.P, prob, res.gamma).values()) >= -1e-8
    assert lmi_ok >= 15
    agree = decided = 0
    for _ in range(100):
        n = int(rng.integers(1, 7))
        M = rng.normal(size=(n, n))
        X = rng.normal(size=(n, n))
        P = X @ X.T + 0.1 * np.eye(n)
        norm = EllipsoidNorm(np.linalg.cholesky(P))
        c = norm.approx(M) * rng.uniform(0.7, 1.3)
        e = pnorm(norm, M)
        if e.lo <= c <= e.hi:
            continue  # c inside the enclosure: the verified side cannot decide
        decided += 1
        agree += norm_lmi_holds(M, P, c) == (e.hi < c)
    record(f"lyapunov max ||A||_P - rho_bar {worst:.1e}; {lmi_ok}/20 LMIs re-verified; "
           f"norm/LMI agree {agree}/{decided}")
    assert agree == decided >= 95


# 8 -------------------------------------------------------------------------------------------

def test_criterion_08_jordan_block(record):
    A = np.array([[0.5, 1.0], [0.0, 0.5]])
    lows = []
    for rb in (0.55, 0.6, 0.7, 0.8, 0.9, 0.99, 1.0):
        res = lyapunov_P(A, rb)
        e = pnorm(EllipsoidNorm(res.K), A)
        lows.append(e.lo)
        assert e.lo > 0.5
    for rb in (0.6, 0.75, 0.9):
        res = lmi_P(SynthesisProblem(A, (), rb, 0.0))
        assert res.ok
        e = pnorm(EllipsoidNorm(res.K), A)
        lows.append(e.lo)
        assert e.lo > 0.5
    e9 = pnorm(EllipsoidNorm(lyapunov_P(A, 0.9).K), A)
    record(f"min verified ||A||_P over synthesized P {min(lows):.6f}; "
           f"lyapunov_P(0.9) gives {e9.hi:.6f}")
    assert e9.hi <= 0.9


# 9 -------------------------------------------------------------------------------------------

def _pipeline(sys):
    t0 = time.perf_counter()
    search = beta_search(sys)
    t1 = time.perf_counter()
    # sub-second timings: best of three against scheduler noise
    best = math.inf
    for _ in range(3):
        t = time.perf_counter()
        cert = certify(sys, search.K)
        best = min(best, time.perf_counter() - t)
    return cert, t1 - t0, best


def test_criterion_09_block_diagonal_doubling(record):
    base = four_axis()
    double = block_diagonal(base, base)
    c1, s1, v1 = _pipeline(base)
    c2, s2, v2 = _pipeline(double)
    growth = v2 / v1
    record(f"n={base.n}: rho_tilde {c1.rho_tilde.hi:.6f} ({c1.verdict}), certify {v1:.2f} s, "
           f"synthesis {s1:.1f} s")
    record(f"n={double.n}: rho_tilde {c2.rho_tilde.hi:.6f} ({c2.verdict}), certify {v2:.2f} s, "
           f"synthesis {s2:.1f} s")
    record(f"certification time growth {growth:.1f}x, end-to-end {(s2 + v2) / (s1 + v1):.1f}x")
    assert c2.rho_tilde.hi >= c1.rho_tilde.hi
    assert growth <= 8.0
    assert s2 + v2 <= 30 * 60


# 10 ------------------------------------------------------------------------------------------

def test_criterion_10_cli_contract(record, capsys, tmp_path):
    expected = {"deadbeat_zero_jitter": 0, "deadbeat_jitter": 0, "unstable_nominal": 2,
                "half_period_violation": 1, "unknown_option": 1, "malformed": 1}
    codes = {}
    for name, code in expected.items():
        out = tmp_path / f"{name}.json"
        codes[name] = main([str(DATA / f"{name}.json"), "--json", "--out", str(out)])
        capsys.readouterr()
        if code != 1:
            rep = json.loads(out.read_text())
            rep.pop("timing")
            golden = json.loads((DATA / "golden" / f"{name}.json").read_text())
            assert rep["verdict"] == golden["verdict"] and rep["reason"] == golden["reason"]
            assert set(rep) == set(golden)
    assert codes == expected
    trips = 0
    for name in ("deadbeat_zero_jitter", "deadbeat_jitter", "unstable_nominal"):
        job = parse_config(json.loads((DATA / f"{name}.json").read_text()))
        again = parse_config(json.loads(json.dumps(to_dict(job))))
        assert again == job and to_dict(again) == to_dict(job)
        trips += 1
    record(f"exit codes {sorted(set(codes.values()))} as expected; {trips} round trips exact")
