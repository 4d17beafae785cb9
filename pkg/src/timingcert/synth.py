"""Synthesis of the common quadratic Lyapunov matrix ``P = K K^T``.

Nothing here is trusted by the certificate: whatever ``P`` comes out is
re-verified in interval arithmetic by :mod:`timingcert.verify`.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np
from scipy.linalg import solve_discrete_lyapunov, solve_triangular

from .decomp import Decomposition, decompose
from .model import ClosedLoopSystem

log = logging.getLogger(__name__)

OK = "ok"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical-failure"

#: Slack added to every strict LMI so that the floating solution is strict.
LMI_MARGIN = 1e-9
#: Eigenvalue tolerance for the posterior check of solver output.
LMI_CHECK_TOL = 1e-8
#: Below this margin P is considered ill-conditioned and the step shrinks.
GAMMA_SMALL = 1e-5
#: Factor by which beta is reduced (candidate rejected) or enlarged (LMI infeasible).
BETA_SHRINK = 4.0
#: Deviation norms beyond 1 cannot contribute to a certificate.
BETA_MAX = 1.0
#: Attempts per counted iteration before the search gives up.
MAX_ATTEMPTS = 4


@dataclass(frozen=True, eq=False)
class SynthesisProblem:
    """``A^T P A < rho_bar^2 P`` and ``D^T P D < beta^2 P`` for ``D`` in ``devs``."""

    A_nom: np.ndarray
    deviation_set: tuple = ()
    rho_bar: float = 1.0
    beta: float = 0.0


@dataclass(frozen=True, eq=False)
class SynthesisResult:
    K: np.ndarray | None
    gamma: float
    status: str
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == OK

    @property
    def P(self) -> np.ndarray | None:
        return None if self.K is None else self.K @ self.K.T


def spectral_radius(A) -> float:
    A = np.asarray(A, dtype=float)
    return float(np.max(np.abs(np.linalg.eigvals(A)))) if A.size else 0.0


def _cholesky(P):
    P = 0.5 * (P + P.T)
    try:
        return np.linalg.cholesky(P)
    except np.linalg.LinAlgError:
        return None


def lyapunov_P(A, rho_bar: float) -> SynthesisResult:
    """Solve ``(A/rho_bar)^T P (A/rho_bar) - P = -I``.

    In exact arithmetic the solution gives ``||A||_P < rho_bar``.
    """
    A = np.asarray(A, dtype=float)
    rho = spectral_radius(A)
    if not rho < rho_bar:
        return SynthesisResult(None, 0.0, INFEASIBLE,
                               f"spectral radius {rho:.6g} >= rho_bar {rho_bar:.6g}")
    n = A.shape[0]
    try:
        P = solve_discrete_lyapunov((A / rho_bar).T, np.eye(n))
    except (np.linalg.LinAlgError, ValueError) as exc:
        return SynthesisResult(None, 0.0, NUMERICAL_FAILURE, str(exc))
    K = _cholesky(P)
    if K is None or not np.all(np.isfinite(K)):
        return SynthesisResult(None, 0.0, NUMERICAL_FAILURE, "Lyapunov solution not positive definite")
    w = np.linalg.eigvalsh(0.5 * (P + P.T))
    return SynthesisResult(K, float(w[0] / w[-1]), OK)


def _sym(X):
    return 0.5 * (X + X.T)


def lmi_residuals(P, prob: SynthesisProblem, gamma: float) -> dict:
    """Smallest eigenvalue of each constraint matrix (positive means satisfied)."""
    n = P.shape[0]
    A, rb, b = prob.A_nom, prob.rho_bar, prob.beta
    res = {
        "lower": np.linalg.eigvalsh(_sym(P) - gamma * np.eye(n))[0],
        "upper": np.linalg.eigvalsh(np.eye(n) - _sym(P))[0],
        "nominal": np.linalg.eigvalsh(_sym(rb ** 2 * P - A.T @ P @ A))[0],
    }
    for k, D in enumerate(prob.deviation_set):
        res[f"dev{k}"] = np.linalg.eigvalsh(_sym(b ** 2 * P - D.T @ P @ D))[0]
    return {k: float(v) for k, v in res.items()}


def lmi_P(prob: SynthesisProblem, gamma_floor: float = 0.0,
          tol: float = LMI_CHECK_TOL, margin: float = LMI_MARGIN) -> SynthesisResult:
    """Maximise ``gamma`` with ``gamma I <= P <= I`` under the problem's LMIs.

    Zero deviation matrices are dropped (they hold for every ``P`` when
    ``beta > 0``). The solver output is re-checked with eigenvalue tests at
    tolerance ``tol``.
    """
    A = np.asarray(prob.A_nom, dtype=float)
    n = A.shape[0]
    devs = [np.asarray(D, dtype=float) for D in prob.deviation_set if np.any(D)]
    if devs and prob.beta <= 0.0:
        return SynthesisResult(None, 0.0, INFEASIBLE, "nonzero deviation with beta = 0")
    prob = SynthesisProblem(A, tuple(devs), prob.rho_bar, prob.beta)
    # every induced norm dominates the spectral radius: cheap certain infeasibility
    if not spectral_radius(A) < prob.rho_bar:
        return SynthesisResult(None, 0.0, INFEASIBLE, "rho_bar below spectral radius of A")
    if devs and not max(spectral_radius(D) for D in devs) < prob.beta:
        return SynthesisResult(None, 0.0, INFEASIBLE, "beta below spectral radius of a deviation")
    P = cp.Variable((n, n), symmetric=True)
    g = cp.Variable()
    I = np.eye(n)
    cons = [P - g * I >> 0, I - P >> 0,
            _sym(prob.rho_bar ** 2 * P - A.T @ P @ A) >> margin * I]
    cons += [_sym(prob.beta ** 2 * P - D.T @ P @ D) >> margin * I for D in devs]
    problem = cp.Problem(cp.Maximize(g), cons)
    try:
        problem.solve(solver=cp.CLARABEL)
        status = problem.status
    except (cp.error.SolverError, ValueError) as exc:
        log.debug("LMI solver failed: %s", exc)
        status = None
    if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        return SynthesisResult(None, 0.0, INFEASIBLE, f"solver status {status}")
    if status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) or P.value is None:
        return SynthesisResult(None, 0.0, NUMERICAL_FAILURE, f"solver status {status}")
    Pv = _sym(np.asarray(P.value))
    gamma = float(g.value)
    if not gamma > gamma_floor:
        return SynthesisResult(None, gamma, INFEASIBLE, f"gamma {gamma:.3g} <= floor {gamma_floor:.3g}")
    res = lmi_residuals(Pv, prob, gamma)
    worst = min(res, key=res.get)
    if res[worst] < -tol:
        return SynthesisResult(None, gamma, NUMERICAL_FAILURE,
                               f"constraint {worst} violated by {-res[worst]:.3g}")
    K = _cholesky(Pv)
    if K is None:
        return SynthesisResult(None, gamma, NUMERICAL_FAILURE, "P not positive definite")
    return SynthesisResult(K, gamma, OK)


def norm_lmi_holds(M, P, c: float) -> bool:
    """Eigenvalue test of ``M^T P M < c^2 P`` (equivalent to ``||M||_P < c``)."""
    M = np.asarray(M, dtype=float)
    L = np.linalg.cholesky(_sym(np.asarray(P, dtype=float)))
    # congruence with L^{-T} turns it into a standard symmetric eigenproblem
    Li = solve_triangular(L, np.eye(L.shape[0]), lower=True)
    S = Li @ (c ** 2 * P - M.T @ P @ M) @ Li.T
    return bool(np.linalg.eigvalsh(_sym(S))[0] > 0.0)


def precondition(A, devs=()):
    """Similarity transform making the nominal matrix a spectral-norm contraction.

    Returns ``(R_inv, A_tilde, devs_tilde)`` with ``A_tilde = R_inv A R``,
    ``R_inv = K_nom^T`` upper triangular and ``P_nom = K_nom K_nom^T`` from
    the nominal LMI with ``rho_bar = 1``.
    """
    A = np.asarray(A, dtype=float)
    res = lmi_P(SynthesisProblem(A, (), 1.0, 0.0))
    if not res.ok:
        res = lyapunov_P(A, 1.0)
    if not res.ok:
        raise ValueError(f"nominal problem {res.status}: {res.message}")
    R_inv = res.K.T
    R = solve_triangular(R_inv, np.eye(A.shape[0]), lower=False)
    return R_inv, R_inv @ A @ R, [R_inv @ np.asarray(D) @ R for D in devs]


def inverse_transform_cholesky(K_tilde, R_inv):
    """``K_tilde^T R_inv``: the transposed factor of ``P = R^{-T} P_tilde R^{-1}``."""
    return np.asarray(K_tilde).T @ np.asarray(R_inv)


def deviation_set(dec: Decomposition) -> list:
    """The 8 matrices ``A(dt) - A_nom`` with all actuators at one of
    ``{lo, 0, hi}`` and all sensors at one of ``{lo, 0, hi}``, origin excluded."""
    sys = dec.system
    out = []
    for su in ("lo", None, "hi"):
        for sy in ("lo", None, "hi"):
            if su is None and sy is None:
                continue
            dt_u = np.zeros(sys.m) if su is None else getattr(sys, f"dt_u_{su}")
            dt_y = np.zeros(sys.p) if sy is None else getattr(sys, f"dt_y_{sy}")
            out.append(dec.evaluate(np.concatenate([dt_u, dt_y])) - dec.A_nominal)
    return out


def initial_parameters(rho: float, m: int, p: int) -> tuple[float, float, float]:
    """``(rho_bar, beta_0, delta_h)`` for a nominal spectral radius ``rho``."""
    rho_bar = 0.8 + 0.2 * rho
    beta = 0.25 * (1.0 - rho_bar) / (m + p + m * p)
    return rho_bar, beta, 2.0


def next_beta(beta: float, delta_h: float, gamma: float, norm_A: float,
              rho_bar: float) -> tuple[float, float]:
    """One update of ``(beta, delta_h)`` after synthesising a candidate."""
    if norm_A > 1.0:
        return beta / BETA_SHRINK, delta_h
    if gamma < GAMMA_SMALL:
        delta_h *= 0.45
    if norm_A < rho_bar:
        beta = delta_h * beta * (1.0 - norm_A) / (rho_bar - norm_A)
    return min(beta, BETA_MAX), delta_h


@dataclass(frozen=True, eq=False)
class SearchResult:
    """Best factor found by :func:`beta_search` and its approximate score."""

    K: np.ndarray | None
    gamma: float
    status: str
    rho_tilde: float
    rho_bar: float
    fallback: bool = False
    history: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.K is not None


def beta_search(sys: ClosedLoopSystem, dec: Decomposition | None = None, iterations: int = 3,
                evaluate=None, tol: float = LMI_CHECK_TOL) -> SearchResult:
    """Heuristic outer loop over ``beta`` around the LMI synthesis.

    ``evaluate(K)`` scores a candidate factor (lower is better); it defaults
    to the sampled approximation of the certificate bound. The candidate
    with the lowest score is returned; if no LMI succeeds the Lyapunov
    solution for ``rho_bar`` is returned instead.
    """
    from .verify import approx_certify

    if dec is None:
        dec = decompose(sys)
    if evaluate is None:
        def evaluate(K):
            return approx_certify(sys, K, dec=dec).rho_tilde
    A = dec.A_nominal
    rho = spectral_radius(A)
    rho_bar, beta, delta_h = initial_parameters(rho, sys.m, sys.p)
    history = []
    best = None
    if rho < 1.0:
        try:
            R_inv, A_t, devs_t = precondition(A, deviation_set(dec))
        except ValueError as exc:
            log.info("preconditioning failed: %s", exc)
            R_inv = None
        evaluated = attempts = 0
        while R_inv is not None and evaluated < iterations and attempts < MAX_ATTEMPTS * iterations:
            attempts += 1
            res = lmi_P(SynthesisProblem(A_t, tuple(devs_t), rho_bar, beta), tol=tol)
            entry = {"attempt": attempts, "beta": beta, "delta_h": delta_h, "status": res.status,
                     "gamma": res.gamma}
            history.append(entry)
            if not res.ok:
                # no P keeps every deviation below beta: relax it
                beta = min(beta * BETA_SHRINK, BETA_MAX)
                continue
            evaluated += 1
            K = inverse_transform_cholesky(res.K, R_inv).T
            Kinv = solve_triangular(K, np.eye(K.shape[0]), lower=True)
            norm_A = float(np.linalg.norm(K.T @ A @ Kinv.T, 2))
            entry["norm_A"] = norm_A
            if norm_A < rho - 1e-6:
                entry["status"] = "rejected: norm below spectral radius"
                beta /= BETA_SHRINK
                continue
            score = float(evaluate(K))
            entry["rho_tilde"] = score
            if best is None or score < best[1]:
                best = (K, score, res.gamma)
            beta, delta_h = next_beta(beta, delta_h, res.gamma, norm_A, rho_bar)
    if best is not None:
        return SearchResult(best[0], best[2], OK, best[1], rho_bar, False, history)
    res = lyapunov_P(A, rho_bar)
    if not res.ok:
        return SearchResult(None, 0.0, res.status, np.inf, rho_bar, True, history)
    return SearchResult(res.K, res.gamma, OK, float(evaluate(res.K)), rho_bar, True, history)


__all__ = [
    "INFEASIBLE",
    "NUMERICAL_FAILURE",
    "OK",
    "SearchResult",
    "SynthesisProblem",
    "SynthesisResult",
    "beta_search",
    "deviation_set",
    "initial_parameters",
    "inverse_transform_cholesky",
    "lmi_P",
    "lmi_residuals",
    "lyapunov_P",
    "next_beta",
    "norm_lmi_holds",
    "precondition",
    "spectral_radius",
]
