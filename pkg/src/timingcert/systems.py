"""Constructed closed loops used as benchmarks and in tests."""
from __future__ import annotations

import numpy as np
from scipy.linalg import block_diag, expm, solve_discrete_are

from .model import ClosedLoopSystem


def _zoh(A_p, B_p, T):
    n, m = B_p.shape
    F = np.zeros((n + m, n + m))
    F[:n, :n] = A_p
    F[:n, n:] = B_p
    G = expm(F * T)
    return G[:n, :n], G[:n, n:]


def delayed_state_feedback(A_p, B_p, T, Q=None, R=None):
    """LQR gains ``(K_x, K_u)`` for full-state measurement with one period of
    actuation delay, i.e. ``u[k+1] = -K_x x_p[k] - K_u u[k]``."""
    A_p = np.atleast_2d(np.asarray(A_p, dtype=float))
    B_p = np.atleast_2d(np.asarray(B_p, dtype=float))
    n, m = B_p.shape
    Phi, Gam = _zoh(A_p, B_p, T)
    Az = np.block([[Phi, Gam], [np.zeros((m, n)), np.zeros((m, m))]])
    Bz = np.vstack([np.zeros((n, m)), np.eye(m)])
    Q = np.eye(n + m) if Q is None else Q
    R = np.eye(m) if R is None else R
    X = solve_discrete_are(Az, Bz, Q, R)
    Kz = np.linalg.solve(R + Bz.T @ X @ Bz, Bz.T @ X @ Az)
    return Kz[:, :n], Kz[:, n:]


def state_feedback_loop(A_p, B_p, T, jitter_u=0.0, jitter_y=0.0, Q=None, R=None) -> ClosedLoopSystem:
    """Closed loop with ``C_p = I`` and the delayed LQR controller whose state
    is the next actuator value (``C_d = I``). Timing windows are symmetric,
    ``[-jitter, jitter]``, on every channel."""
    A_p = np.atleast_2d(np.asarray(A_p, dtype=float))
    B_p = np.atleast_2d(np.asarray(B_p, dtype=float))
    n, m = B_p.shape
    K_x, K_u = delayed_state_feedback(A_p, B_p, T, Q, R)
    ju = np.full(m, float(jitter_u))
    jy = np.full(n, float(jitter_y))
    return ClosedLoopSystem(A_p, B_p, np.eye(n), -K_u, -K_x, np.eye(m), T, -ju, ju, -jy, jy)


def scalar_deadbeat(T=1.0, jitter=0.0) -> ClosedLoopSystem:
    """Integrator plant ``x' = u`` with a one-period-delay deadbeat controller."""
    j = np.array([jitter])
    return ClosedLoopSystem([[0.0]], [[1.0]], [[1.0]], [[-1.0]], [[-1.0 / T]], [[1.0]],
                            T, -j, j, -j, j)


def double_integrator(T=0.1, jitter_u=0.0, jitter_y=0.0) -> ClosedLoopSystem:
    """Position/velocity plant, one actuator, two sensors (``m = 1, p = 2``)."""
    A_p = np.array([[0.0, 1.0], [0.0, 0.0]])
    B_p = np.array([[0.0], [1.0]])
    return state_feedback_loop(A_p, B_p, T, jitter_u, jitter_y, Q=np.diag([10.0, 10.0, 1.0]))


#: Four coupled axes, lightly unstable, fully actuated (16 augmented states).
_QUAD_A = np.array([
    [0.0, 1.0, 0.0, 0.0],
    [2.0, -0.5, 0.3, 0.0],
    [0.0, 0.0, 0.0, 1.0],
    [0.0, 0.2, 1.5, -0.4],
])
_QUAD_B = np.array([
    [1.0, 0.0, 0.2, 0.0],
    [0.0, 2.0, 0.0, 0.3],
    [0.1, 0.0, 1.0, 0.0],
    [0.0, 0.4, 0.0, 1.5],
])


def four_axis(T=0.2, jitter=0.002) -> ClosedLoopSystem:
    """``n_p = m = p = n_d = 4`` benchmark; ``jitter`` is a fraction of ``T``."""
    Q = np.diag([10.0] * 4 + [1.0] * 4)
    return state_feedback_loop(_QUAD_A, _QUAD_B, T, jitter * T, jitter * T, Q=Q)


def block_diagonal(*systems: ClosedLoopSystem) -> ClosedLoopSystem:
    """Independent copies side by side; all must share the period."""
    T = systems[0].T
    if any(s.T != T for s in systems):
        raise ValueError("all systems must have the same period")
    cat = np.concatenate
    return ClosedLoopSystem(
        block_diag(*(s.A_p for s in systems)), block_diag(*(s.B_p for s in systems)),
        block_diag(*(s.C_p for s in systems)), block_diag(*(s.A_d for s in systems)),
        block_diag(*(s.B_d for s in systems)), block_diag(*(s.C_d for s in systems)), T,
        cat([s.dt_u_lo for s in systems]), cat([s.dt_u_hi for s in systems]),
        cat([s.dt_y_lo for s in systems]), cat([s.dt_y_hi for s in systems]))


def random_system(rng, n_p=None, n_d=None, m=None, p=None, T=None, jitter=0.0,
                  max_dim=3) -> ClosedLoopSystem:
    """Random (not necessarily stable) instance; windows are ``jitter * T``
    wide random sub-windows of ``(-T/2, T/2)``."""
    n_p, n_d, m, p = (int(rng.integers(1, max_dim + 1)) if v is None else v
                      for v in (n_p, n_d, m, p))
    T = float(rng.uniform(0.05, 1.0)) if T is None else T

    def windows(k):
        a = rng.uniform(-jitter, jitter, size=(2, k)) * T
        return np.min(a, axis=0), np.max(a, axis=0)

    ulo, uhi = windows(m)
    ylo, yhi = windows(p)
    return ClosedLoopSystem(rng.normal(size=(n_p, n_p)), rng.normal(size=(n_p, m)),
                            rng.normal(size=(p, n_p)), rng.normal(size=(n_d, n_d)),
                            rng.normal(size=(n_d, p)), rng.normal(size=(m, n_d)), T,
                            ulo, uhi, ylo, yhi)


__all__ = [
    "block_diagonal",
    "delayed_state_feedback",
    "double_integrator",
    "four_axis",
    "random_system",
    "scalar_deadbeat",
    "state_feedback_loop",
]
