"""Problem instance, impulsive-system matrices and the structured exponential.

The closed loop of a continuous plant and a periodic discrete controller
with jittery sensor reads and actuator writes is rewritten as a linear
impulsive system on the augmented state

    x = [x_p, x_d, y_d, u]

which flows with ``A_cont`` between events and jumps by an event matrix at
every sensor read (``E_y``), actuator write (``E_u``) and controller update
(``E_ctrl``, placed at half period).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .interval import Interval, IntervalMatrix, exp_enclosure


class InvalidInstanceError(ValueError):
    """The closed-loop description is inconsistent."""


def _matrix(name, a, rows=None, cols=None):
    a = np.array(a, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2:
        raise InvalidInstanceError(f"{name}: expected a matrix, got {a.ndim}-d array")
    if rows is not None and a.shape[0] != rows:
        raise InvalidInstanceError(f"{name}: expected {rows} rows, got {a.shape[0]}")
    if cols is not None and a.shape[1] != cols:
        raise InvalidInstanceError(f"{name}: expected {cols} columns, got {a.shape[1]}")
    if not np.all(np.isfinite(a)):
        raise InvalidInstanceError(f"{name}: non-finite entries")
    a.setflags(write=False)
    return a


def _vector(name, v, size):
    v = np.array(v, dtype=float).reshape(-1)
    if v.size != size:
        raise InvalidInstanceError(f"{name}: expected length {size}, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise InvalidInstanceError(f"{name}: non-finite entries")
    v.setflags(write=False)
    return v


@dataclass(frozen=True)
class AugmentedState:
    """Block layout of ``x = [x_p, x_d, y_d, u]``."""

    n_p: int
    n_d: int
    p: int
    m: int

    @property
    def n(self) -> int:
        return self.n_p + self.n_d + self.p + self.m

    @property
    def offsets(self) -> tuple[int, int, int, int]:
        return (0, self.n_p, self.n_p + self.n_d, self.n_p + self.n_d + self.p)

    @property
    def plant(self) -> slice:
        return slice(0, self.n_p)

    @property
    def ctrl(self) -> slice:
        o = self.offsets[1]
        return slice(o, o + self.n_d)

    @property
    def y(self) -> slice:
        o = self.offsets[2]
        return slice(o, o + self.p)

    @property
    def u(self) -> slice:
        o = self.offsets[3]
        return slice(o, o + self.m)

    def labels(self) -> list[str]:
        """Component names in state order, e.g. for CSV headers."""
        return ([f"x_p{i}" for i in range(self.n_p)] + [f"x_d{i}" for i in range(self.n_d)]
                + [f"y_d{i}" for i in range(self.p)] + [f"u{i}" for i in range(self.m)])


@dataclass(frozen=True, eq=False)
class ClosedLoopSystem:
    """Plant ``(A_p, B_p, C_p)``, controller ``(A_d, B_d, C_d)``, period ``T``
    and per-channel timing-deviation windows.

    Actuator ``i`` writes at ``kT + dt_u[i]`` and sensor ``j`` reads at
    ``kT + dt_y[j]`` with ``dt`` anywhere in the closed window
    ``[lo, hi]``; every window must lie strictly inside ``(-T/2, T/2)``.
    """

    A_p: np.ndarray
    B_p: np.ndarray
    C_p: np.ndarray
    A_d: np.ndarray
    B_d: np.ndarray
    C_d: np.ndarray
    T: float
    dt_u_lo: np.ndarray = None
    dt_u_hi: np.ndarray = None
    dt_y_lo: np.ndarray = None
    dt_y_hi: np.ndarray = None

    def __post_init__(self):
        A_p = _matrix("A_p", self.A_p)
        n_p = A_p.shape[0]
        if A_p.shape[1] != n_p:
            raise InvalidInstanceError(f"A_p: must be square, got {A_p.shape}")
        B_p = _matrix("B_p", self.B_p, rows=n_p)
        m = B_p.shape[1]
        C_p = _matrix("C_p", self.C_p, cols=n_p)
        p = C_p.shape[0]
        A_d = _matrix("A_d", self.A_d)
        n_d = A_d.shape[0]
        if A_d.shape[1] != n_d:
            raise InvalidInstanceError(f"A_d: must be square, got {A_d.shape}")
        B_d = _matrix("B_d", self.B_d, rows=n_d, cols=p)
        C_d = _matrix("C_d", self.C_d, rows=m, cols=n_d)
        try:
            T = float(self.T)
        except (TypeError, ValueError):
            raise InvalidInstanceError("T: must be a real number") from None
        if not (np.isfinite(T) and T > 0.0):
            raise InvalidInstanceError(f"T: must be positive, got {T}")
        vals = {}
        for name, size in (("dt_u_lo", m), ("dt_u_hi", m), ("dt_y_lo", p), ("dt_y_hi", p)):
            v = getattr(self, name)
            vals[name] = _vector(name, np.zeros(size) if v is None else v, size)
        for side in ("u", "y"):
            lo, hi = vals[f"dt_{side}_lo"], vals[f"dt_{side}_hi"]
            for k in range(lo.size):
                if not lo[k] <= hi[k]:
                    raise InvalidInstanceError(
                        f"dt_{side}[{k}]: lower bound {lo[k]} exceeds upper bound {hi[k]}")
                if not (-T / 2 < lo[k] and hi[k] < T / 2):
                    raise InvalidInstanceError(
                        f"dt_{side}[{k}]: window [{lo[k]}, {hi[k]}] violates the "
                        f"half-period constraint -T/2 < lo <= hi < T/2 (T = {T})")
        for name, val in (("A_p", A_p), ("B_p", B_p), ("C_p", C_p), ("A_d", A_d),
                          ("B_d", B_d), ("C_d", C_d), ("T", T)):
            object.__setattr__(self, name, val)
        for name, val in vals.items():
            object.__setattr__(self, name, val)

    @property
    def layout(self) -> AugmentedState:
        return AugmentedState(self.A_p.shape[0], self.A_d.shape[0],
                              self.C_p.shape[0], self.B_p.shape[1])

    @property
    def n(self) -> int:
        return self.layout.n

    @property
    def m(self) -> int:
        return self.B_p.shape[1]

    @property
    def p(self) -> int:
        return self.C_p.shape[0]

    def with_timing(self, dt_u_lo, dt_u_hi, dt_y_lo, dt_y_hi) -> ClosedLoopSystem:
        """Copy of the system with new timing windows."""
        return ClosedLoopSystem(self.A_p, self.B_p, self.C_p, self.A_d, self.B_d, self.C_d,
                                self.T, dt_u_lo, dt_u_hi, dt_y_lo, dt_y_hi)

    def scaled_timing(self, s: float) -> ClosedLoopSystem:
        """Copy with every timing window multiplied by ``s``."""
        return self.with_timing(s * self.dt_u_lo, s * self.dt_u_hi,
                                s * self.dt_y_lo, s * self.dt_y_hi)


@dataclass(frozen=True, eq=False)
class LisSpec:
    """Flow matrix and event matrices of one control period.

    ``event_matrices`` lists ``E_u[0..m-1]``, then ``E_y[0..p-1]``, then
    ``E_ctrl``; schedules refer to events by this index.
    """

    A_cont: np.ndarray
    E_u: tuple
    E_y: tuple
    E_ctrl: np.ndarray
    T: float
    layout: AugmentedState
    system: ClosedLoopSystem = field(repr=False)

    @property
    def n(self) -> int:
        return self.layout.n

    @property
    def event_matrices(self) -> tuple:
        return (*self.E_u, *self.E_y, self.E_ctrl)

    @property
    def ctrl_index(self) -> int:
        return len(self.E_u) + len(self.E_y)

    def events(self, dt_u, dt_y) -> list[tuple[float, int]]:
        """``(offset, event index)`` pairs of one period for the given timing,
        sorted stably by offset, followed by the controller event at ``T/2``."""
        m = len(self.E_u)
        ev = [(float(t), i) for i, t in enumerate(dt_u)]
        ev += [(float(t), m + j) for j, t in enumerate(dt_y)]
        ev.sort()
        ev.append((self.T / 2, self.ctrl_index))
        return ev

    def flow(self, delta: float) -> np.ndarray:
        """``expm(A_cont * delta)`` via the structured formula."""
        return structured_exp(self.system, delta)


def _readonly(a):
    a.setflags(write=False)
    return a


def build_lis(sys: ClosedLoopSystem) -> LisSpec:
    """Impulsive-system matrices of the closed loop."""
    if not isinstance(sys, ClosedLoopSystem):
        raise InvalidInstanceError("build_lis expects a ClosedLoopSystem")
    lay = sys.layout
    n = lay.n
    A = np.zeros((n, n))
    A[lay.plant, lay.plant] = sys.A_p
    A[lay.plant, lay.u] = sys.B_p

    E_u = []
    for i in range(lay.m):
        E = np.eye(n)
        r = lay.u.start + i
        E[r, lay.ctrl] = sys.C_d[i]
        E[r, r] = 0.0
        E_u.append(_readonly(E))
    E_y = []
    for j in range(lay.p):
        E = np.eye(n)
        r = lay.y.start + j
        E[r, lay.plant] = sys.C_p[j]
        E[r, r] = 0.0
        E_y.append(_readonly(E))
    E_c = np.eye(n)
    E_c[lay.ctrl, lay.ctrl] = sys.A_d
    E_c[lay.ctrl, lay.y] = sys.B_d
    return LisSpec(_readonly(A), tuple(E_u), tuple(E_y), _readonly(E_c), sys.T, lay, sys)


def _aug_block(sys: ClosedLoopSystem) -> np.ndarray:
    n_p, m = sys.A_p.shape[0], sys.m
    F = np.zeros((n_p + m, n_p + m))
    F[:n_p, :n_p] = sys.A_p
    F[:n_p, n_p:] = sys.B_p
    return F


def structured_exp(sys: ClosedLoopSystem, delta: float) -> np.ndarray:
    """``expm(A_cont * delta)`` from the small augmented block.

    Only the plant rows differ from the identity: they hold ``expm(A_p d)``
    in the plant columns and ``int_0^d expm(A_p s) ds B_p`` in the input
    columns, both read off ``expm([[A_p, B_p], [0, 0]] d)``.
    """
    lay = sys.layout
    n = lay.n
    X = np.eye(n)
    delta = float(delta)
    if delta == 0.0:
        return X
    G = expm(_aug_block(sys) * delta)
    X[lay.plant, lay.plant] = G[:lay.n_p, :lay.n_p]
    X[lay.plant, lay.u] = G[:lay.n_p, lay.n_p:]
    return X


def structured_exp_enclosure(sys: ClosedLoopSystem, delta) -> IntervalMatrix:
    """Interval enclosure of ``expm(A_cont * delta)`` for every ``delta`` in
    the (scalar or interval) argument; only the augmented block is
    exponentiated and the identity rows stay exact."""
    lay = sys.layout
    n = lay.n
    d = Interval.coerce(delta)
    if d.lo == 0.0 and d.hi == 0.0:
        return IntervalMatrix.eye(n)
    F = IntervalMatrix.point(_aug_block(sys)).scale(d)
    G = exp_enclosure(F)
    top = G[:lay.n_p, :]
    lo = np.eye(n)
    hi = np.eye(n)
    lo[lay.plant, lay.plant] = top.lo[:, :lay.n_p]
    hi[lay.plant, lay.plant] = top.hi[:, :lay.n_p]
    lo[lay.plant, lay.u] = top.lo[:, lay.n_p:]
    hi[lay.plant, lay.u] = top.hi[:, lay.n_p:]
    return IntervalMatrix(lo, hi)


__all__ = [
    "AugmentedState",
    "ClosedLoopSystem",
    "InvalidInstanceError",
    "LisSpec",
    "build_lis",
    "structured_exp",
    "structured_exp_enclosure",
]
