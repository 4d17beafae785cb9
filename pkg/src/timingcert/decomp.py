"""Nominal transition matrix plus single-argument deviation terms.

For a timing vector ``dt = [dt_u, dt_y]`` the one-period transition matrix
splits exactly as

    A(dt) = A_nom + sum_i U_i(dt_u[i]) + sum_j Y_j(dt_y[j])
                  + sum_ij UY_ij(dt_y[j] - dt_u[i])

and every term has the shape ``M1 (expm(sign * A_cont * tau) - I) M2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .interval import IntervalMatrix
from .model import ClosedLoopSystem, LisSpec, build_lis, structured_exp, structured_exp_enclosure

_FAMILY_RANK = {"u": 0, "y": 1, "uy": 2}


@dataclass(frozen=True, order=False)
class Kind:
    """Deviation channel: ``u`` (actuator i), ``y`` (sensor j) or ``uy`` (pair).

    Indices are zero-based; ``str`` renders them one-based, e.g. ``UY(1,2)``.
    """

    family: str
    i: int = -1
    j: int = -1

    def __post_init__(self):
        if self.family not in _FAMILY_RANK:
            raise ValueError(f"unknown deviation family {self.family!r}")

    @property
    def sort_key(self) -> tuple:
        return (_FAMILY_RANK[self.family], self.i, self.j)

    def __str__(self) -> str:
        if self.family == "u":
            return f"U({self.i + 1})"
        if self.family == "y":
            return f"Y({self.j + 1})"
        return f"UY({self.i + 1},{self.j + 1})"


@dataclass(frozen=True, eq=False)
class Generator:
    """Deviation term ``tau -> M1 (expm(sign A_cont tau) - I) M2``."""

    kind: Kind
    M1: np.ndarray
    M2: np.ndarray
    sign: int
    system: ClosedLoopSystem

    @property
    def one_sided(self) -> bool:
        return self.kind.family == "uy"

    def __call__(self, tau: float) -> np.ndarray:
        tau = float(tau)
        n = self.M1.shape[0]
        if tau == 0.0 or (self.one_sided and tau <= 0.0):
            return np.zeros((n, n))
        D = structured_exp(self.system, self.sign * tau) - np.eye(n)
        return self.M1 @ D @ self.M2

    def argument(self, dt_u, dt_y) -> float:
        """The scalar this term depends on for a given timing vector."""
        if self.kind.family == "u":
            return float(dt_u[self.kind.i])
        if self.kind.family == "y":
            return float(dt_y[self.kind.j])
        return float(dt_y[self.kind.j]) - float(dt_u[self.kind.i])


@dataclass(frozen=True, eq=False)
class Decomposition:
    """``A_nominal`` and the ``m + p + m p`` deviation generators."""

    system: ClosedLoopSystem
    spec: LisSpec
    E_half: np.ndarray
    A_nominal: np.ndarray
    generators: tuple

    def generator(self, kind: Kind) -> Generator:
        for g in self.generators:
            if g.kind == kind:
                return g
        raise KeyError(str(kind))

    def evaluate(self, timing) -> np.ndarray:
        """Sum of nominal part and all deviation terms at ``timing = [dt_u, dt_y]``."""
        timing = np.asarray(timing, dtype=float).reshape(-1)
        m = self.system.m
        dt_u, dt_y = timing[:m], timing[m:]
        X = self.A_nominal.copy()
        for g in self.generators:
            X += g(g.argument(dt_u, dt_y))
        return X


def decompose(sys: ClosedLoopSystem) -> Decomposition:
    spec = build_lis(sys)
    n = spec.n
    eye = np.eye(n)
    Eh = structured_exp(sys, sys.T / 2)
    Ec = spec.E_ctrl
    Du = [E - eye for E in spec.E_u]
    Dy = [E - eye for E in spec.E_y]
    # the jump rows of all sensor/actuator events are disjoint, so their
    # first-order sum is the exact product at zero deviation
    mid = eye + sum(Du, np.zeros((n, n))) + sum(Dy, np.zeros((n, n)))
    A_nom = Ec @ Eh @ mid @ Eh
    M1_u = Ec @ Eh
    gens = [Generator(Kind("u", i=i), M1_u, Du[i], -1, sys) for i in range(sys.m)]
    gens += [Generator(Kind("y", j=j), Ec @ Dy[j] @ Eh, eye, 1, sys) for j in range(sys.p)]
    gens += [Generator(Kind("uy", i=i, j=j), Ec @ Dy[j], Du[i], 1, sys)
             for i in range(sys.m) for j in range(sys.p)]
    return Decomposition(sys, spec, Eh, A_nom, tuple(gens))


def factor_form(dec: Decomposition, kind: Kind):
    """``(M1, A_cont, M2, sign)`` with ``term(tau) = M1 (expm(A_cont sign tau) - I) M2``."""
    g = dec.generator(kind)
    return g.M1, dec.spec.A_cont, g.M2, g.sign


@dataclass(frozen=True, eq=False)
class DecompositionEnclosure:
    """Interval versions of the inexact pieces: ``expm(A_cont T/2)``, the
    nominal matrix and ``E_ctrl expm(A_cont T/2)``. Event matrices and
    ``A_cont`` are exact in floating point."""

    E_half: IntervalMatrix
    A_nominal: IntervalMatrix
    M1_u: IntervalMatrix


def enclose(dec: Decomposition) -> DecompositionEnclosure:
    sys, spec = dec.system, dec.spec
    n = spec.n
    Eh = structured_exp_enclosure(sys, sys.T / 2)
    mid = np.eye(n)
    for E in (*spec.E_u, *spec.E_y):
        mid = mid + (E - np.eye(n))  # disjoint rows: exact
    Ec = IntervalMatrix.point(spec.E_ctrl)
    M1_u = Ec @ Eh
    A_nom = M1_u @ (IntervalMatrix.point(mid) @ Eh)
    return DecompositionEnclosure(Eh, A_nom, M1_u)


def enclosed_factors(dec: Decomposition, enc: DecompositionEnclosure, kind: Kind):
    """:func:`factor_form` with the inexact ``M1`` replaced by an enclosure."""
    g = dec.generator(kind)
    if kind.family == "u":
        return enc.M1_u, dec.spec.A_cont, g.M2, g.sign
    # E_ctrl (E_y - I) has products B_d C_p entries: not exact in floating point
    Dy = IntervalMatrix.point(dec.spec.E_y[kind.j] - np.eye(dec.spec.n))
    M1 = IntervalMatrix.point(dec.spec.E_ctrl) @ Dy
    if kind.family == "y":
        M1 = M1 @ enc.E_half
    return M1, dec.spec.A_cont, g.M2, g.sign


__all__ = [
    "Decomposition",
    "DecompositionEnclosure",
    "Generator",
    "Kind",
    "decompose",
    "enclose",
    "enclosed_factors",
    "factor_form",
]
