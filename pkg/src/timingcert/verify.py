"""Stability certificate: verified ``rho_tilde`` and decay constants.

For a factor ``K`` of ``P = K K^T`` the closed loop is exponentially stable
for every admissible timing sequence if

    rho_tilde = ||A_nom||_P + sum_channels h_channel(delta_channel) < 1

Every norm on the right is enclosed in interval arithmetic, so the verdict
``stable`` holds for the exact real data (the inputs being the doubles
given). The method is sufficient only: otherwise the verdict is
``unknown``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import pnorm as _pn
from .decomp import Decomposition, Kind, decompose, enclose, enclosed_factors
from .interval import (
    Interval,
    IntervalMatrix,
    NotPositiveDefiniteError,
    SingularIntervalError,
    spectral_norm_enclosure,
)
from .interval import _rounding as rnd
from .model import ClosedLoopSystem, build_lis, structured_exp

STABLE = "stable"
UNKNOWN = "unknown"
NO_SENSITIVITY = "no timing sensitivity at given bounds"


@dataclass(frozen=True)
class CGES:
    """``|x(t)| <= D exp(lam (t - t0)) |x(t0)|`` for ``t0`` at a controller update."""

    lam: float
    D: float
    C: float
    C_ev: float
    C_bar: float
    lam_bar: float


@dataclass(frozen=True)
class SensitivityReport:
    """Channels ranked by their deviation bound, largest first."""

    rows: tuple
    note: str = ""


@dataclass(eq=False)
class Certificate:
    system: ClosedLoopSystem
    K: IntervalMatrix | None
    rho_n: Interval | None
    bounds: list
    rho_tilde: Interval | None
    verdict: str
    reason: str = ""
    cges: CGES | None = None
    sensitivity: SensitivityReport | None = None
    order: int = _pn.DEFAULT_ORDER
    extras: dict = field(default_factory=dict)

    @property
    def stable(self) -> bool:
        return self.verdict == STABLE

    @property
    def K_float(self) -> np.ndarray | None:
        return None if self.K is None else self.K.mid()


def channel_deltas(sys: ClosedLoopSystem) -> dict:
    """Largest argument magnitude of every deviation term."""
    out = {}
    for i in range(sys.m):
        out[Kind("u", i=i)] = max(abs(sys.dt_u_lo[i]), abs(sys.dt_u_hi[i]))
    for j in range(sys.p):
        out[Kind("y", j=j)] = max(abs(sys.dt_y_lo[j]), abs(sys.dt_y_hi[j]))
    for i in range(sys.m):
        for j in range(sys.p):
            d = rnd.add(float(sys.dt_y_hi[j]), -float(sys.dt_u_lo[i]), True)
            out[Kind("uy", i=i, j=j)] = max(0.0, d)
    return out


def _norm_from(P_factor=None, P=None) -> _pn.EllipsoidNorm:
    if (P_factor is None) == (P is None):
        raise ValueError("pass exactly one of P_factor and P")
    if P is not None:
        return _pn.EllipsoidNorm.from_matrix(P)
    return _pn.EllipsoidNorm(P_factor)


def certify(sys: ClosedLoopSystem, P_factor=None, *, P=None, order: int = _pn.DEFAULT_ORDER,
            dec: Decomposition | None = None, dense: bool = False) -> Certificate:
    """Verified certificate for ``P = K K^T`` (``P_factor = K``) or a full ``P``.

    ``dense=True`` bounds every deviation term with full matrix norms
    instead of the rank-one shortcut; both are sound.
    """
    try:
        norm = _norm_from(P_factor, P)
    except (NotPositiveDefiniteError, SingularIntervalError) as exc:
        return Certificate(sys, None, None, [], None, UNKNOWN,
                           f"P not verifiably positive definite ({exc})", order=order)
    if norm.n != sys.n:
        raise ValueError(f"P has size {norm.n}, system state has size {sys.n}")
    dec = decompose(sys) if dec is None else dec
    enc = enclose(dec)
    rho_n = _pn.pnorm(norm, enc.A_nominal)
    deltas = channel_deltas(sys)
    if dense:
        bounds = [_pn.deviation_bound(norm, enclosed_factors(dec, enc, g.kind), deltas[g.kind],
                                      order, kind=g.kind)
                  for g in dec.generators]
    else:
        bounds = _pn.structured_bounds(norm, dec, enc, deltas, order)
    rho_t = rho_n
    for b in bounds:
        rho_t = rho_t + b.value
    cert = Certificate(sys, norm.K, rho_n, bounds, rho_t, UNKNOWN, order=order)
    cert.sensitivity = sensitivity_report(cert)
    if rho_t.hi < 1.0:
        cert.verdict = STABLE
        cert.cges = cges_constants(sys, rho_t.hi, norm)
    else:
        cert.reason = "rho_tilde >= 1"
    return cert


def cges_constants(sys: ClosedLoopSystem, rho_tilde_upper: float,
                   norm: _pn.EllipsoidNorm | None = None, K=None) -> CGES:
    """Continuous-time decay constants from a discrete contraction bound.

    With ``rho = rho_tilde_upper``: ``lam = ln(rho) / T``; between two
    controller updates at most ``m + p`` jumps and a flow of length below
    ``T`` occur, giving growth at most ``C_bar exp(lam_bar T)`` with
    ``C_bar = C_ev^(m+p)``, ``C_ev = max ||E||_2`` over event matrices and
    ``lam_bar = ||A_cont||_2``; the P-norm contraction converts to the
    euclidean norm with ``C = cond(K)``. Then ``D = C C_bar exp(lam_bar T) / rho``.
    All constants are rounded up.
    """
    rho = float(rho_tilde_upper)
    if not 0.0 < rho < 1.0:
        raise ValueError(f"need 0 < rho_tilde_upper < 1, got {rho}")
    if norm is None:
        norm = _pn.EllipsoidNorm(K)
    spec = build_lis(sys)
    ln_rho = math.log(rho)
    ln_hi = math.nextafter(math.nextafter(ln_rho, math.inf), math.inf)
    lam = (Interval.point(ln_hi) / sys.T).hi
    C_ev = max(spectral_norm_enclosure(E).hi for E in spec.event_matrices)
    C_bar = (Interval.point(C_ev) ** (sys.m + sys.p)).hi
    lam_bar = spectral_norm_enclosure(spec.A_cont).hi
    C = (spectral_norm_enclosure(norm.K) * spectral_norm_enclosure(norm.K_inv)).hi
    growth = (Interval.point(lam_bar) * sys.T).exp()
    D = ((Interval.point(C) * C_bar * growth) / Interval(rho, rho)).hi
    return CGES(lam, D, C, C_ev, C_bar, lam_bar)


def sensitivity_report(cert: Certificate) -> SensitivityReport:
    """Rank channels by the upper end of their deviation bound.

    Ties are broken by family (actuator, sensor, pair) and then index.
    """
    rows = sorted(((b.kind, b.value.hi) for b in cert.bounds),
                  key=lambda kv: (-kv[1], kv[0].sort_key))
    note = NO_SENSITIVITY if all(v == 0.0 for _, v in rows) else ""
    return SensitivityReport(tuple(rows), note)


@dataclass(frozen=True)
class ApproxResult:
    """Unverified counterpart of a certificate: sampled maxima instead of ``h``."""

    rho_n: float
    bounds: dict
    rho_tilde: float
    samples: int


def approx_certify(sys: ClosedLoopSystem, P_factor, samples: int = 100,
                   dec: Decomposition | None = None) -> ApproxResult:
    """Floating ``||A_nom||_P`` plus, per channel, the largest floating
    ``||term(tau)||_P`` over ``samples`` evenly spaced ``tau`` in
    ``[-delta, delta]`` (``[0, delta]`` for actuator-to-sensor terms)."""
    if samples < 1:
        raise ValueError("samples must be positive")
    dec = decompose(sys) if dec is None else dec
    K = np.asarray(P_factor, dtype=float)
    Kinv_T = np.linalg.inv(K).T
    KT = K.T

    def pn(X):
        return float(np.linalg.norm(KT @ X @ Kinv_T, 2))

    n = sys.n
    eye = np.eye(n)
    cache = {}

    def flow_minus_eye(tau):
        D = cache.get(tau)
        if D is None:
            D = cache[tau] = structured_exp(sys, tau) - eye
        return D

    rho_n = pn(dec.A_nominal)
    deltas = channel_deltas(sys)
    bounds = {}
    for g in dec.generators:
        d = deltas[g.kind]
        if d <= 0.0:
            bounds[g.kind] = 0.0
            continue
        lo = 0.0 if g.one_sided else -d
        taus = np.linspace(lo, d, samples) if samples > 1 else np.array([d])
        best = 0.0
        for t in taus:
            if t == 0.0:
                continue
            best = max(best, pn(g.M1 @ flow_minus_eye(g.sign * float(t)) @ g.M2))
        bounds[g.kind] = best
    return ApproxResult(rho_n, bounds, rho_n + sum(bounds.values()), samples)


def certified_scale(sys: ClosedLoopSystem, P_factor, iterations: int = 30,
                    order: int = _pn.DEFAULT_ORDER) -> tuple[float, Certificate | None]:
    """Largest uniform scale ``s`` of all timing windows certified with ``P_factor``.

    Bisection over ``s`` in ``[0, s_max)`` where ``s_max`` keeps every window
    inside the half period. Returns ``(0.0, cert)`` if only zero jitter
    certifies and ``(0.0, None)`` if not even that.
    """
    widest = max(np.max(np.abs(v), initial=0.0)
                 for v in (sys.dt_u_lo, sys.dt_u_hi, sys.dt_y_lo, sys.dt_y_hi))
    dec0 = decompose(sys)
    if widest == 0.0:
        c = certify(sys, P_factor, order=order, dec=dec0)
        return (1.0, c) if c.stable else (0.0, None)
    s_max = math.nextafter(0.5 * sys.T / widest, 0.0)
    base = certify(sys.scaled_timing(0.0), P_factor, order=order)
    if not base.stable:
        return 0.0, None
    lo, hi, best = 0.0, s_max, base
    top = certify(sys.scaled_timing(s_max * (1 - 1e-12)), P_factor, order=order)
    if top.stable:
        return s_max * (1 - 1e-12), top
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        c = certify(sys.scaled_timing(mid), P_factor, order=order)
        if c.stable:
            lo, best = mid, c
        else:
            hi = mid
    return lo, best


__all__ = [
    "ApproxResult",
    "CGES",
    "Certificate",
    "NO_SENSITIVITY",
    "STABLE",
    "SensitivityReport",
    "UNKNOWN",
    "approx_certify",
    "certified_scale",
    "certify",
    "cges_constants",
    "channel_deltas",
    "sensitivity_report",
]
