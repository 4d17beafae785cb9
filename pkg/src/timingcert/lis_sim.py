"""Floating-point trajectories of the linear impulsive system.

This is the brute-force reference for the decomposition and the
certificate: it multiplies flows and jumps in event order and knows
nothing about norms or bounds.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .model import LisSpec


class InvalidScheduleError(ValueError):
    """Event times are not sorted or reference unknown events."""


class InvalidTimingError(ValueError):
    """A timing deviation lies outside the open half-period window."""


@dataclass(frozen=True, eq=False)
class EventSchedule:
    """Events ``(times[i], index[i])`` after start time ``t0`` with state ``x0``.

    ``index`` refers to ``LisSpec.event_matrices``. Equal times are allowed
    and are applied in list order.
    """

    times: np.ndarray
    index: np.ndarray
    t0: float
    x0: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        index = np.asarray(self.index, dtype=int).reshape(-1)
        if times.size != index.size:
            raise InvalidScheduleError("times and index differ in length")
        t0 = float(self.t0)
        if times.size and (times[0] < t0 or np.any(np.diff(times) < 0.0)):
            raise InvalidScheduleError("event times must be nondecreasing and not before t0")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "t0", t0)
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float).reshape(-1))


def _check_timing(spec: LisSpec, timing) -> np.ndarray:
    m, p = len(spec.E_u), len(spec.E_y)
    timing = np.asarray(timing, dtype=float).reshape(-1)
    if timing.size != m + p:
        raise InvalidTimingError(f"expected {m + p} timing values, got {timing.size}")
    half = spec.T / 2
    bad = np.nonzero(~((timing > -half) & (timing < half)))[0]
    if bad.size:
        k = int(bad[0])
        raise InvalidTimingError(f"timing[{k}] = {timing[k]} outside (-T/2, T/2)")
    return timing


def periodic_schedule(spec: LisSpec, timings, x0) -> EventSchedule:
    """Schedule over ``len(timings)`` periods starting at ``t0 = T/2``.

    Row ``k`` of ``timings`` holds ``[dt_u, dt_y]`` of period ``k + 1``; the
    events of period ``k + 1`` happen at ``(k + 1) T + dt`` and the controller
    update closes it at ``(k + 1) T + T/2``.
    """
    timings = np.atleast_2d(np.asarray(timings, dtype=float))
    m = len(spec.E_u)
    times, index = [], []
    for k, row in enumerate(timings, start=1):
        row = _check_timing(spec, row)
        for off, idx in spec.events(row[:m], row[m:]):
            times.append(k * spec.T + off)
            index.append(idx)
    return EventSchedule(np.array(times), np.array(index, dtype=int), spec.T / 2, x0)


def simulate(spec: LisSpec, sched: EventSchedule, t: float) -> np.ndarray:
    """State ``x(t)``; at an event time the post-jump value is returned."""
    if t < sched.t0:
        raise InvalidScheduleError(f"t = {t} precedes the start time {sched.t0}")
    if sched.index.size and (sched.index.min() < 0
                             or sched.index.max() >= len(spec.event_matrices)):
        raise InvalidScheduleError("schedule references an unknown event")
    mats = spec.event_matrices
    x = sched.x0.copy()
    t_prev = sched.t0
    for tau, idx in zip(sched.times, sched.index):
        if tau > t:
            break
        x = mats[idx] @ (spec.flow(tau - t_prev) @ x)
        t_prev = tau
    return spec.flow(t - t_prev) @ x


def transition_matrix(spec: LisSpec, timing) -> np.ndarray:
    """One-period transition matrix for ``timing = [dt_u, dt_y]``.

    Maps the state right after one controller update to the state right
    after the next one.
    """
    timing = _check_timing(spec, timing)
    m = len(spec.E_u)
    mats = spec.event_matrices
    X = np.eye(spec.n)
    t_prev = -spec.T / 2
    for off, idx in spec.events(timing[:m], timing[m:]):
        X = mats[idx] @ (spec.flow(off - t_prev) @ X)
        t_prev = off
    return X


def sample_periods(spec: LisSpec, timings, x0) -> np.ndarray:
    """States after ``0, 1, ..., K`` controller updates for ``K = len(timings)``."""
    timings = np.atleast_2d(np.asarray(timings, dtype=float))
    xs = np.empty((timings.shape[0] + 1, spec.n))
    xs[0] = x0
    for k, row in enumerate(timings):
        xs[k + 1] = transition_matrix(spec, row) @ xs[k]
    return xs


def write_trajectory_csv(spec: LisSpec, sched: EventSchedule, times, fh) -> None:
    """Write ``time`` plus one column per state component to an open file."""
    w = csv.writer(fh)
    w.writerow(["time", *spec.layout.labels()])
    for t in times:
        w.writerow([repr(float(t)), *(repr(float(v)) for v in simulate(spec, sched, t))])


__all__ = [
    "EventSchedule",
    "InvalidScheduleError",
    "InvalidTimingError",
    "periodic_schedule",
    "sample_periods",
    "simulate",
    "transition_matrix",
    "write_trajectory_csv",
]
