"""Pontryagin extremals: Hamiltonians, the maximum condition, RK4 validation and arc types."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Literal, NamedTuple, Optional, Union

import numpy as np

from . import kernels
from .core import Control, Covector, Point, as_vec5, energy, horizontal_velocity

DEFAULT_EVENT_TOL = 1e-12
DEFAULT_MAX_EVENTS = 100_000
U_SLACK = 1e-12


class ExtremalState(NamedTuple):
    h: Covector
    q: Point

    def as_array(self) -> np.ndarray:
        return np.concatenate([as_vec5(self.h, "h"), as_vec5(self.q, "q")])

    @classmethod
    def from_array(cls, y) -> "ExtremalState":
        y = np.asarray(y, dtype=float)
        return cls(Covector(*map(float, y[:5])), Point(*map(float, y[5:10])))


class SingularFeedbackError(ValueError):
    """The maximum condition does not pin the control down to a vertex."""


def hamiltonian_H(h) -> float:
    h = np.asarray(h, dtype=float)
    return float(abs(h[0]) + abs(h[1]))


def zero_tol(h) -> float:
    return 1e-10 * max(1.0, float(np.linalg.norm(np.asarray(h, dtype=float))))


@dataclass(frozen=True)
class MaxControl:
    """Maximizers of u1 h1 + u2 h2 over the square; ``None`` marks a free component."""

    u1: Optional[float]
    u2: Optional[float]

    @property
    def kind(self) -> Literal["vertex", "edge", "square"]:
        free = (self.u1 is None) + (self.u2 is None)
        return ("vertex", "edge", "square")[free]

    def as_control(self) -> Control:
        if self.kind != "vertex":
            raise SingularFeedbackError(f"maximum condition gives a {self.kind}, not a vertex")
        return Control(self.u1, self.u2)


def max_control(h, tol: Optional[float] = None) -> MaxControl:
    h = np.asarray(h, dtype=float)
    if tol is None:
        tol = zero_tol(h)
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    u1 = None if abs(h[0]) <= tol else float(np.sign(h[0]))
    u2 = None if abs(h[1]) <= tol else float(np.sign(h[1]))
    return MaxControl(u1, u2)


def vertical_rhs(h, u) -> np.ndarray:
    h1, h2, h3, h4, h5 = as_vec5(h, "h")
    u1, u2 = u
    return np.array([-u2 * h3, u1 * h3, u1 * h4 + u2 * h5, 0.0, 0.0])


def full_rhs(state, u) -> np.ndarray:
    """Time derivative of (h, q) under control u; returned as a length-10 array."""
    h, q = state
    return np.concatenate([vertical_rhs(h, u), horizontal_velocity(as_vec5(q, "q"), u)])


@dataclass(frozen=True)
class PiecewiseControl:
    """Finite sequence of (control value, duration) pieces."""

    segments: tuple

    def __post_init__(self):
        segs = []
        for u, d in self.segments:
            u = Control(float(u[0]), float(u[1]))
            d = float(d)
            if not d > 0 or not np.isfinite(d):
                raise ValueError(f"segment durations must be positive, got {d}")
            if u.norm > 1 + U_SLACK:
                raise ValueError(f"control value {tuple(u)} lies outside the unit square")
            segs.append((u, d))
        object.__setattr__(self, "segments", tuple(segs))

    @classmethod
    def from_pieces(cls, values: Iterable, durations: Iterable, u2: Optional[float] = None) -> "PiecewiseControl":
        """Build from value/duration lists, dropping zero-length pieces.

        With ``u2`` given, ``values`` are scalars for u1 and u2 is held fixed.
        """
        segs = []
        for val, d in zip(values, durations):
            if d == 0:
                continue
            u = (val, u2) if u2 is not None else val
            segs.append((u, d))
        return cls(tuple(segs))

    @classmethod
    def constant(cls, u, T: float) -> "PiecewiseControl":
        return cls(((u, T),))

    @property
    def total(self) -> float:
        return float(sum(d for _, d in self.segments))

    @property
    def values(self) -> np.ndarray:
        return np.array([tuple(u) for u, _ in self.segments], dtype=float).reshape(-1, 2)

    @property
    def durations(self) -> np.ndarray:
        return np.array([d for _, d in self.segments], dtype=float)

    def switch_times(self) -> list:
        out, t = [], 0.0
        for (u, d), (nxt, _) in zip(self.segments, self.segments[1:]):
            t += d
            if u != nxt:
                out.append(t)
        return out

    @property
    def n_switches(self) -> int:
        return len(self.switch_times())

    def merged(self, value_tol: float = 1e-12, min_duration: float = 0.0) -> "PiecewiseControl":
        """Drop pieces shorter than ``min_duration`` and fuse equal neighbours."""
        segs = []
        for u, d in self.segments:
            if d <= min_duration:
                continue
            if segs and max(abs(segs[-1][0][0] - u[0]), abs(segs[-1][0][1] - u[1])) <= value_tol:
                segs[-1] = (segs[-1][0], segs[-1][1] + d)
            else:
                segs.append((u, d))
        return PiecewiseControl(tuple(segs))

    def scaled(self, factor: float) -> "PiecewiseControl":
        return PiecewiseControl(tuple((u, d * factor) for u, d in self.segments))

    def map_values(self, fn) -> "PiecewiseControl":
        return PiecewiseControl(tuple((fn(u), d) for u, d in self.segments))

    def __len__(self) -> int:
        return len(self.segments)


ControlLaw = Union[Literal["feedback"], PiecewiseControl]


@dataclass(frozen=True)
class Trajectory:
    """Time samples of an extremal; ``u[k]`` is the control applied right after ``t[k]``."""

    t: np.ndarray
    h: np.ndarray
    q: np.ndarray
    u: np.ndarray
    switch_times: tuple = field(default=())

    def __len__(self) -> int:
        return len(self.t)

    @property
    def endpoint(self) -> Point:
        return Point(*map(float, self.q[-1]))

    @property
    def final_covector(self) -> Covector:
        return Covector(*map(float, self.h[-1]))

    @property
    def states(self) -> np.ndarray:
        return np.hstack([self.h, self.q])

    def energy(self) -> np.ndarray:
        return energy(self.h)


def _split(n, rec_t, rec_y, rec_u):
    rec_y = rec_y[:n]
    return rec_t[:n].copy(), rec_y[:, :5].copy(), rec_y[:, 5:].copy(), rec_u[:n].copy()


def integrate(
    s0,
    law: ControlLaw,
    T: float,
    dt: float,
    *,
    stride: int = 1,
    event_tol: float = DEFAULT_EVENT_TOL,
    tol: Optional[float] = None,
    max_events: int = DEFAULT_MAX_EVENTS,
) -> Trajectory:
    """Classical RK4 for the full Hamiltonian system.

    ``law="feedback"`` applies the vertex control (sgn h1, sgn h2) and splits any
    step in which h1 or h2 changes sign by bisection down to ``event_tol``.
    Feedback is refused when the initial maximizer is an edge or the full
    square; supply an explicit ``PiecewiseControl`` for singular arcs.
    """
    if not T > 0:
        raise ValueError(f"horizon must be positive, got {T}")
    if not dt > 0:
        raise ValueError(f"step must be positive, got {dt}")
    h0, q0 = s0
    y0 = np.concatenate([as_vec5(h0, "h"), as_vec5(q0, "q")])
    stride = max(1, int(stride))
    if isinstance(law, str):
        if law != "feedback":
            raise ValueError(f"unknown control law {law!r}")
        u0 = max_control(y0[:5], tol).as_control()
        n, rt, ry, ru, n_events, status = kernels.rk4_feedback(
            y0, float(u0.u1), float(u0.u2), float(T), float(dt), stride, float(event_tol), int(max_events)
        )
        if status != kernels.STATUS_OK:
            raise RuntimeError(f"more than {max_events} switching events; chattering or bad tolerance")
        t, h, q, u = _split(n, rt, ry, ru)
        switches = tuple(float(ti) for ti, a, b in zip(t[1:], u[:-1], u[1:]) if np.any(a != b))
        return Trajectory(t, h, q, u, switches)
    if not isinstance(law, PiecewiseControl):
        raise TypeError("law must be 'feedback' or a PiecewiseControl")
    if abs(law.total - T) > 1e-12 * max(1.0, T):
        raise ValueError(f"control duration {law.total} does not match horizon {T}")
    n, rt, ry, ru = kernels.rk4_piecewise(y0, law.values, law.durations, float(dt), stride)
    t, h, q, u = _split(n, rt, ry, ru)
    return Trajectory(t, h, q, u, tuple(law.switch_times()))


ArcKind = Literal["bang-bang", "h1-singular", "h2-singular", "mixed", "abnormal", "undetermined"]


@dataclass(frozen=True)
class ArcClass:
    kind: ArcKind
    normality: Literal["normal", "abnormal"]

    def __post_init__(self):
        if self.kind == "abnormal" and self.normality != "abnormal":
            raise ValueError("abnormal arcs are abnormal extremals")


def _runs(mask: np.ndarray) -> list:
    """(start, stop) index pairs of the True runs in ``mask``."""
    padded = np.concatenate([[False], mask, [False]]).astype(int)
    d = np.diff(padded)
    return list(zip(np.flatnonzero(d == 1), np.flatnonzero(d == -1)))


def classify_arc(samples, tol: float = 1e-9) -> ArcClass:
    """Label a sampled extremal by the vanishing pattern of h1 and h2.

    ``samples`` is a ``Trajectory`` or an ``(n, >=2)`` array of covectors.
    A singular piece is a run of at least two consecutive samples on which one
    of h1, h2 stays within ``tol`` of zero; isolated zeros are switches.
    """
    h = samples.h if isinstance(samples, Trajectory) else np.asarray(samples, dtype=float)
    if h.ndim != 2 or h.shape[0] == 0:
        raise ValueError("need a nonempty (n, 5) sample array")
    a1 = np.abs(h[:, 0])
    a2 = np.abs(h[:, 1])
    H = a1 + a2
    if np.all(H <= tol):
        return ArcClass("abnormal", "abnormal")
    if np.any(H <= tol):
        return ArcClass("undetermined", "normal")
    z1 = a1 <= tol
    z2 = a2 <= tol
    if np.all(z1):
        return ArcClass("h1-singular", "normal")
    if np.all(z2):
        return ArcClass("h2-singular", "normal")
    singular_runs = [r for r in _runs(z1) + _runs(z2) if r[1] - r[0] >= 2]
    if not singular_runs:
        return ArcClass("bang-bang", "normal")
    return ArcClass("mixed", "normal")
