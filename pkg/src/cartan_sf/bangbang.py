"""Bang-bang flow: exact piecewise-polynomial extremals, the angle chart, symmetries, strata.

Between switches the vertex control is constant and the Hamiltonian system is
triangular, so h3, x, y are linear, h1, h2 quadratic, z at most quadratic and
v, w cubic in time.  Switches are the positive roots of h1 or h2, found in
closed form.  When h1 (or h2) and h3 vanish together the trajectory sits at a
corner of a critical energy level and may split into two continuations.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq

from .core import as_vec5, energy

TWO_PI = 2.0 * math.pi
CORNER_TOL = 1e-12
TANGENT_RTOL = 1e-12
NORM_TOL = 1e-9
DEFAULT_MAX_BRANCHES = 64


class BranchOverflowError(RuntimeError):
    pass


class DegenerateStateError(ValueError):
    """The state sits on an edge or full-square degeneracy of the maximum condition."""


# ---------------------------------------------------------------- angle chart


class AngularState(NamedTuple):
    theta: float
    h3: float
    h4: float
    h5: float


def _theta_v(h1, h2):
    h1 = np.asarray(h1, dtype=float)
    h2 = np.asarray(h2, dtype=float)
    base = np.arctan2(np.sqrt(np.abs(h2)), np.sqrt(np.abs(h1)))
    th = np.where(h1 >= 0, np.where(h2 >= 0, base, TWO_PI - base), np.where(h2 >= 0, math.pi - base, math.pi + base))
    return np.where(th >= TWO_PI, th - TWO_PI, th)


def theta_from_h(h1: float, h2: float) -> float:
    """Angle in [0, 2 pi) with h1 = sgn(cos) cos^2, h2 = sgn(sin) sin^2."""
    if abs(abs(h1) + abs(h2) - 1.0) > NORM_TOL:
        raise ValueError(f"|h1| + |h2| must be 1, got {abs(h1) + abs(h2)}")
    return float(_theta_v(h1, h2))


def h_from_theta(theta) -> tuple:
    c = np.cos(theta)
    s = np.sin(theta)
    return np.sign(c) * c * c, np.sign(s) * s * s


def potential_U(theta, h4: float, h5: float):
    c = np.cos(theta)
    s = np.sin(theta)
    return np.sign(c) * c * c * h5 - np.sign(s) * s * s * h4


def angular_rhs(a: AngularState) -> tuple:
    s2t = abs(math.sin(2.0 * a.theta))
    if s2t <= 1e-12:
        raise ValueError("the angle chart excludes multiples of pi/2")
    s1 = math.copysign(1.0, math.cos(a.theta))
    s2 = math.copysign(1.0, math.sin(a.theta))
    return a.h3 / s2t, s1 * a.h4 + s2 * a.h5


# ---------------------------------------------------------------- symmetry group


class SymmetryElement(IntEnum):
    ID = 0
    E1 = 1
    E2 = 2
    E3 = 3
    E4 = 4
    E5 = 5
    E6 = 6
    E7 = 7


# (source index, sign) for each output component
_ACTIONS = {
    0: ((0, 1), (1, 1), (2, 1), (3, 1), (4, 1)),
    1: ((1, 1), (0, 1), (2, -1), (4, -1), (3, -1)),
    2: ((1, -1), (0, -1), (2, -1), (4, 1), (3, 1)),
    3: ((0, 1), (1, -1), (2, -1), (3, -1), (4, 1)),
    4: ((0, -1), (1, 1), (2, -1), (3, 1), (4, -1)),
    5: ((1, -1), (0, 1), (2, 1), (4, -1), (3, 1)),
    6: ((1, 1), (0, -1), (2, 1), (4, 1), (3, -1)),
    7: ((0, -1), (1, -1), (2, 1), (3, -1), (4, -1)),
}


def _matrix(k: int) -> np.ndarray:
    m = np.zeros((5, 5))
    for row, (col, sgn) in enumerate(_ACTIONS[k]):
        m[row, col] = sgn
    return m


SYMMETRY_MATRICES = {SymmetryElement(k): _matrix(k) for k in _ACTIONS}

# row a, column b: the element equal to "a, then b"
_TABLE = np.array(
    [
        [0, 1, 2, 3, 4, 5, 6, 7],
        [1, 0, 7, 6, 5, 4, 3, 2],
        [2, 7, 0, 5, 6, 3, 4, 1],
        [3, 5, 6, 0, 7, 1, 2, 4],
        [4, 6, 5, 7, 0, 2, 1, 3],
        [5, 3, 4, 2, 1, 7, 0, 6],
        [6, 4, 3, 1, 2, 0, 7, 5],
        [7, 2, 1, 4, 3, 6, 5, 0],
    ]
)


def apply_symmetry(e, h) -> np.ndarray:
    """Image of a covector (or a stack of covectors along the last axis)."""
    h = np.asarray(h, dtype=float)
    return h[..., [c for c, _ in _ACTIONS[int(e)]]] * np.array([s for _, s in _ACTIONS[int(e)]], dtype=float)


def compose(first, then) -> SymmetryElement:
    """The group element acting as ``first`` followed by ``then``."""
    return SymmetryElement(int(_TABLE[int(first), int(then)]))


def inverse(e) -> SymmetryElement:
    return SymmetryElement(int(np.flatnonzero(_TABLE[int(e)] == 0)[0]))


def to_fundamental_domain(h) -> tuple:
    """(h', e) with h' = apply_symmetry(e, h) and h4' >= h5' >= 0; Id preferred, then lowest index."""
    h = as_vec5(h, "h")
    for e in SymmetryElement:
        img = apply_symmetry(e, h)
        if img[3] >= img[4] >= 0.0:
            return img, e
    raise AssertionError("the eight images cover the plane")  # pragma: no cover


# ---------------------------------------------------------------- strata


class StratumLabel(NamedTuple):
    case: int
    stratum: int

    def __str__(self) -> str:
        return f"case {self.case}, C_{self.stratum}"


def _same(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def phase_case(h4: float, h5: float, tol: float = CORNER_TOL) -> int:
    """Subcase 1-4 of a pair already in the fundamental domain."""
    if h5 < -tol or h4 < h5 - tol:
        raise ValueError("(h4, h5) must satisfy h4 >= h5 >= 0")
    z5 = abs(h5) <= tol
    eq = _same(h4, h5, tol)
    if eq and z5:
        return 4
    if eq:
        return 3
    if z5:
        return 2
    return 1


def critical_values(h4: float, h5: float, tol: float = CORNER_TOL) -> tuple:
    case = phase_case(h4, h5, tol)
    return {1: (-h4, -h5, h5, h4), 2: (-h4, 0.0, h4), 3: (-h4, h4), 4: (0.0,)}[case]


def stratum_for_energy(h4: float, h5: float, E: float, tol: float = CORNER_TOL) -> StratumLabel:
    """Odd strata are critical levels, even strata the open intervals above each of them."""
    case = phase_case(h4, h5, tol)
    crit = critical_values(h4, h5, tol)
    for k, c in enumerate(crit):
        if _same(E, c, tol):
            return StratumLabel(case, 2 * k + 1)
        if E < c:
            if k == 0:
                raise ValueError(f"energy {E} lies below the minimum {c} of the potential")
            return StratumLabel(case, 2 * k)
    return StratumLabel(case, 2 * len(crit))


def classify_stratum(h, tol: float = CORNER_TOL) -> StratumLabel:
    h = as_vec5(h, "h")
    if abs(abs(h[0]) + abs(h[1]) - 1.0) > NORM_TOL:
        raise ValueError("classify_stratum expects |h1| + |h2| = 1")
    img, _ = to_fundamental_domain(h)
    return stratum_for_energy(img[3], img[4], float(energy(img)), tol)


# ---------------------------------------------------------------- exact propagation


def segment_coefficients(h, q, u) -> np.ndarray:
    """(10, 4) coefficients in local time of the solution under a constant control u."""
    h1, h2, h3, h4, h5 = h
    x, y, z, v, w = q
    u1, u2 = u
    a = u1 * h4 + u2 * h5
    r0 = x * x + y * y
    b = x * u1 + y * u2
    c = u1 * u1 + u2 * u2
    return np.array(
        [
            [h1, -u2 * h3, -u2 * a / 2.0, 0.0],
            [h2, u1 * h3, u1 * a / 2.0, 0.0],
            [h3, a, 0.0, 0.0],
            [h4, 0.0, 0.0, 0.0],
            [h5, 0.0, 0.0, 0.0],
            [x, u1, 0.0, 0.0],
            [y, u2, 0.0, 0.0],
            [z, 0.5 * (u2 * x - u1 * y), 0.0, 0.0],
            [v, u2 * r0 / 2.0, u2 * b / 2.0, u2 * c / 6.0],
            [w, -u1 * r0 / 2.0, -u1 * b / 2.0, -u1 * c / 6.0],
        ]
    )


def _horner(coef: np.ndarray, tau):
    tau = np.asarray(tau, dtype=float)
    return ((coef[:, 3, None] * tau + coef[:, 2, None]) * tau + coef[:, 1, None]) * tau + coef[:, 0, None]


@dataclass(frozen=True)
class Segment:
    t0: float
    t1: float
    control: tuple
    coeffs: np.ndarray

    def state(self, t) -> np.ndarray:
        out = _horner(self.coeffs, np.asarray(t, dtype=float) - self.t0)
        return out[:, 0] if np.ndim(t) == 0 else out.T


@dataclass(frozen=True)
class Branch:
    """One bang-bang continuation.  ``lineage`` lists (time, sign) of every split taken."""

    segments: tuple
    switch_times: tuple
    lineage: tuple
    flags: tuple

    @property
    def endpoint(self) -> np.ndarray:
        s = self.segments[-1]
        return s.state(s.t1)

    def state_at(self, t) -> np.ndarray:
        """States (..., 10) at times t in [0, T]."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        starts = np.array([s.t0 for s in self.segments])
        idx = np.clip(np.searchsorted(starts, t_arr, side="right") - 1, 0, len(self.segments) - 1)
        out = np.empty((len(t_arr), 10))
        for k in np.unique(idx):
            sel = idx == k
            out[sel] = self.segments[k].state(t_arr[sel])
        return out[0] if np.ndim(t) == 0 else out

    def controls(self) -> np.ndarray:
        return np.array([s.control for s in self.segments])

    def polynomial_table(self) -> np.ndarray:
        """(n_segments, 10, 4) local-time coefficients."""
        return np.stack([s.coeffs for s in self.segments])

    def diverged_from(self, other: "Branch") -> float:
        """Time after which the two branches differ (inf if identical lineage)."""
        for (ta, sa), (tb, sb) in zip(self.lineage, other.lineage):
            if ta != tb:
                return min(ta, tb)
            if sa != sb:
                return ta
        return math.inf


@dataclass(frozen=True)
class ExpResult:
    h0: np.ndarray
    q0: np.ndarray
    T: float
    branches: tuple
    stratum: Optional[StratumLabel] = None

    @property
    def endpoints(self) -> np.ndarray:
        return np.array([b.endpoint[5:] for b in self.branches])

    def state_at(self, t, branch: int = 0) -> np.ndarray:
        return self.branches[branch].state_at(t)


@dataclass
class _Work:
    t: float
    h: np.ndarray
    q: np.ndarray
    u: list
    segments: list = field(default_factory=list)
    switches: list = field(default_factory=list)
    lineage: tuple = ()
    flags: set = field(default_factory=set)
    singular: bool = False

    def fork(self, sign: float, t: float) -> "_Work":
        return _Work(self.t, self.h.copy(), self.q.copy(), list(self.u), list(self.segments), list(self.switches),
                     self.lineage + ((t, sign),), set(self.flags), self.singular)


def _quadratic_event(A: float, B: float, C: float):
    """First positive event of A t^2 + B t + C = 0 as (t, tangent) or None.

    ``C`` is zero only right after a snap, where the root at 0 is ignored.
    """
    if A == 0.0:
        if B == 0.0 or C == 0.0:
            return None
        r = -C / B
        return (r, False) if r > 0 else None
    if C == 0.0:
        r = -B / A
        return (r, False) if r > 0 else None
    D = B * B - 4.0 * A * C
    if abs(D) <= TANGENT_RTOL * (B * B + abs(4.0 * A * C)):
        r = -B / (2.0 * A)
        return (r, True) if r > 0 else None
    if D < 0:
        return None
    sq = math.sqrt(D)
    qq = -0.5 * (B + math.copysign(sq, B))
    roots = sorted(r for r in (qq / A, C / qq if qq != 0 else math.inf) if r > 0)
    return (roots[0], False) if roots else None


def _next_event(h, u):
    """(tau, index, tangent) of the first zero of h1 or h2 ahead, or None."""
    h3, h4, h5 = h[2], h[3], h[4]
    a = u[0] * h4 + u[1] * h5
    best = None
    for i, kappa in ((0, -u[1]), (1, u[0])):
        ev = _quadratic_event(kappa * a / 2.0, kappa * h3, h[i])
        if ev is not None and (best is None or ev[0] < best[0]):
            best = (ev[0], i, ev[1])
    return best


def _corner_options(h, u, i: int) -> list:
    """Signs for component i that stay consistent with the maximum condition past a corner."""
    h4, h5 = h[3], h[4]
    out = []
    for sigma in (1.0, -1.0):
        if i == 0:
            acc = -u[1] * (sigma * h4 + u[1] * h5)
        else:
            acc = u[0] * (u[0] * h4 + sigma * h5)
        if acc != 0.0 and math.copysign(1.0, acc) == sigma:
            out.append(sigma)
    return out


def _corner_accel_zero(h, u, i: int) -> bool:
    h4, h5 = h[3], h[4]
    if i == 0:
        return all(abs(-u[1] * (s * h4 + u[1] * h5)) <= CORNER_TOL for s in (1.0, -1.0))
    return all(abs(u[0] * (u[0] * h4 + s * h5)) <= CORNER_TOL for s in (1.0, -1.0))


def _singular_value(h, u, i: int) -> float:
    h4, h5 = h[3], h[4]
    if i == 0:
        return -u[1] * h5 / h4
    return -u[0] * h4 / h5


def _snap(w: _Work, i: int, H0: float, corner: bool) -> None:
    j = 1 - i
    w.h[i] = 0.0
    w.h[j] = math.copysign(H0, w.h[j])
    if corner:
        w.h[2] = 0.0


def _resolve_corner(w: _Work, i: int, case: int, H0: float) -> list:
    """Continue ``w`` past a corner; returns the works to keep propagating."""
    _snap(w, i, H0, corner=True)
    options = _corner_options(w.h, w.u, i)
    if len(options) == 2:
        out = []
        for sigma in options:
            child = w.fork(sigma, w.t)
            if child.u[i] != sigma and w.t > 0:
                child.switches.append(w.t)
            child.u[i] = sigma
            child.flags.add("split")
            if case != 1:
                child.flags.add("inferred continuation")
            out.append(child)
        return out
    if len(options) == 1:
        if w.u[i] != options[0] and w.t > 0:
            w.switches.append(w.t)
        w.u[i] = options[0]
        return [w]
    if _corner_accel_zero(w.h, w.u, i):
        raise DegenerateStateError("corner with vanishing switching dynamics: edge or full-square degeneracy")
    val = _singular_value(w.h, w.u, i)
    if abs(val) > 1.0 + 1e-12:
        raise DegenerateStateError(f"stable corner needs an inadmissible singular control {val}")
    if w.t > 0:
        w.switches.append(w.t)
    w.u[i] = float(np.clip(val, -1.0, 1.0))
    w.singular = True
    w.flags.add("singular continuation")
    return [w]


def _initial_works(h: np.ndarray, q: np.ndarray, case: int, H0: float) -> list:
    zero = [abs(h[k]) <= CORNER_TOL for k in (0, 1)]
    if all(zero):
        raise DegenerateStateError("h1 = h2 = 0: the maximum condition allows the full square")
    u = [math.copysign(1.0, h[0]), math.copysign(1.0, h[1])]
    w = _Work(0.0, h.copy(), q.copy(), u)
    for i in (0, 1):
        if zero[i]:
            if abs(h[2]) > CORNER_TOL:
                kappa = -u[1] if i == 0 else u[0]
                w.u[i] = math.copysign(1.0, kappa * h[2])
                _snap(w, i, H0, corner=False)
                return [w]
            return _resolve_corner(w, i, case, H0)
    return [w]


def exp_bangbang(h0, q0=(0.0, 0.0, 0.0, 0.0, 0.0), T: float = 1.0, max_branches: int = DEFAULT_MAX_BRANCHES) -> ExpResult:
    """All bang-bang extremals from (h0, q0) on [0, T], propagated in closed form."""
    h = as_vec5(h0, "h0").copy()
    q = as_vec5(q0, "q0").copy()
    if not T > 0:
        raise ValueError("T must be positive")
    H0 = abs(h[0]) + abs(h[1])
    if abs(H0 - 1.0) > NORM_TOL:
        raise ValueError(f"exp_bangbang expects |h1| + |h2| = 1, got {H0}")
    img, _ = to_fundamental_domain(h)
    case = phase_case(img[3], img[4])
    try:
        stratum = stratum_for_energy(img[3], img[4], float(energy(img)))
    except ValueError:
        stratum = None
    stack = _initial_works(h, q, case, H0)
    done = []
    t_eps = 1e-14 * max(1.0, T)
    while stack:
        w = stack.pop()
        forked = False
        while w.t < T - t_eps:
            rem = T - w.t
            ev = None if w.singular else _next_event(w.h, w.u)
            tau = rem if ev is None or ev[0] >= rem else ev[0]
            seg = Segment(w.t, w.t + tau, (w.u[0], w.u[1]), segment_coefficients(w.h, w.q, w.u))
            w.segments.append(seg)
            end = seg.state(seg.t1)
            w.h, w.q = end[:5].copy(), end[5:].copy()
            w.t = seg.t1
            if ev is None or ev[0] >= rem:
                break
            _, i, tangent = ev
            if tangent or abs(w.h[2]) <= CORNER_TOL:
                nxt = _resolve_corner(w, i, case, H0)
                if len(nxt) > 1:
                    stack.extend(nxt)
                    if len(stack) + len(done) > max_branches:
                        raise BranchOverflowError(f"more than {max_branches} branches")
                    forked = True
                    break
            else:
                kappa = -w.u[1] if i == 0 else w.u[0]
                _snap(w, i, H0, corner=False)
                w.u[i] = math.copysign(1.0, kappa * w.h[2])
                w.switches.append(w.t)
        if forked:
            continue
        if not w.segments:
            w.segments.append(Segment(0.0, T, tuple(w.u), segment_coefficients(w.h, w.q, w.u)))
        done.append(
            Branch(tuple(w.segments), tuple(float(t) for t in w.switches if 0 < t < T), w.lineage, tuple(sorted(w.flags)))
        )
    done.sort(key=lambda b: tuple(-s for _, s in b.lineage))
    return ExpResult(as_vec5(h0, "h0"), as_vec5(q0, "q0"), float(T), tuple(done), stratum)


def switching_times(r: ExpResult, branch: int = 0) -> list:
    if not 0 <= branch < len(r.branches):
        raise IndexError(f"branch index {branch} out of range (have {len(r.branches)})")
    return list(r.branches[branch].switch_times)


def angular_trace(branch: Branch, times) -> np.ndarray:
    """(n, 2) samples of (theta, h3) along a branch."""
    s = branch.state_at(np.atleast_1d(times))
    H = np.abs(s[:, 0]) + np.abs(s[:, 1])
    return np.stack([_theta_v(s[:, 0] / H, s[:, 1] / H), s[:, 2]], axis=1)


# ---------------------------------------------------------------- level sets


def _potential_exact(theta, h4: float, h5: float) -> np.ndarray:
    """potential_U with exact values at multiples of pi/2 (cos(pi/2) is not 0 in floating point)."""
    theta = np.asarray(theta, dtype=float)
    U = potential_U(theta, h4, h5)
    r = np.mod(theta, math.pi / 2)
    corners = np.isclose(r, 0.0, atol=1e-13) | np.isclose(r, math.pi / 2, atol=1e-13)
    k = np.rint(theta / (math.pi / 2)).astype(int) % 4
    return np.where(corners, np.choose(k, [h5, -h4, -h5, h4]), U)


def stratum_energy(h4: float, h5: float, stratum: int, rng: np.random.Generator) -> float:
    """An energy on the given stratum: the critical value for odd strata, a random interior value otherwise."""
    crit = critical_values(h4, h5)
    if not 1 <= stratum <= 2 * len(crit):
        raise ValueError(f"stratum must be in 1..{2 * len(crit)}")
    k, odd = divmod(stratum - 1, 2)
    if not odd:
        return float(crit[k])
    if k + 1 < len(crit):
        return float(crit[k] + rng.uniform(0.1, 0.9) * (crit[k + 1] - crit[k]))
    return float(crit[k] + rng.uniform(0.1, 2.0))


def sample_covector(h4: float, h5: float, stratum: int, rng: np.random.Generator) -> np.ndarray:
    """A covector with H = 1 and the given (h4, h5) on the requested stratum.

    The angle is drawn where the potential lies strictly below the energy, so
    the point is off the chart boundary whenever the level allows it.
    """
    E = stratum_energy(h4, h5, stratum, rng)
    theta = np.union1d(np.linspace(0.0, TWO_PI, 4097)[:-1], np.arange(4) * (math.pi / 2))
    U = _potential_exact(theta, h4, h5)
    r = np.mod(theta, math.pi / 2)
    interior = (r > 1e-3) & (r < math.pi / 2 - 1e-3)
    free = interior & (U < E - 1e-6)
    if np.any(free):
        th = float(rng.choice(theta[free]))
        h3 = math.sqrt(2.0 * (E - float(_potential_exact(th, h4, h5)))) * rng.choice([-1.0, 1.0])
    else:
        th = float(rng.choice(theta[np.abs(U - E) <= 1e-12]))
        h3 = 0.0
    h1, h2 = h_from_theta(th)
    if np.isclose(th % (math.pi / 2), 0.0, atol=1e-13) or np.isclose(th % (math.pi / 2), math.pi / 2, atol=1e-13):
        k = int(round(th / (math.pi / 2))) % 4
        h1, h2 = ((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0))[k]
    return np.array([h1, h2, h3, h4, h5], dtype=float)


def level_curve(h4: float, h5: float, E: float, n_samples: int = 721) -> list:
    """Polylines of the level set E in the (theta, h3) cylinder.

    Returns a list of (m, 2) arrays.  Multiples of pi/2 are always sampled so the
    isolated points and corners of critical levels are hit exactly.
    """
    n_samples = max(8, int(n_samples))
    theta = np.union1d(np.linspace(0.0, TWO_PI, n_samples), np.arange(5) * (math.pi / 2))
    R = 2.0 * (E - _potential_exact(theta, h4, h5))
    ok = R >= -1e-12
    if not np.any(ok):
        raise ValueError(f"empty level set for E = {E}")
    h3 = np.sqrt(np.maximum(R, 0.0))
    padded = np.concatenate([[False], ok, [False]]).astype(int)
    starts = np.flatnonzero(np.diff(padded) == 1)
    stops = np.flatnonzero(np.diff(padded) == -1)
    def turning(lo, hi):
        # root of E - U between an excluded sample and an included one
        g = lambda t: E - float(_potential_exact(np.array([t]), h4, h5)[0])
        if g(hi) <= 0.0:
            return hi
        return brentq(g, min(lo, hi), max(lo, hi), xtol=1e-15)

    curves = []
    for a, b in zip(starts, stops):
        upper = np.stack([theta[a:b], h3[a:b]], axis=1)
        if not np.any(upper[:, 1] > 0):
            curves.append(upper)
            continue
        head = [(turning(theta[a - 1], theta[a]), 0.0)] if a > 0 else []
        tail = [(turning(theta[b], theta[b - 1]), 0.0)] if b < len(theta) else []
        upper = np.concatenate([np.reshape(head, (-1, 2)), upper, np.reshape(tail, (-1, 2))])
        lower = upper * np.array([1.0, -1.0])
        if head and tail:
            # both ends sit on h3 = 0: one closed oval, first point repeated last
            curves.append(np.concatenate([upper, lower[::-1][1:]]))
        else:
            curves.extend([upper, lower])
    return curves


# ---------------------------------------------------------------- cut search


@dataclass(frozen=True)
class CutEvent:
    t: float
    kind: str  # "split", "maxwell", "earlier-arrival"
    detail: str


@dataclass(frozen=True)
class CutSearchResult:
    first_nonoptimal: Optional[float]
    events: tuple

    @property
    def found(self) -> bool:
        return self.first_nonoptimal is not None

    def __str__(self) -> str:
        return "none found" if self.first_nonoptimal is None else f"non-optimal after t = {self.first_nonoptimal:.17g}"


def cut_search(h0, T_max: float, n_grid: int = 200, tol: float = 1e-9) -> CutSearchResult:
    """Experimental search for loss of optimality along Exp(h0, t), t <= T_max.

    Compares endpoints on a time grid against every branch of h0 and of its
    symmetry images started at the origin.  A point reached by the family in
    strictly less time, or by two diverged branches at the same time, marks a
    non-optimal time.  Coincidences of branches at their split are recorded but
    do not count.  A negative answer is not an optimality certificate.
    """
    h0 = as_vec5(h0, "h0")
    times = np.linspace(0.0, T_max, max(2, int(n_grid)) + 1)[1:]
    own = exp_bangbang(h0, T=T_max)
    family = list(own.branches)
    for e in list(SymmetryElement)[1:]:
        try:
            family.extend(exp_bangbang(apply_symmetry(e, h0), T=T_max).branches)
        except (DegenerateStateError, BranchOverflowError):
            continue
    fam_q = np.stack([b.state_at(times)[:, 5:] for b in family])  # (n_traj, n_t, 5)
    own_q = fam_q[: len(own.branches)]
    events = []
    for bi, bj in itertools.combinations(range(len(own.branches)), 2):
        tau = own.branches[bi].diverged_from(own.branches[bj])
        if 0.0 <= tau <= T_max:
            pa = own.branches[bi].state_at(tau)[5:]
            pb = own.branches[bj].state_at(tau)[5:]
            if np.max(np.abs(pa - pb)) <= tol * (1.0 + np.max(np.abs(pa))):
                events.append(CutEvent(float(tau), "split", f"branches {bi}, {bj} share the endpoint at their split"))
    first = None
    for k, t in enumerate(times):
        for bi, b in enumerate(own.branches):
            p = own_q[bi, k]
            scale = tol * (1.0 + np.max(np.abs(p)))
            for bj in range(bi + 1, len(own.branches)):
                if t > b.diverged_from(own.branches[bj]) + 1e-12 and np.max(np.abs(own_q[bj, k] - p)) <= scale:
                    events.append(CutEvent(float(t), "maxwell", f"branches {bi}, {bj} meet after diverging"))
                    first = t if first is None else min(first, t)
            if k > 0:
                d = np.max(np.abs(fam_q[:, :k] - p), axis=2)
                if np.any(d <= scale):
                    events.append(CutEvent(float(t), "earlier-arrival", f"branch {bi} endpoint reached earlier"))
                    first = t if first is None else min(first, t)
        if first is not None:
            break
    return CutSearchResult(None if first is None else float(first), tuple(events))
