"""Singular arcs: control values, reduced vertical dynamics, boundary control families.

Only the u2 = 1 case is built natively.  The three other singular cases
(u2 = -1, u1 = +-1) are reached through the discrete state symmetries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

from . import attainable, kernels
from .core import Control, as_vec5, control_symmetry
from .extremals import PiecewiseControl


class NotSingularError(ValueError):
    pass


class InadmissibleControlError(ValueError):
    pass


class NotAttainableError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, msg: str, residual: float):
        super().__init__(f"{msg} (best residual {residual:.3e})")
        self.residual = residual


# ---------------------------------------------------------------- singular controls


@dataclass(frozen=True)
class SingularArcSpec:
    """Control data of a singular arc.

    ``u_singular`` is the constant value of the undetermined component, or None
    when it is free in [-1, 1] (case a).
    """

    axis: Literal["h1-singular", "h2-singular"]
    case: Literal["a", "b"]
    s: float
    u_singular: Optional[float]
    h4: float
    h5: float

    def __post_init__(self):
        if self.case == "a" and (self.h4 != 0.0 or self.h5 != 0.0):
            raise ValueError("case a requires h4 = h5 = 0")
        if self.u_singular is not None and abs(self.u_singular) > 1.0:
            raise ValueError("singular control value outside [-1, 1]")

    def control(self, free: Optional[float] = None) -> Control:
        """The control on the arc; ``free`` fills the component left open in case a."""
        val = self.u_singular if self.u_singular is not None else free
        if val is None:
            raise ValueError("case a leaves the singular component free; pass a value")
        if abs(val) > 1.0:
            raise ValueError("control value outside [-1, 1]")
        if self.axis == "h1-singular":
            return Control(float(val), self.s)
        return Control(self.s, float(val))


def singular_tol(h) -> float:
    return 1e-9 * max(1.0, float(np.linalg.norm(h)))


def singular_control(axis: str, h, tol: Optional[float] = None) -> SingularArcSpec:
    h = as_vec5(h, "h")
    if tol is None:
        tol = singular_tol(h)
    if axis not in ("h1-singular", "h2-singular"):
        raise ValueError(f"axis must be 'h1-singular' or 'h2-singular', got {axis!r}")
    zero, other = (0, 1) if axis == "h1-singular" else (1, 0)
    h1, h2, h3, h4, h5 = h
    if abs(h[zero]) > tol or abs(h[other]) <= tol or abs(h3) > tol:
        raise NotSingularError(f"covector {tuple(h)} does not satisfy the {axis} premises")
    s = float(np.sign(h[other]))
    # the coefficient multiplying the singular component in dh3/dt
    lead, rest = (h4, h5) if axis == "h1-singular" else (h5, h4)
    if abs(lead) <= tol:
        if abs(rest) > tol:
            raise NotSingularError(f"dh3/dt = {s * rest} cannot vanish on an {axis} arc")
        return SingularArcSpec(axis, "a", s, None, 0.0, 0.0)
    u = -s * rest / lead
    if abs(u) > 1.0 + tol:
        raise InadmissibleControlError(f"singular control value {u} lies outside [-1, 1]")
    return SingularArcSpec(axis, "b", s, float(np.clip(u, -1.0, 1.0)), float(h4), float(h5))


# ---------------------------------------------------------------- reduced vertical system


class NormalizedAdjoint(NamedTuple):
    hf1: float
    hf3: float
    hf4: float
    hf5: float

    @classmethod
    def from_covector(cls, h) -> "NormalizedAdjoint":
        """Scale by |h4|; requires h4 != 0.  The sign of hf5 is left as is."""
        h = as_vec5(h, "h")
        if h[3] == 0.0:
            raise ValueError("normalization needs h4 != 0")
        a = abs(h[3])
        return cls(h[0] / a, h[2] / a, float(np.sign(h[3])), h[4] / a)

    def reflected(self) -> "NormalizedAdjoint":
        """The symmetry (hf1, hf3, hf4, hf5) -> (-hf1, -hf3, hf4, -hf5)."""
        return NormalizedAdjoint(-self.hf1, -self.hf3, self.hf4, -self.hf5)

    def canonical(self) -> "NormalizedAdjoint":
        return self.reflected() if self.hf5 < 0 else self


def _check_hf4(n: NormalizedAdjoint):
    if n.hf4 not in (-1.0, 1.0):
        raise ValueError(f"hf4 must be +1 or -1, got {n.hf4}")


def reduced_rhs(n: NormalizedAdjoint) -> tuple:
    _check_hf4(n)
    if n.hf1 == 0.0:
        raise ValueError("reduced system is undefined on hf1 = 0; use the singular continuation")
    return (-n.hf3, n.hf4 * np.sign(n.hf1) + n.hf5)


def reduced_first_integral(n) -> float:
    hf1, hf3, hf4, hf5 = n
    return 0.5 * hf3 * hf3 + hf5 * hf1 + hf4 * abs(hf1)


@dataclass(frozen=True)
class ReducedTrajectory:
    t: np.ndarray
    hf1: np.ndarray
    hf3: np.ndarray
    hf4: float
    hf5: float
    crossings: int

    def first_integral(self) -> np.ndarray:
        return 0.5 * self.hf3**2 + self.hf5 * self.hf1 + self.hf4 * np.abs(self.hf1)


def integrate_reduced(
    n: NormalizedAdjoint,
    T: float,
    dt: float = 1e-4,
    *,
    stride: int = 1,
    event_tol: float = 1e-12,
    max_events: int = 100_000,
) -> ReducedTrajectory:
    """RK4 on the reduced system with bisection at hf1 sign changes."""
    _check_hf4(n)
    if n.hf1 == 0.0:
        raise ValueError("start off the switching line hf1 = 0")
    if not (T > 0 and dt > 0):
        raise ValueError("T and dt must be positive")
    k, t, rec, crossings, status = kernels.rk4_reduced(
        float(n.hf1), float(n.hf3), float(n.hf4), float(n.hf5), float(T), float(dt), max(1, int(stride)),
        float(event_tol), int(max_events),
    )
    if status != kernels.STATUS_OK:
        raise RuntimeError(f"more than {max_events} crossings of hf1 = 0")
    return ReducedTrajectory(t[:k].copy(), rec[:k, 0].copy(), rec[:k, 1].copy(), float(n.hf4), float(n.hf5), crossings)


def reduced_level_curve(hf4: float, hf5: float, c: float, hf3_max: float = 3.0, n_samples: int = 401) -> list:
    """Polylines in the (hf1, hf3) plane on which the reduced first integral equals c.

    On each half-plane sgn hf1 = s the level is the parabola
    hf1 = (c - hf3^2/2) / (hf5 + s hf4), or a pair of horizontal rays when the
    denominator vanishes.  Returns a list of (m, 2) arrays, possibly empty.
    """
    if hf4 not in (-1.0, 1.0):
        raise ValueError(f"hf4 must be +1 or -1, got {hf4}")
    hf3 = np.linspace(-hf3_max, hf3_max, max(3, int(n_samples)))
    curves = []
    for s in (1.0, -1.0):
        den = hf5 + s * hf4
        if abs(den) <= 1e-12:
            if c >= 0:
                r = np.sqrt(2.0 * c)
                ray = np.linspace(0.0, s * hf3_max, max(3, int(n_samples)) // 2)
                curves.extend(np.stack([ray, np.full_like(ray, y)], axis=1) for y in {r, -r})
            continue
        hf1 = (c - 0.5 * hf3 * hf3) / den
        ok = s * hf1 >= 0
        padded = np.concatenate([[False], ok, [False]]).astype(int)
        d = np.diff(padded)
        for a, b in zip(np.flatnonzero(d == 1), np.flatnonzero(d == -1)):
            if b - a >= 2:
                curves.append(np.stack([hf1[a:b], hf3[a:b]], axis=1))
    return curves


REGION_TAGS = ("C0", "C01", "C1", "C1inf")


class RegionLabel(NamedTuple):
    tag: str
    sign: int

    @property
    def name(self) -> str:
        return f"{self.tag}{'+' if self.sign > 0 else '-'}"

    def __str__(self) -> str:
        return self.name


def classify_adjoint_region(n: NormalizedAdjoint, tol: float = 1e-12) -> RegionLabel:
    _check_hf4(n)
    hf5 = n.hf5
    if hf5 < -tol:
        raise ValueError("hf5 < 0: apply NormalizedAdjoint.reflected first")
    if abs(hf5) <= tol:
        tag = "C0"
    elif hf5 < 1.0 - tol:
        tag = "C01"
    elif hf5 <= 1.0 + tol:
        tag = "C1"
    else:
        tag = "C1inf"
    return RegionLabel(tag, int(n.hf4))


# ---------------------------------------------------------------- extremal control families


def _is_sign(v: float) -> bool:
    return v in (-1.0, 1.0)


def extremal_singular_control(kind: int, values: Sequence[float] = (), durations: Sequence[float] = (),
                              sign: float = 1.0, rtol: float = 1e-12) -> PiecewiseControl:
    """Candidate boundary controls u1 (with u2 = 1) of the two extremal types.

    kind 1: ``values = (a, c, b)`` with a, b in {-1, 1}, c in [-1, 1], and
    three nonnegative durations.
    kind 2: alternating values starting at ``sign``; durations follow the pattern
    (Tb, T1, T2, T1, ..., Ti, Te) with 0 < Tb <= T2, T1 > 0, 0 <= Te <= T_(3-i).
    """
    d = [float(x) for x in durations]
    if any(not np.isfinite(x) or x < 0 for x in d):
        raise ValueError("durations must be finite and nonnegative")
    if kind == 1:
        if len(values) != 3 or len(d) != 3:
            raise ValueError("type 1 needs three values and three durations")
        a, c, b = map(float, values)
        if not (_is_sign(a) and _is_sign(b)) or abs(c) > 1.0:
            raise ValueError("type 1 values must be (+-1, c, +-1) with |c| <= 1")
        if sum(d) <= 0:
            raise ValueError("total duration must be positive")
        return PiecewiseControl.from_pieces([a, c, b], d, u2=1.0)
    if kind != 2:
        raise ValueError(f"kind must be 1 or 2, got {kind}")
    if not _is_sign(float(sign)):
        raise ValueError("sign must be +1 or -1")
    if len(d) < 4:
        raise ValueError("type 2 needs at least (Tb, T1, T2, Te)")
    tb, t1, t2, te = d[0], d[1], d[2], d[-1]
    middle = d[1:-1]
    scale = rtol * max(1.0, max(d))
    if not (0 < tb <= t2 + scale and t1 > 0):
        raise ValueError(f"type 2 needs 0 < Tb <= T2 and T1 > 0, got Tb={tb}, T1={t1}, T2={t2}")
    for k, x in enumerate(middle):
        if abs(x - (t1, t2)[k % 2]) > scale:
            raise ValueError("middle durations must alternate T1, T2, T1, ...")
    other = t2 if len(middle) % 2 == 1 else t1  # last middle piece is T1 -> bound by T2
    if te > other + scale:
        raise ValueError(f"final duration {te} exceeds its bound {other}")
    vals = [float(sign) * (-1.0) ** k for k in range(len(d))]
    return PiecewiseControl.from_pieces(vals, d, u2=1.0)


def cut_bound(t_b: float, t_1: float, t_2: float) -> float:
    """Largest final duration of a 3-switch control before it stops being geometrically optimal."""
    if not (0 < t_b <= t_2 and t_1 > 0):
        raise ValueError(f"need 0 < Tb <= T2 and T1 > 0, got ({t_b}, {t_1}, {t_2})")
    return (t_2 - t_b) / (t_2 + t_b) * t_1


def _unit_bang(u: Control) -> float:
    if u.u2 != 1.0 or not _is_sign(u.u1):
        raise ValueError("expected u2 = 1 and u1 = +-1 on every piece")
    return u.u1


def is_geometrically_optimal_candidate(c: PiecewiseControl, rtol: float = 1e-12) -> bool:
    if len(c) != 4:
        raise ValueError(f"expected four pieces, got {len(c)}")
    signs = [_unit_bang(u) for u, _ in c.segments]
    if any(signs[k + 1] != -signs[k] for k in range(3)):
        raise ValueError("values must alternate")
    tb, t1, t2, te = c.durations
    if not tb < t2:
        return False
    return 0 < te <= cut_bound(tb, t1, t2) * (1 + rtol)


def symmetric_counterpart(c: PiecewiseControl) -> PiecewiseControl:
    """The same pieces in reverse order.

    For an alternating 4-piece control this swaps (Tb, T1, T2, Te) for
    (Te, T2, T1, Tb) with the opposite leading sign; when z(T) = 0 both reach
    the same endpoint.
    """
    return PiecewiseControl(tuple(reversed(c.segments)))


# ---------------------------------------------------------------- endpoint inversion


def _chart_endpoint(values: np.ndarray, durations: np.ndarray) -> np.ndarray:
    return kernels.piecewise_endpoints(values[None, :], 1.0, durations[None, :])[0]


class _Family(NamedTuple):
    name: str
    lower: np.ndarray
    upper: np.ndarray
    build: object  # params, L -> (values, durations)
    grid: np.ndarray


def _type1_build(a, b):
    def build(p, L):
        c, s1, s2 = p
        d = np.array([s1, (1 - s1) * s2, (1 - s1) * (1 - s2)]) * L
        return np.array([a, c, b]), d

    return build


def _type2_build(s):
    def build(p, L):
        al, be, rho = p
        tb = al * (1 - rho)
        te = be * (1 - al) / (1 + al) * rho
        d = np.array([tb, rho, 1 - rho, te])
        return np.array([s, -s, s, -s]), d * (L / d.sum())

    return build


def _grid(*axes):
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))


def _families():
    fams = []
    g1 = _grid(np.linspace(-1, 1, 11), np.linspace(0, 1, 21), np.linspace(0, 1, 21))
    for a in (1.0, -1.0):
        for b in (1.0, -1.0):
            fams.append(_Family(f"type1({a:+g},{b:+g})", np.array([-1.0, 0, 0]), np.ones(3), _type1_build(a, b), g1))
    g2 = _grid(*(np.linspace(0, 1, 17),) * 3)
    for s in (1.0, -1.0):
        fams.append(_Family(f"type2({s:+g})", np.zeros(3), np.ones(3), _type2_build(s), g2))
    return fams


_FAMILIES = _families()
_CHART_IDX = [0, 2, 3, 4]


def _prefix_target(target: np.ndarray, s0: float) -> np.ndarray:
    """Chart target of the subproblem left after holding u1 = 0 on [0, s0]."""
    x, z, v, w = target
    area = z + x / 2
    moment = w + x / 2 + x**3 / 6
    square = 2 * (v - 1 / 6)
    L = 1.0 - s0
    xt = x / L
    at = area / L**2
    bt = (moment - s0 * area) / L**3
    qt = square / L**3
    return np.array([xt, at - xt / 2, 1 / 6 + qt / 2, bt - xt / 2 - xt**3 / 6])


def _lsq(fun, x0, lo, hi):
    x0 = np.clip(x0, lo, hi)
    res0 = float(np.max(np.abs(fun(x0))))
    if res0 <= 1e-14:
        return res0, x0
    sol = least_squares(fun, x0, bounds=(lo, hi), xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=300)
    res = float(np.max(np.abs(fun(sol.x))))
    return (res, sol.x) if res < res0 else (res0, x0)


def _family_residual(fam: _Family, target: np.ndarray):
    def fun(p):
        v, d = fam.build(p, 1.0)
        return _chart_endpoint(v, d)[_CHART_IDX] - target

    return fun


def _prefixed_residual(fam: _Family, target: np.ndarray):
    def fun(p):
        s0 = p[0]
        v, d = fam.build(p[1:], 1.0 - s0)
        return _chart_endpoint(np.concatenate([[0.0], v]), np.concatenate([[s0], d]))[_CHART_IDX] - target

    return fun


def _fit_family(fam: _Family, target: np.ndarray, n_seeds: int):
    """Least squares over one family started from the closest lattice points."""
    built = [fam.build(p, 1.0) for p in fam.grid]
    ends = kernels.piecewise_endpoints(np.array([b[0] for b in built]), 1.0, np.array([b[1] for b in built]))
    order = np.argsort(np.max(np.abs(ends[:, _CHART_IDX] - target), axis=1))[:n_seeds]
    fun = _family_residual(fam, target)
    best = (np.inf, None)
    for idx in order:
        res, p = _lsq(fun, fam.grid[idx], fam.lower, fam.upper)
        if res < best[0]:
            best = (res, p)
        if res <= 1e-13:
            break
    return best


def _fit_prefixed(fam: _Family, target: np.ndarray, s0: float, n_seeds: int):
    """Solve the subproblem left after the u1 = 0 prefix, then polish s0 jointly."""
    _, p = _fit_family(fam, _prefix_target(target, s0), n_seeds)
    fun = _prefixed_residual(fam, target)
    x0 = np.concatenate([[s0], p])
    lo = np.concatenate([[0.0], fam.lower])
    hi = np.concatenate([[1.0 - 1e-9], fam.upper])
    res = float(np.max(np.abs(fun(x0))))
    if res > 1e-13:
        res, x0 = _lsq(fun, x0, lo, hi)
    return res, x0[1:], float(x0[0])


def _boundary_prefix(target: np.ndarray, bisect_tol: float) -> float:
    """s0 at which the remaining subproblem's target crosses the attainable boundary."""
    margin = lambda s: float(attainable.chart_margin(*_prefix_target(target, s)))
    lo = 0.0
    hi = None
    for s in np.linspace(0.0, 1.0, 129)[1:-1]:
        if margin(s) < 0:
            hi = s
            break
        lo = s
    if hi is None:
        hi = 1.0 - 1e-9
    while hi - lo > bisect_tol:
        mid = 0.5 * (lo + hi)
        if margin(mid) >= 0:
            lo = mid
        else:
            hi = mid
    return lo


def endpoint(c: PiecewiseControl) -> np.ndarray:
    """Exact endpoint from the origin of a piecewise-constant control."""
    v = c.values
    return kernels.piecewise_endpoints(v[None, :, 0], v[None, :, 1], c.durations[None, :])[0]


def _snapped(c: PiecewiseControl, eps: float = 1e-7) -> PiecewiseControl:
    # round near-bang values to +-1 and drop slivers; kept only if it still hits the target
    segs = []
    for u, d in c.segments:
        if d <= eps:
            continue
        u1 = float(np.sign(u.u1)) if abs(abs(u.u1) - 1.0) <= eps else u.u1
        u1 = 0.0 if abs(u1) <= 1e-12 else u1
        segs.append(((u1, u.u2), d))
    if not segs:
        return c
    total = sum(d for _, d in segs)
    return PiecewiseControl(tuple((u, d * c.total / total) for u, d in segs)).merged(value_tol=eps)


def _assemble(fam: _Family, params, s0: float) -> PiecewiseControl:
    v, d = fam.build(params, 1.0 - s0)
    vals = np.concatenate([[0.0], v]) if s0 > 0 else v
    durs = np.concatenate([[s0], d]) if s0 > 0 else d
    return PiecewiseControl.from_pieces(np.clip(vals, -1, 1), durs, u2=1.0)


def reach_singular(q1, T: float = 1.0, tol: float = 1e-9, n_seeds: int = 4) -> PiecewiseControl:
    """A singular control with at most four switches whose endpoint at time T is q1.

    Boundary targets are matched directly by the extremal control families;
    interior targets get a u1 = 0 prefix whose length is located by bisection on
    boundary membership of the remaining subproblem, then everything is polished
    jointly.  Errors: ``NotAttainableError`` or ``ConvergenceError``.
    """
    q1 = as_vec5(q1, "q1")
    qy = attainable.SectionQuery(q1, T)
    if not attainable.contains(qy, tol=max(tol, attainable.DEFAULT_TOL)):
        raise NotAttainableError(f"{tuple(q1)} is not attainable at T = {T}")
    cp = attainable.normalize(qy, tol=max(tol, attainable.DEFAULT_TOL))
    target = np.array([cp.x, cp.z, cp.v, cp.w])
    best = (np.inf, None, None, 0.0)

    if attainable.chart_margin(*target) <= 1e-7:
        for fam in _FAMILIES:
            res, p = _fit_family(fam, target, n_seeds)
            if res < best[0]:
                best = (res, fam, p, 0.0)
            if res <= tol:
                break
    if best[0] > tol:
        s0 = _boundary_prefix(target, 1e-10)
        for fam in _FAMILIES:
            res, p, s = _fit_prefixed(fam, target, s0, n_seeds)
            if res < best[0]:
                best = (res, fam, p, s)
            if res <= tol:
                break
    res, fam, params, s0 = best
    if fam is None or res > tol:
        raise ConvergenceError("no extremal control family matched the target", res)

    raw = _assemble(fam, params, s0)
    candidates = [_snapped(raw), raw.merged(min_duration=1e-13)]
    scale = np.array([T, T, T**2, T**3, T**3])
    for chart_ctrl in candidates:
        ctrl = chart_ctrl
        for k in reversed(cp.ops):
            ctrl = ctrl.map_values(lambda u, k=k: control_symmetry(k, u))
        ctrl = ctrl.scaled(T).merged()
        err = float(np.max(np.abs((endpoint(ctrl) - q1) / scale)))
        if err <= tol:
            break
    else:
        raise ConvergenceError("assembled control misses the target", err)
    if ctrl.n_switches > 4:
        raise ConvergenceError(f"assembled control has {ctrl.n_switches} switches", err)
    return ctrl
