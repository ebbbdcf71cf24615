"""Attainable set of singular trajectories: boundary functions, membership, sampling oracle.

All boundary functions live in the chart y1 = 1 at horizon T = 1.  Other faces
and horizons are brought there by the dilation and the discrete symmetries.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .core import Point, as_vec5

RADICAND_CLAMP = 1e-12
DEFAULT_TOL = 1e-9
SQRT2 = np.sqrt(2.0)

CONSTRAINTS = ("face", "x_bound", "z_max", "w_max", "w_min", "v_max", "v_min")


# ---------------------------------------------------------------- vectorized kernels


def _zz(x, z):
    # z^2 / (1 + x) with its limit 0 at x = -1 (z is forced to 0 there)
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    den = 1.0 + x
    safe = np.where(den < 1e-15, 1.0, den)
    return np.where(den < 1e-15, 0.0, z * z / safe)


def _z_max(x):
    return (1.0 - x * x) / 4.0


def _w_max(x, z):
    return (3.0 - 15.0 * x - 3.0 * x * x - 17.0 * x**3) / 96.0 + z / 2.0 - _zz(x, z) / 2.0


def _w_mm(x, z):
    return (-x * (1.0 + x * x) + (3.0 + np.sign(z)) * z - 4.0 * _zz(x, z)) / 6.0


def _v_max_parts(x, z, w):
    base = (1.0 + 3.0 * x * x - 6.0 * (1.0 - x) * z) / 12.0
    rad = 9.0 * (1.0 - x * x + 4.0 * z) ** 3 + 8.0 * (12.0 * w + 3.0 * x + x**3 - 6.0 * (1.0 - x) * z) ** 2
    return base, rad


def _v_min_plus_parts(x, z, w):
    base = (3.0 + 12.0 * w + 3.0 * x * x + 2.0 * x**3 - 6.0 * (1.0 - x) * z) / 12.0
    coef = (1.0 - x) / 12.0
    rad = (1.0 - x) * (1.0 + 24.0 * w + 3.0 * x + 4.0 * x**3) - 12.0 * (1.0 - x) * z - 12.0 * z * z
    return base, coef, rad


def _v_min_minus_parts(x, z, w):
    base = (1.0 + 3.0 * x * x + 6.0 * z + 6.0 * x * z) / 12.0
    rad = (1.0 - 12.0 * w - 2.0 * x - x * x - 2.0 * x**3 + 2.0 * (1.0 + x) * z) ** 2 + 4.0 * (
        1.0 - x * x - 4.0 * z
    ) * ((1.0 + x) * (6.0 * w + x + x**3) - 4.0 * (1.0 + x) * z + 4.0 * z * z)
    return base, rad


def _sqrt_clamped(rad):
    return np.sqrt(np.maximum(rad, 0.0))


def _sgn_pos(z):
    # sign with sgn(0) = +1, used where the two mirrored branches agree at z = 0
    return np.where(z < 0.0, -1.0, 1.0)


def _v_max_printed_v(x, z, w):
    base, rad = _v_max_parts(x, z, w)
    return base + SQRT2 / 48.0 * _sqrt_clamped(rad)


def _v_max_v(x, z, w):
    s = _sgn_pos(z)
    return _v_max_printed_v(x * s, np.abs(z), w * s)


def _v_min_plus_v(x, z, w):
    base, coef, rad = _v_min_plus_parts(x, z, w)
    return base - coef * _sqrt_clamped(rad)


def _v_min_minus_v(x, z, w):
    base, rad = _v_min_minus_parts(x, z, w)
    return base + _sqrt_clamped(rad) / 12.0


def _v_min_v(x, z, w):
    x, z, w = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, z, w)))
    upper = w >= _w_mm(x, z)
    lower = ~upper & (w <= -_w_mm(-x, -z))
    s = _sgn_pos(z)
    out = _v_min_minus_v(x * s, np.abs(z), w * s)
    out = np.where(lower, _v_min_plus_v(x, z, w), out)
    return np.where(upper, _v_min_plus_v(-x, -z, -w), out)


# ---------------------------------------------------------------- scalar API


def _check_x(x1):
    if not abs(x1) <= 1.0 + RADICAND_CLAMP:
        raise ValueError(f"x1 must lie in [-1, 1], got {x1}")


def _check_z(x1, z1):
    _check_x(x1)
    if abs(z1) > _z_max(min(abs(x1), 1.0)) + RADICAND_CLAMP:
        raise ValueError(f"|z1| = {abs(z1)} exceeds z_max({x1})")


def _checked_root(rad, what):
    rad = float(rad)
    if rad < -RADICAND_CLAMP:
        raise ValueError(f"negative radicand {rad:.3e} in {what}: arguments outside the admissible region")
    return np.sqrt(max(rad, 0.0))


def z_max(x1: float) -> float:
    _check_x(x1)
    return float(_z_max(x1))


def w_max(x1: float, z1: float) -> float:
    _check_z(x1, z1)
    return float(_w_max(x1, z1))


def w_mm(x1: float, z1: float) -> float:
    _check_z(x1, z1)
    return float(_w_mm(x1, z1))


def v_max_printed(x1: float, z1: float, w1: float) -> float:
    """The upper v-boundary in its literal closed form.

    This is exact for z1 >= 0 only; for z1 < 0 it can lie below attainable
    points.  Use ``v_max`` for the actual boundary.
    """
    base, rad = _v_max_parts(x1, z1, w1)
    return float(base + SQRT2 / 48.0 * _checked_root(rad, "v_max"))


def v_max(x1: float, z1: float, w1: float) -> float:
    """Upper v-boundary, the closed form evaluated at (x1 sgn z1, |z1|, w1 sgn z1)."""
    s = -1.0 if z1 < 0 else 1.0
    return v_max_printed(x1 * s, abs(z1), w1 * s)


def v_min_plus(x1: float, z1: float, w1: float) -> float:
    base, coef, rad = _v_min_plus_parts(x1, z1, w1)
    return float(base - coef * _checked_root(rad, "v_min+"))


def v_min_minus(x1: float, z1: float, w1: float) -> float:
    base, rad = _v_min_minus_parts(x1, z1, w1)
    return float(base + _checked_root(rad, "v_min-") / 12.0)


def v_min(x1: float, z1: float, w1: float) -> float:
    if w1 >= _w_mm(x1, z1):
        return v_min_plus(-x1, -z1, -w1)
    if w1 <= -_w_mm(-x1, -z1):
        return v_min_plus(x1, z1, w1)
    s = -1.0 if z1 < 0 else 1.0
    return v_min_minus(x1 * s, abs(z1), w1 * s)


# ---------------------------------------------------------------- membership


@dataclass(frozen=True)
class SectionQuery:
    target: Point
    T: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "target", Point(*map(float, as_vec5(self.target, "target"))))
        if not self.T > 0:
            raise ValueError(f"horizon must be positive, got {self.T}")


class ChartPoint(NamedTuple):
    """A target moved into the chart y1 = 1, T = 1 plus the symmetries used (in order)."""

    x: float
    z: float
    v: float
    w: float
    ops: tuple
    on_face: bool


def _normalize_many(points: np.ndarray, T, tol: float):
    """Vectorized move into the y = 1, x >= 0 chart.

    Returns (x, z, v, w, swapped, flipped_y, flipped_x, on_face).
    """
    p = np.asarray(points, dtype=float).reshape(-1, 5)
    T = np.broadcast_to(np.asarray(T, dtype=float), (p.shape[0],))
    x, y, z, v, w = (p[:, i] for i in range(5))
    x, y, z, v, w = x / T, y / T, z / T**2, v / T**3, w / T**3
    y_face = np.abs(np.abs(y) - 1.0) <= tol
    x_face = np.abs(np.abs(x) - 1.0) <= tol
    on_face = y_face | x_face
    swap = ~y_face & x_face
    # (x, y, z, v, w) -> (y, x, -z, -w, -v)
    x, y, z, v, w = (
        np.where(swap, y, x),
        np.where(swap, x, y),
        np.where(swap, -z, z),
        np.where(swap, -w, v),
        np.where(swap, -v, w),
    )
    flip_y = y < 0
    # (x, y, z, v, w) -> (x, -y, -z, -v, w)
    z = np.where(flip_y, -z, z)
    v = np.where(flip_y, -v, v)
    flip_x = x < 0
    # (x, y, z, v, w) -> (-x, y, -z, v, -w)
    x = np.where(flip_x, -x, x)
    z = np.where(flip_x, -z, z)
    w = np.where(flip_x, -w, w)
    return x, z, v, w, swap, flip_y, flip_x, on_face


def normalize(qy: SectionQuery, tol: float = DEFAULT_TOL) -> ChartPoint:
    x, z, v, w, swap, fy, fx, face = _normalize_many(np.asarray(qy.target)[None, :], qy.T, tol)
    ops = tuple(k for k, used in ((3, swap[0]), (2, fy[0]), (1, fx[0])) if used)
    return ChartPoint(float(x[0]), float(z[0]), float(v[0]), float(w[0]), ops, bool(face[0]))


def chart_slacks(x, z, v, w) -> np.ndarray:
    """Signed slack of each chart inequality (columns follow ``CONSTRAINTS[1:]``).

    Later inequalities are evaluated with earlier coordinates clamped into range so
    the result stays finite for points outside the set.
    """
    x, z, v, w = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, z, v, w)))
    sx = 1.0 - np.abs(x)
    xc = np.clip(x, -1.0, 1.0)
    zm = _z_max(xc)
    sz = zm - np.abs(z)
    zc = np.clip(z, -zm, zm)
    wu = _w_max(xc, zc)
    wl = -_w_max(-xc, -zc)
    s_wu = wu - w
    s_wl = w - wl
    wc = np.minimum(np.maximum(w, wl), wu)
    s_vu = _v_max_v(xc, zc, wc) - v
    s_vl = v - _v_min_v(xc, zc, wc)
    return np.stack([sx, sz, s_wu, s_wl, s_vu, s_vl], axis=-1)


def chart_margin(x, z, v, w):
    """Smallest slack; positive inside, zero on the boundary, negative outside."""
    return chart_slacks(x, z, v, w).min(axis=-1)


def contains_many(points, T=1.0, tol: float = DEFAULT_TOL) -> np.ndarray:
    x, z, v, w, _, _, _, on_face = _normalize_many(points, T, tol)
    return on_face & np.all(chart_slacks(x, z, v, w) >= -tol, axis=-1)


def contains(qy: SectionQuery, tol: float = DEFAULT_TOL) -> bool:
    return bool(contains_many(np.asarray(qy.target)[None, :], qy.T, tol)[0])


@dataclass(frozen=True)
class Membership:
    inside: bool
    binding: str
    slacks: dict
    chart: ChartPoint


def membership(qy: SectionQuery, tol: float = DEFAULT_TOL) -> Membership:
    """Verdict plus the binding constraint: the first violated one, or the tightest one if inside."""
    cp = normalize(qy, tol)
    if not cp.on_face:
        return Membership(False, "face", {}, cp)
    s = chart_slacks(cp.x, cp.z, cp.v, cp.w)
    slacks = dict(zip(CONSTRAINTS[1:], map(float, s)))
    violated = [k for k, val in slacks.items() if val < -tol]
    if violated:
        return Membership(False, violated[0], slacks, cp)
    return Membership(True, min(slacks, key=slacks.get), slacks, cp)


# ---------------------------------------------------------------- sqrt-free form


def _sqrt_ge(f, g):
    # sqrt(f) >= g
    return ((g < 0) & (f >= 0)) | ((g >= 0) & (f >= g * g))


def _sqrt_le(f, g):
    # sqrt(f) <= g
    return (f >= 0) & (g >= 0) & (f <= g * g)


def _v_max_poly(x, z, v, w):
    s = _sgn_pos(z)
    x, z, w = x * s, np.abs(z), w * s
    base, rad = _v_max_parts(x, z, w)
    # v <= base + sqrt(2 rad)/48  <=>  sqrt(2 rad) >= 48 (v - base)
    return _sqrt_ge(2.0 * rad, 48.0 * (v - base))


def _v_min_plus_poly(x, z, v, w):
    base, coef, rad = _v_min_plus_parts(x, z, w)
    # v >= base - coef sqrt(rad)  <=>  sqrt(coef^2 rad) >= base - v   (coef >= 0)
    return _sqrt_ge(coef * coef * rad, base - v)


def _v_min_minus_poly(x, z, v, w):
    base, rad = _v_min_minus_parts(x, z, w)
    # v >= (12 base + sqrt(rad)) / 12  <=>  sqrt(rad) <= 12 (v - base)
    return _sqrt_le(rad, 12.0 * (v - base))


def v_bounds_polynomial(x, z, v, w) -> np.ndarray:
    """v_min <= v <= v_max decided without square roots.

    Each radical inequality is replaced by the equivalent sign/square system, so
    the decision uses polynomial comparisons only (besides the piecewise dispatch).
    """
    x, z, v, w = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, z, v, w)))
    upper_ok = _v_max_poly(x, z, v, w)
    hi = w >= _w_mm(x, z)
    lo = ~hi & (w <= -_w_mm(-x, -z))
    s = _sgn_pos(z)
    lower_ok = _v_min_minus_poly(x * s, np.abs(z), v, w * s)
    lower_ok = np.where(lo, _v_min_plus_poly(x, z, v, w), lower_ok)
    lower_ok = np.where(hi, _v_min_plus_poly(-x, -z, v, -w), lower_ok)
    return upper_ok & lower_ok


def v_bounds_radical(x, z, v, w) -> np.ndarray:
    return (_v_min_v(x, z, w) <= v) & (v <= _v_max_v(x, z, w))


# ---------------------------------------------------------------- brute-force oracle


FAMILIES = ("type1_pp", "type1_pm", "type1_mp", "type1_mm", "type2_p", "type2_m")


@dataclass(frozen=True)
class SectionCloud:
    points: np.ndarray  # (n, 5)
    labels: np.ndarray  # (n,) indices into FAMILIES

    @property
    def label_names(self) -> np.ndarray:
        return np.asarray(FAMILIES)[self.labels]

    def __len__(self) -> int:
        return len(self.labels)


def simplex_lattice(n: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``parts`` summing to ``n``."""
    if parts == 1:
        return np.array([[n]], dtype=np.int64)
    rows = []
    for first in range(n + 1):
        rest = simplex_lattice(n - first, parts - 1)
        rows.append(np.hstack([np.full((len(rest), 1), first, dtype=np.int64), rest]))
    return np.vstack(rows)


def type2_lattice(n: int) -> np.ndarray:
    """Integer (Tb, T1, T2, Te) summing to n with 0 < Tb < T2, T1 > 0, 0 < Te <= cut bound."""
    out = []
    t1, t2 = np.meshgrid(np.arange(1, n + 1), np.arange(1, n + 1), indexing="ij")
    t1 = t1.ravel()
    t2 = t2.ravel()
    for tb in range(1, n):
        te = n - tb - t1 - t2
        ok = (tb < t2) & (te > 0) & (te * (t2 + tb) <= (t2 - tb) * t1)
        if np.any(ok):
            k = int(ok.sum())
            out.append(np.stack([np.full(k, tb), t1[ok], t2[ok], te[ok]], axis=1))
    if not out:
        return np.zeros((0, 4), dtype=np.int64)
    return np.vstack(out)


def _endpoints_chunked(u1, dur, jobs: int, chunk: int = 262_144):
    starts = range(0, len(u1), chunk)

    def run(s):
        return kernels.piecewise_endpoints(u1[s : s + chunk], 1.0, dur[s : s + chunk])

    if jobs > 1 and len(u1) > chunk:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    return np.vstack(parts) if parts else np.zeros((0, 5))


def brute_force_section(T: float = 1.0, n_grid: int = 200, n_values: int = 21, jobs: int = 1) -> SectionCloud:
    """Endpoints of every boundary control family on a duration lattice (u2 = 1).

    Durations are multiples of T/n_grid; the middle value of the first family
    runs over ``n_values`` evenly spaced points of [-1, 1].
    """
    if n_grid < 2:
        raise ValueError("n_grid must be at least 2")
    if not T > 0:
        raise ValueError("T must be positive")
    pts, labels = [], []
    simplex = simplex_lattice(n_grid, 3) / n_grid
    mids = np.linspace(-1.0, 1.0, max(2, n_values))
    lab = 0
    for a in (1.0, -1.0):
        for b in (1.0, -1.0):
            dur = np.tile(simplex, (len(mids), 1))
            mid = np.repeat(mids, len(simplex))
            u1 = np.stack([np.full_like(mid, a), mid, np.full_like(mid, b)], axis=1)
            pts.append(_endpoints_chunked(u1, dur, jobs))
            labels.append(np.full(len(dur), lab))
            lab += 1
    dur = type2_lattice(n_grid) / n_grid
    for s in (1.0, -1.0):
        u1 = np.tile(np.array([s, -s, s, -s]), (len(dur), 1))
        pts.append(_endpoints_chunked(u1, dur, jobs))
        labels.append(np.full(len(dur), lab))
        lab += 1
    points = np.vstack(pts)
    if T != 1.0:
        points = points * np.array([T, T, T**2, T**3, T**3])
    return SectionCloud(points, np.concatenate(labels).astype(np.int64))
