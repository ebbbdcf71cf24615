"""Abnormal trajectories: straight lines in (x, y) with z = 0."""

from __future__ import annotations

import numpy as np

from .core import Control, Point, as_vec5

BOUNDARY_TOL = 1e-12


def abnormal_point(u, t: float) -> Point:
    """Endpoint at time t of the abnormal trajectory with constant boundary control u."""
    u = Control(float(u[0]), float(u[1]))
    if abs(u.norm - 1.0) > BOUNDARY_TOL:
        raise ValueError(f"abnormal controls lie on the boundary of the square, got {tuple(u)}")
    if not t >= 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    r2 = u.u1 * u.u1 + u.u2 * u.u2
    c = r2 * t**3 / 6.0
    return Point(u.u1 * t, u.u2 * t, 0.0, u.u2 * c, -u.u1 * c)


def abnormal_residual(q) -> tuple:
    """(z, v - y r^2/6, w + x r^2/6); all three vanish exactly on the abnormal set."""
    x, y, z, v, w = as_vec5(q, "q")
    r2 = x * x + y * y
    return (float(z), float(v - y * r2 / 6.0), float(w + x * r2 / 6.0))


def on_abnormal_set(q, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(abnormal_residual(q))) <= tol)
