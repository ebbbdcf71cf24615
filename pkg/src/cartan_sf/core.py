"""Coordinate model of the Cartan group M = R^5 with coordinates (x, y, z, v, w).

The Lie algebra is spanned by five left-invariant fields with the only
nonzero brackets [X1, X2] = X3, [X1, X3] = X4, [X2, X3] = X5.  Group motion is
always obtained by integrating dq/dt = u1 X1(q) + u2 X2(q); no closed-form
product is used anywhere in the package.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class Point(NamedTuple):
    x: float
    y: float
    z: float
    v: float
    w: float


class Covector(NamedTuple):
    """Values h_i = <lambda, X_i> of a covector in the left trivialization."""

    h1: float
    h2: float
    h3: float
    h4: float
    h5: float


class CasimirTriple(NamedTuple):
    h4: float
    h5: float
    E: float


class Control(NamedTuple):
    u1: float
    u2: float

    @property
    def norm(self) -> float:
        return max(abs(self.u1), abs(self.u2))


ORIGIN = Point(0.0, 0.0, 0.0, 0.0, 0.0)

# nonzero entries of the bracket table: (i, j) -> k with [X_i, X_j] = X_k
BRACKETS = {(1, 2): 3, (1, 3): 4, (2, 3): 5}


def as_vec5(values, name: str = "value") -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (5,):
        raise ValueError(f"{name} must have 5 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite components: {arr}")
    return arr


def _check_index(i: int, upper: int, what: str) -> None:
    if not isinstance(i, (int, np.integer)) or not 1 <= i <= upper:
        raise IndexError(f"{what} index must be in 1..{upper}, got {i!r}")


def vector_field(i: int, q) -> np.ndarray:
    """Coordinate expression of X_i at q."""
    _check_index(i, 5, "vector field")
    x, y, _, _, _ = as_vec5(q, "q")
    half_r2 = 0.5 * (x * x + y * y)
    if i == 1:
        return np.array([1.0, 0.0, -0.5 * y, 0.0, -half_r2])
    if i == 2:
        return np.array([0.0, 1.0, 0.5 * x, half_r2, 0.0])
    if i == 3:
        return np.array([0.0, 0.0, 1.0, x, y])
    if i == 4:
        return np.array([0.0, 0.0, 0.0, 1.0, 0.0])
    return np.array([0.0, 0.0, 0.0, 0.0, 1.0])


def horizontal_velocity(q, u) -> np.ndarray:
    """u1 X1(q) + u2 X2(q)."""
    u1, u2 = u
    return u1 * vector_field(1, q) + u2 * vector_field(2, q)


def expected_bracket(i: int, j: int, q) -> np.ndarray:
    """The bracket [X_i, X_j] read off the structure table."""
    _check_index(i, 5, "vector field")
    _check_index(j, 5, "vector field")
    if (i, j) in BRACKETS:
        return vector_field(BRACKETS[(i, j)], q)
    if (j, i) in BRACKETS:
        return -vector_field(BRACKETS[(j, i)], q)
    return np.zeros(5)


def _jacobian_fd(i: int, q: np.ndarray, step: float) -> np.ndarray:
    jac = np.empty((5, 5))
    for k in range(5):
        e = np.zeros(5)
        e[k] = step
        jac[:, k] = (vector_field(i, q + e) - vector_field(i, q - e)) / (2.0 * step)
    return jac


def bracket_check(i: int, j: int, q, step: float = 1e-4) -> np.ndarray:
    """Residual of the finite-difference bracket [X_i, X_j](q) against the table.

    Uses [X, Y] = DY.X - DX.Y with central differences for both Jacobians.
    """
    _check_index(i, 5, "vector field")
    _check_index(j, 5, "vector field")
    if step <= 0:
        raise ValueError("step must be positive")
    q = as_vec5(q, "q")
    if i == j:
        return np.zeros(5)
    numeric = _jacobian_fd(j, q, step) @ vector_field(i, q) - _jacobian_fd(i, q, step) @ vector_field(j, q)
    return numeric - expected_bracket(i, j, q)


def casimirs(h) -> CasimirTriple:
    h1, h2, h3, h4, h5 = as_vec5(h, "h")
    return CasimirTriple(float(h4), float(h5), float(0.5 * h3 * h3 + h1 * h5 - h2 * h4))


def energy(h) -> float:
    """The Casimir E = h3^2/2 + h1 h5 - h2 h4 (vectorized over a trailing axis of 5)."""
    h = np.asarray(h, dtype=float)
    return 0.5 * h[..., 2] ** 2 + h[..., 0] * h[..., 4] - h[..., 1] * h[..., 3]


def dilation(q, T: float) -> Point:
    """(x, y, z, v, w) -> (T x, T y, T^2 z, T^3 v, T^3 w)."""
    if not T > 0:
        raise ValueError(f"dilation factor must be positive, got {T}")
    x, y, z, v, w = as_vec5(q, "q")
    return Point(T * x, T * y, T * T * z, T**3 * v, T**3 * w)


def state_symmetry(k: int, q) -> Point:
    """One of the three discrete state symmetries.

    k=1 reflects u1 -> -u1, k=2 reflects u2 -> -u2, k=3 swaps u1 and u2.
    """
    _check_index(k, 3, "symmetry")
    x, y, z, v, w = as_vec5(q, "q")
    if k == 1:
        return Point(-x, y, -z, v, -w)
    if k == 2:
        return Point(x, -y, -z, -v, w)
    return Point(y, x, -z, -w, -v)


def control_symmetry(k: int, u) -> Control:
    """Action of ``state_symmetry(k, .)`` on control values."""
    _check_index(k, 3, "symmetry")
    u1, u2 = u
    if k == 1:
        return Control(-u1, u2)
    if k == 2:
        return Control(u1, -u2)
    return Control(u2, u1)
