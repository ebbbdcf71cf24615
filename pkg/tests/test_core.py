import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cartan_sf.core import (
    ORIGIN,
    Control,
    bracket_check,
    casimirs,
    control_symmetry,
    dilation,
    energy,
    horizontal_velocity,
    state_symmetry,
    vector_field,
)

finite = st.floats(-10, 10, allow_nan=False)
points = st.tuples(finite, finite, finite, finite, finite)


def test_vector_field_examples():
    assert np.array_equal(vector_field(1, ORIGIN), [1, 0, 0, 0, 0])
    assert np.array_equal(vector_field(3, (2, -1, 0, 0, 0)), [0, 0, 1, 2, -1])
    assert np.allclose(vector_field(2, (1, 1, 0, 0, 0)), [0, 1, 0.5, 1, 0])


@pytest.mark.parametrize("i", [0, 6, -1])
def test_vector_field_index_range(i):
    with pytest.raises(IndexError):
        vector_field(i, ORIGIN)


def test_bracket_examples():
    assert np.linalg.norm(bracket_check(1, 2, ORIGIN, 1e-4)) <= 1e-6
    assert np.linalg.norm(bracket_check(1, 4, ORIGIN, 1e-4)) <= 1e-6
    assert np.array_equal(bracket_check(3, 3, (1, 2, 3, 4, 5), 0.3), np.zeros(5))


def test_brackets_all_pairs_random(rng):
    for q in rng.uniform(-3, 3, size=(10, 5)):
        for i in range(1, 6):
            for j in range(1, 6):
                assert np.linalg.norm(bracket_check(i, j, q)) <= 1e-6


def test_bracket_bad_step():
    with pytest.raises(ValueError):
        bracket_check(1, 2, ORIGIN, 0.0)


def test_casimir_examples():
    assert casimirs((1, 0, 0, 0, 0)).E == 0
    assert casimirs((0, 0, 2, 0, 0)).E == 2
    assert casimirs((1, 2, 3, 4, 5)) == (4, 5, 1.5)


def test_energy_vectorized():
    H = np.array([[1, 2, 3, 4, 5], [0, 0, 2, 0, 0]], dtype=float)
    assert np.array_equal(energy(H), [1.5, 2.0])


def test_dilation_examples():
    q = (0.3, -0.2, 0.1, 0.4, -0.5)
    assert dilation(q, 1) == q
    assert dilation((1, 1, 1, 1, 1), 2) == (2, 2, 4, 8, 8)
    assert dilation((1, 0, -1, 0, 3), 0.5) == (0.5, 0, -0.25, 0, 0.375)
    with pytest.raises(ValueError):
        dilation(q, 0)


def test_state_symmetry_examples():
    assert state_symmetry(1, (1, 2, 3, 4, 5)) == (-1, 2, -3, 4, -5)
    assert state_symmetry(3, (1, 2, 3, 4, 5)) == (2, 1, -3, -5, -4)
    assert tuple(state_symmetry(2, ORIGIN)) == tuple(ORIGIN)
    with pytest.raises(IndexError):
        state_symmetry(4, ORIGIN)


def test_control_norm():
    assert Control(0.5, -1.0).norm == 1.0


@given(points, st.integers(1, 3))
def test_state_symmetry_involution(q, k):
    assert state_symmetry(k, state_symmetry(k, q)) == tuple(float(v) for v in q)


@given(points, st.floats(0.1, 3), st.floats(0.1, 3))
def test_dilation_composes(q, a, b):
    assert np.allclose(dilation(dilation(q, a), b), dilation(q, a * b), rtol=1e-13, atol=1e-13)


@given(points, st.integers(1, 3), st.tuples(st.floats(-1, 1), st.floats(-1, 1)))
def test_symmetries_intertwine_dynamics(q, k, u):
    # the state map carries the velocity field of u to that of the mapped control
    eps = 1e-6
    lhs = (np.array(state_symmetry(k, np.add(q, eps * horizontal_velocity(q, u)))) - state_symmetry(k, q)) / eps
    rhs = horizontal_velocity(state_symmetry(k, q), control_symmetry(k, u))
    assert np.allclose(lhs, rhs, atol=1e-3 * (1 + np.max(np.abs(q))) ** 2)
