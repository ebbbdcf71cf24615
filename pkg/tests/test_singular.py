import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cartan_sf import attainable
from cartan_sf.core import dilation, state_symmetry
from cartan_sf.extremals import PiecewiseControl
from cartan_sf.singular import (
    ConvergenceError,
    InadmissibleControlError,
    NormalizedAdjoint,
    NotAttainableError,
    NotSingularError,
    classify_adjoint_region,
    cut_bound,
    endpoint,
    extremal_singular_control,
    integrate_reduced,
    is_geometrically_optimal_candidate,
    reach_singular,
    reduced_first_integral,
    reduced_level_curve,
    reduced_rhs,
    singular_control,
    symmetric_counterpart,
)


def test_singular_control_examples():
    a = singular_control("h1-singular", (0, 1, 0, 0, 0))
    assert a.case == "a" and a.u_singular is None and a.control(0.3) == (0.3, 1)
    b = singular_control("h1-singular", (0, 1, 0, 2, 1))
    assert b.case == "b" and b.control() == (-0.5, 1)
    with pytest.raises(InadmissibleControlError):
        singular_control("h1-singular", (0, 1, 0, 1, 2))


def test_singular_control_h2_axis():
    s = singular_control("h2-singular", (-1, 0, 0, 1, 2))
    assert s.control() == (-1, 0.5)


@pytest.mark.parametrize("h", [(0.1, 1, 0, 0, 0), (0, 0, 0, 0, 0), (0, 1, 0.5, 0, 0), (0, 1, 0, 0, 1)])
def test_singular_control_premises(h):
    with pytest.raises(NotSingularError):
        singular_control("h1-singular", h)


def test_reduced_rhs_examples():
    assert reduced_rhs(NormalizedAdjoint(1, 0, -1, 1)) == (0, 0)
    assert reduced_rhs(NormalizedAdjoint(-2, 1, 1, 0)) == (-1, -1)
    assert reduced_rhs(NormalizedAdjoint(0.4, 0, 1, 1.5)) == (0, 2.5)
    with pytest.raises(ValueError):
        reduced_rhs(NormalizedAdjoint(0.0, 1, 1, 0))


def test_first_integral_examples():
    assert reduced_first_integral((0, 0, 1, 0.3)) == 0
    assert reduced_first_integral((0, 0, -1, 7)) == 0
    assert reduced_first_integral((1, 1, -1, 0.5)) == 0
    assert reduced_first_integral((-1, 0, 1, 1)) == 0


def test_region_examples():
    assert classify_adjoint_region(NormalizedAdjoint(1, 0, -1, 1.5)).name == "C1inf-"
    assert classify_adjoint_region(NormalizedAdjoint(1, 0, 1, 1)).name == "C1+"
    assert classify_adjoint_region(NormalizedAdjoint(1, 0, 1, 0)).name == "C0+"
    assert classify_adjoint_region(NormalizedAdjoint(1, 0, -1, 0.5)).name == "C01-"
    with pytest.raises(ValueError):
        classify_adjoint_region(NormalizedAdjoint(1, 0, 1, -0.5))


def test_normalization_and_reflection():
    n = NormalizedAdjoint.from_covector((0.5, 0.5, 1.0, -2.0, -1.0))
    assert n == (0.25, 0.5, -1.0, -0.5)
    assert n.canonical() == (-0.25, -0.5, -1.0, 0.5)


def test_first_integral_across_crossings():
    tr = integrate_reduced(NormalizedAdjoint(0.5, 1.0, 1.0, 0.3), 10.0, 1e-4, stride=100)
    assert tr.crossings > 0
    F = tr.first_integral()
    assert np.max(np.abs(F - F[0])) <= 1e-9


def test_reduced_level_curve_lies_on_level():
    for c in (-0.5, 0.5, 1.0):
        curves = reduced_level_curve(-1.0, 1.5, c)
        assert curves
        for poly in curves:
            F = [reduced_first_integral((a, b, -1.0, 1.5)) for a, b in poly]
            assert np.max(np.abs(np.asarray(F) - c)) <= 1e-12
            order = np.argsort(np.abs(poly[:, 1]))
            assert np.all(np.diff(poly[order, 0]) <= 1e-12)


def test_type1_example():
    c = extremal_singular_control(1, (1, 0.5, -1), (0.2, 0.5, 0.3))
    assert np.isclose(c.total, 1.0) and c.n_switches == 2
    assert np.array_equal(c.values, [[1, 1], [0.5, 1], [-1, 1]])


def test_type2_examples():
    c = extremal_singular_control(2, durations=(1, 3, 2, 1))
    assert c.n_switches == 3 and c.values[0, 0] == 1
    with pytest.raises(ValueError):
        extremal_singular_control(2, durations=(3, 1, 2, 1))
    with pytest.raises(ValueError):
        extremal_singular_control(2, durations=(1, 3, 2, 4))
    with pytest.raises(ValueError):
        extremal_singular_control(2, durations=(1, 3, 2, 2.9, 2, 1))
    with pytest.raises(ValueError):
        extremal_singular_control(1, (1, 2, -1), (0.2, 0.5, 0.3))


def test_cut_bound_examples():
    assert cut_bound(1, 3, 2) == 1
    assert cut_bound(2, 5, 2) == 0
    assert cut_bound(1, 6, 3) == 3
    with pytest.raises(ValueError):
        cut_bound(3, 1, 2)


def _alt(durations):
    return extremal_singular_control(2, durations=durations)


def test_geometric_optimality_examples():
    assert is_geometrically_optimal_candidate(_alt((1, 3, 2, 0.5)))
    assert not is_geometrically_optimal_candidate(_alt((1, 3, 2, 1.5)))
    assert not is_geometrically_optimal_candidate(_alt((2, 3, 2, 0.7)))
    with pytest.raises(ValueError):
        is_geometrically_optimal_candidate(_alt((1, 3, 2, 3, 1)))


@given(st.floats(0.2, 1), st.floats(0.2, 1), st.floats(0.01, 0.99), st.sampled_from([1.0, -1.0]))
def test_threshold_endpoint(t1, t2, frac, sign):
    tb = frac * t2
    c = extremal_singular_control(2, durations=(tb, t1, t2, cut_bound(tb, t1, t2)), sign=sign)
    e = endpoint(c)
    assert abs(e[2]) <= 1e-9
    assert np.max(np.abs(endpoint(symmetric_counterpart(c)) - e)) <= 1e-9


durations = st.lists(st.floats(0.01, 1), min_size=3, max_size=3)


@given(st.sampled_from([1.0, -1.0]), st.floats(-1, 1), st.sampled_from([1.0, -1.0]), durations)
def test_type1_endpoints_are_attainable(a, mid, b, d):
    c = extremal_singular_control(1, (a, mid, b), d)
    assert attainable.contains(attainable.SectionQuery(tuple(endpoint(c)), c.total), tol=1e-8)


@given(st.floats(0.05, 1), st.floats(0.05, 1), st.floats(0.05, 1), st.integers(0, 3), st.floats(0, 1),
       st.sampled_from([1.0, -1.0]))
def test_type2_endpoints_are_attainable(t1, t2, fb, extra, fe, sign):
    middle = [(t1, t2)[k % 2] for k in range(2 + extra)]
    bound = t2 if len(middle) % 2 == 1 else t1
    c = extremal_singular_control(2, durations=[fb * t2, *middle, fe * bound], sign=sign)
    assert attainable.contains(attainable.SectionQuery(tuple(endpoint(c)), c.total), tol=1e-8)


def test_reach_corner():
    c = reach_singular((1, 1, 0, 1 / 3, -1 / 3), 1.0)
    assert c.n_switches == 0 and np.array_equal(c.values, [[1, 1]])


def test_reach_one_switch():
    ref = PiecewiseControl((((1, 1), 0.5), ((-1, 1), 0.5)))
    e = endpoint(ref)
    assert np.allclose(e[:3], (0, 1, 0.25))
    c = reach_singular(e, 1.0)
    assert c.n_switches == 1
    assert np.allclose(c.values, ref.values) and np.allclose(c.durations, ref.durations, atol=1e-9)


def test_reach_interior_uses_prefix():
    target = (0.0, 1.0, 0.0, 0.17, 0.0)
    c = reach_singular(target, 1.0)
    assert c.values[0, 0] == 0.0 and c.n_switches <= 4
    assert np.max(np.abs(endpoint(c) - target)) <= 1e-9


def test_reach_outside():
    with pytest.raises(NotAttainableError):
        reach_singular((0, 1, 0.3, 0, 0), 1.0)


def test_convergence_error_carries_residual():
    err = ConvergenceError("x", 0.5)
    assert err.residual == 0.5 and "5.000e-01" in str(err)


@given(st.integers(0, 10_000))
def test_reach_random_targets(seed):
    rng = np.random.default_rng(seed)
    T = rng.uniform(0.5, 2.0)
    d = rng.dirichlet([1, 1, 1, 1])
    ref = PiecewiseControl.from_pieces(rng.uniform(-1, 1, 4), d, u2=1.0)
    q = np.asarray(dilation(endpoint(ref), T))
    for k in rng.permutation(3)[: rng.integers(0, 4)] + 1:
        q = np.asarray(state_symmetry(int(k), q))
    c = reach_singular(q, T)
    scale = np.array([T, T, T**2, T**3, T**3])
    assert np.isclose(c.total, T) and c.n_switches <= 4
    assert np.max(np.abs((endpoint(c) - q) / scale)) <= 1e-9
