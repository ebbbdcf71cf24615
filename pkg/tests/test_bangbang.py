import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cartan_sf import bangbang as bb
from cartan_sf.core import energy
from cartan_sf.verification import C7_SEED

E = bb.SymmetryElement


def test_theta_examples():
    assert bb.theta_from_h(1, 0) == 0
    assert math.isclose(bb.theta_from_h(0.5, 0.5), math.pi / 4)
    assert math.isclose(bb.theta_from_h(-0.5, 0.5), 3 * math.pi / 4)
    with pytest.raises(ValueError):
        bb.theta_from_h(0.5, 0.2)


def test_potential_examples():
    assert bb.potential_U(0, 2, 1) == 1
    assert math.isclose(bb.potential_U(math.pi / 2, 2, 1), -2)
    assert math.isclose(bb.potential_U(math.pi / 4, 2, 1), -0.5)


def test_angular_rhs_examples():
    assert np.allclose(bb.angular_rhs(bb.AngularState(math.pi / 4, 1, 2, 1)), (1, 3))
    assert np.allclose(bb.angular_rhs(bb.AngularState(3 * math.pi / 4, 0, 1, 0)), (0, -1))
    assert np.allclose(bb.angular_rhs(bb.AngularState(math.pi / 4, 0, 0, 0)), (0, 0))
    with pytest.raises(ValueError):
        bb.angular_rhs(bb.AngularState(math.pi / 2, 1, 2, 1))


def test_apply_symmetry_examples():
    h = np.array([1, 2, 3, 4, 5.0])
    assert np.array_equal(bb.apply_symmetry(E.E1, h), [2, 1, -3, -5, -4])
    assert np.array_equal(bb.apply_symmetry(E.E7, h), [-1, -2, 3, -4, -5])
    assert np.array_equal(bb.apply_symmetry(E.ID, h), h)


def test_compose_examples():
    assert bb.compose(E.E1, E.E2) == E.E7
    assert bb.compose(E.E5, E.E6) == E.ID
    assert bb.compose(E.E3, E.E3) == E.ID


def test_group_table_as_maps(rng):
    H = rng.normal(size=(100, 5))
    for a in E:
        for b in E:
            lhs = bb.apply_symmetry(bb.compose(a, b), H)
            assert np.array_equal(lhs, bb.apply_symmetry(b, bb.apply_symmetry(a, H)))
        assert bb.compose(a, bb.inverse(a)) == E.ID
        assert np.max(np.abs(energy(bb.apply_symmetry(a, H)) - energy(H))) <= 1e-12


@pytest.mark.parametrize("h45", [(3, 1), (-3, -1), (1, 3), (-1, 3), (3, -1)])
def test_fundamental_domain(h45):
    h = np.array([0.25, 0.75, 0.5, *h45])
    img, e = bb.to_fundamental_domain(h)
    assert np.allclose(img[3:], (3, 1))
    assert np.array_equal(img, bb.apply_symmetry(e, h))
    if h45 == (3, 1):
        assert e == E.ID


def _on_level(h4, h5, Ev, theta=math.pi / 2 + 0.3):
    h1, h2 = bb.h_from_theta(theta)
    return (h1, h2, math.sqrt(2 * (Ev - bb.potential_U(theta, h4, h5))), h4, h5)


def test_classify_examples():
    assert str(bb.classify_stratum((0, 1, 0, 2, 1))) == "case 1, C_1"
    lab = bb.classify_stratum(_on_level(2, 1, 0.0))
    assert (lab.case, lab.stratum) == (1, 4)
    assert bb.classify_stratum((0.5, 0.5, 1.0, 0, 0)) == bb.StratumLabel(4, 2)
    with pytest.raises(ValueError):
        bb.classify_stratum((1, 1, 0, 0, 0))


def test_exp_constant_branch():
    r = bb.exp_bangbang((0.5, 0.5, 0, 0, 0), T=1.0)
    assert len(r.branches) == 1 and bb.switching_times(r, 0) == []
    assert np.allclose(r.branches[0].endpoint[5:], (1, 1, 0, 1 / 3, -1 / 3), atol=1e-15)


def test_exp_one_switch():
    r = bb.exp_bangbang((0.5, 0.5, -1, 0, 0), T=1.0)
    assert len(r.branches) == 1
    assert np.allclose(bb.switching_times(r, 0), [0.5])
    with pytest.raises(IndexError):
        bb.switching_times(r, 1)


def test_exp_rejects_bad_normalization():
    with pytest.raises(ValueError):
        bb.exp_bangbang((0.2, 0.2, 1, 0, 0))


def test_saddle_split():
    r = bb.exp_bangbang(C7_SEED, T=1.6)
    assert len(r.branches) == 2
    a, b = r.branches
    t_split = a.lineage[0][0]
    assert math.isclose(t_split, 1.3928870119728716, rel_tol=1e-9)
    assert np.allclose(a.state_at([t_split]), b.state_at([t_split]))
    assert a.diverged_from(b) == pytest.approx(t_split)
    assert "split" in a.flags


def test_branch_overflow():
    with pytest.raises(bb.BranchOverflowError):
        bb.exp_bangbang(C7_SEED, T=6.0, max_branches=2)
    assert len(bb.exp_bangbang(C7_SEED, T=6.0).branches) == 4


def test_degenerate_start():
    with pytest.raises(bb.DegenerateStateError):
        bb.exp_bangbang((1, 0, 0, 0, 0))


def test_c4_switches_are_periodic():
    r = bb.exp_bangbang(_on_level(2, 1, 0.0, math.pi / 2 + 0.3), T=30.0)
    st_ = np.asarray(bb.switching_times(r, 0))
    gaps = np.diff(st_)
    assert np.allclose(gaps[4:], gaps[:-4], atol=1e-9)
    period = gaps[:4].sum()
    curve = bb.level_curve(2, 1, 0.0)[0]
    quad = 0.0
    for p, q in zip(curve[:-1], curve[1:]):
        tm = 0.5 * (p[0] + q[0])
        if abs(math.sin(2 * tm)) > 1e-12:
            rate = bb.angular_rhs(bb.AngularState(tm, 0.5 * (p[1] + q[1]), 2, 1))[1]
            quad += abs(q[1] - p[1]) / abs(rate)
    assert quad == pytest.approx(period, rel=1e-9)


def test_energy_exact_at_switches(rng):
    for h4, h5, s in [(2, 1, 2), (2, 1, 6), (1, 0, 4), (1, 1, 2), (0, 0, 2)]:
        h = bb.sample_covector(h4, h5, s, rng)
        for b in bb.exp_bangbang(h, T=8.0).branches:
            times = np.concatenate([[0.0], b.switch_times])
            assert np.max(np.abs(energy(b.state_at(times)[:, :5]) - energy(h))) <= 1e-12


def test_equivariance(rng):
    times = np.linspace(0, 3, 100)
    for _ in range(3):
        h = rng.normal(size=5)
        h[:2] /= np.abs(h[:2]).sum()
        base = bb.exp_bangbang(h, T=3.0).branches[0]
        for e in list(E)[1:]:
            img = bb.exp_bangbang(bb.apply_symmetry(e, h), T=3.0).branches[0]
            ref = bb.apply_symmetry(e, base.state_at(times)[:, :5])
            assert np.max(np.abs(img.state_at(times)[:, :5] - ref)) <= 1e-9
            th = np.array([bb.theta_from_h(*row[:2]) for row in ref])
            tr = bb.angular_trace(img, times)
            dth = np.angle(np.exp(1j * (tr[:, 0] - th)))
            assert np.max(np.abs(dth)) <= 1e-9 and np.max(np.abs(tr[:, 1] - ref[:, 2])) <= 1e-9


@given(st.floats(0, 2 * math.pi, exclude_max=True))
def test_theta_round_trip(theta):
    h1, h2 = bb.h_from_theta(theta)
    assert abs(abs(h1) + abs(h2) - 1) <= 1e-15
    if abs(math.sin(2 * theta)) > 1e-6:
        back = bb.theta_from_h(h1, h2)
        assert abs(math.remainder(back - theta, 2 * math.pi)) <= 1e-12


def test_level_curve_examples():
    (pt,) = bb.level_curve(2, 1, -2)
    assert np.allclose(pt, [[math.pi / 2, 0]])
    lines = bb.level_curve(0, 0, 0.5)
    assert len(lines) == 2 and sorted(float(c[0, 1]) for c in lines) == [-1, 1]
    assert all(np.ptp(c[:, 1]) == 0 for c in lines)
    (oval,) = bb.level_curve(2, 1, 0)
    assert np.allclose(oval[0], oval[-1])
    top = oval[np.argmax(oval[:, 1])]
    assert np.allclose(top, (math.pi / 2, 2))
    assert np.isclose(oval[:, 1].min(), -2)
    with pytest.raises(ValueError):
        bb.level_curve(2, 1, -3)


def test_cut_search_examples():
    assert str(bb.cut_search((0.5, 0.5, 1, 0, 0), 0.01, 20)) == "none found"
    assert not bb.cut_search((0.5, 0.5, 1, 0, 0), 3.0, 100).found
    res = bb.cut_search(C7_SEED, 1.6, 40)
    assert any(ev.kind == "split" and ev.t == pytest.approx(1.3928870119728716) for ev in res.events)
