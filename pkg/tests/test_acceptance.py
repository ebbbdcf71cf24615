"""The ten acceptance criteria at their stated tolerances and time limits.

Each check runs once untimed on a small problem to trigger JIT compilation,
then once timed at full size.
"""

import math
import time

import numpy as np
import pytest

from cartan_sf import attainable, bangbang, core, extremals, singular, verification
from conftest import ACCEPTANCE_LINES


@pytest.fixture(scope="module", autouse=True)
def warm_kernels():
    h = (0.3, -0.7, 0.2, 1.0, -0.5)
    extremals.integrate((h, core.ORIGIN), "feedback", 0.1, 1e-2)
    extremals.integrate((np.zeros(5), core.ORIGIN), extremals.PiecewiseControl.constant((1.0, 1.0), 0.1), 0.1, 1e-2)
    singular.integrate_reduced(singular.NormalizedAdjoint(0.5, 1.0, 1.0, 0.3), 0.1, 1e-2)
    attainable.brute_force_section(n_grid=4)
    bangbang.exp_bangbang((0.5, 0.5, 1.0, 2.0, 1.0), T=0.1)


def _report(k, title, ok, elapsed, limit, detail):
    status = "PASS" if ok else "FAIL"
    line = f"criterion {k:2d} {status}  {title}: {detail} ({elapsed:.2f} s, limit {limit:g} s)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def test_c01_structure_constants():
    rng = np.random.default_rng(1)
    pts = rng.uniform(-2, 2, (20, 5))

    def run():
        return max(float(np.linalg.norm(core.bracket_check(i, j, q)))
                   for q in pts for i in range(1, 6) for j in range(i + 1, 6))

    worst, dt = _timed(run)
    _report(1, "bracket residuals", worst <= 1e-6 and dt < 1.0, dt, 1, f"max residual {worst:.2e} <= 1e-6")


def test_c02_casimirs():
    r, dt = _timed(lambda: verification.suite_casimir(np.random.default_rng(2), n=50, T=10.0))
    _report(2, "Casimir drift", r.residual <= 1e-9 and dt < 10.0, dt, 10,
            f"max relative drift {r.residual:.2e} <= 1e-9 over {r.n_checks // 3} extremals")


def test_c03_symmetry_group():
    r, dt = _timed(lambda: verification.suite_group_table(np.random.default_rng(3)))
    ok = r.passed and r.n_checks == 49 and r.notes["table_mismatches"] == 0 and dt < 1.0
    _report(3, "symmetry group", ok, dt, 1,
            f"{r.n_checks} compositions, {r.notes['table_mismatches']} mismatches, energy residual {r.residual:.1e}")


def test_c04_exact_propagator():
    r, dt = _timed(lambda: verification.suite_exp_oracle(np.random.default_rng(4)))
    strata = set(r.notes["strata"])
    cases = {s.split(",")[0] for s in strata}
    needed = {f"case 1, C_{k}" for k in (2, 4, 6, 8)}
    ok = r.residual <= 1e-6 and r.n_checks == 20 and len(cases) == 4 and needed <= strata and dt < 30.0
    _report(4, "exact propagator oracle", ok, dt, 30,
            f"max endpoint error {r.residual:.2e} <= 1e-6 on {r.n_checks} seeds, {len(strata)} strata")


def test_c05_corner_pin():
    r, dt = _timed(lambda: verification.suite_corner(np.random.default_rng(5)))
    ok = r.passed and r.residual <= 1e-9 and not r.notes["printed_point_inside"] and dt < 1.0
    _report(5, "corner endpoint", ok, dt, 1,
            f"error {r.residual:.1e}, bound slack {r.notes['max_bound_slack']:.1e}, printed point rejected")


def test_c06_boundary_vs_brute_force():
    r, dt = _timed(lambda: verification.suite_boundary(np.random.default_rng(6), n_grid=200))
    n = r.notes
    ok = r.passed and n["outside"] == 0 and abs(n["z_max_sampled"] - 0.25) <= 2e-3 \
        and abs(n["w_max_sampled"] - 1 / 32) <= 2e-3 and dt < 60.0
    _report(6, "boundary formulas", ok, dt, 60,
            f"z {n['z_max_sampled']:.5f} vs 0.25, w {n['w_max_sampled']:.5f} vs 1/32, "
            f"{n['n_points']} endpoints, {n['outside']} rejected")


def test_c07_cut_threshold():
    rng = np.random.default_rng(7)

    def run():
        z_res = sym_res = 0.0
        for _ in range(20):
            t2, t1 = rng.uniform(0.2, 1.0, 2)
            tb = rng.uniform(0.01, 0.99) * t2
            c = singular.extremal_singular_control(2, durations=(tb, t1, t2, singular.cut_bound(tb, t1, t2)))
            e = singular.endpoint(c)
            z_res = max(z_res, abs(float(e[2])))
            sym_res = max(sym_res, float(np.max(np.abs(singular.endpoint(singular.symmetric_counterpart(c)) - e))))
        return z_res, sym_res

    (z_res, sym_res), dt = _timed(run)
    _report(7, "cut threshold", z_res <= 1e-9 and sym_res <= 1e-9 and dt < 5.0, dt, 5,
            f"|z(T)| {z_res:.1e}, symmetric endpoint gap {sym_res:.1e}")


def test_c08_reduced_integral():
    r, dt = _timed(lambda: verification.suite_reduced_integral(np.random.default_rng(8)))
    ok = r.residual <= 1e-9 and r.n_checks == 160 and r.notes["crossings"] > 0 and dt < 10.0
    _report(8, "reduced first integral", ok, dt, 10,
            f"max drift {r.residual:.2e} on {r.n_checks} seeds, {r.notes['crossings']} crossings")


def test_c09_strata():
    def run():
        out = []
        for Ev in (-2.0, -1.5, -1.0, 0.0, 1.0, 1.5, 2.0, 3.0):
            h = np.array([0.0, 1.0, math.sqrt(2.0 * (Ev + 2.0)), 2.0, 1.0])
            out.append(bangbang.classify_stratum(h).stratum)
        return out

    got, dt = _timed(run)
    _report(9, "stratum classifier", got == list(range(1, 9)) and dt < 1.0, dt, 1, f"strata {got}")


def test_c10_saddle_split():
    seed = verification.C7_SEED
    bangbang.exp_bangbang(seed, T=0.5)

    def run():
        probe = bangbang.exp_bangbang(seed, T=4.0)
        t_split = min(b.lineage[0][0] for b in probe.branches if b.lineage)
        T = t_split + 0.25
        r = bangbang.exp_bangbang(seed, T=T)
        E0 = core.energy(np.asarray(seed))
        e_res = 0.0
        for b in r.branches:
            times = np.concatenate([[0.0, t_split, T], b.switch_times])
            e_res = max(e_res, float(np.max(np.abs(core.energy(b.state_at(times)[:, :5]) - E0))))
        traces = [bangbang.angular_trace(b, np.linspace(t_split, T, 20)) for b in r.branches]
        at_split = float(np.max(np.abs(traces[0][0] - traces[-1][0])))
        after = float(np.max(np.abs(traces[0][-1] - traces[-1][-1])))
        return len(r.branches), e_res, at_split, after

    (n, e_res, at_split, after), dt = _timed(run)
    ok = n == 2 and e_res <= 1e-12 and at_split <= 1e-12 and after > 1e-3 and dt < 1.0
    _report(10, "saddle splitting", ok, dt, 1,
            f"{n} branches, energy residual {e_res:.1e}, (theta, h3) gap {after:.3f} after the split")
