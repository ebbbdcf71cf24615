"""Compare the numba kernels against the plain numpy fallback.

Each path runs in its own interpreter because the toggle is read at import.
Compilation is excluded: every workload runs once untimed first.

    python benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _workloads():
    from cartan_sf import attainable, core, extremals, kernels, singular

    h0 = ((0.3, -0.7, 0.2, 1.0, -0.5), core.ORIGIN)
    rng = np.random.default_rng(0)
    u1 = rng.uniform(-1, 1, (200_000, 4))
    dur = rng.dirichlet(np.ones(4), 200_000)
    return {
        "feedback RK4 (T=10, dt=1e-4)": lambda: extremals.integrate(h0, "feedback", 10.0, 1e-4, stride=1000),
        "reduced RK4 (T=10, dt=1e-4)": lambda: singular.integrate_reduced(
            singular.NormalizedAdjoint(0.5, 1.0, 1.0, 0.3), 10.0, 1e-4, stride=1000),
        "piecewise endpoints (2e5 controls)": lambda: kernels.piecewise_endpoints(u1, 1.0, dur),
        "brute-force section (grid 100)": lambda: attainable.brute_force_section(n_grid=100),
    }


def worker(repeat: int) -> None:
    from cartan_sf import _jit

    out = {"numba": _jit.USING_NUMBA, "times": {}}
    for name, fn in _workloads().items():
        fn()  # warmup / compile
        best = np.inf
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        out["times"][name] = best
    print(json.dumps(out))


def run_mode(disable: bool, repeat: int) -> dict:
    env = dict(os.environ)
    env.pop("CARTAN_SF_DISABLE_NUMBA", None)
    if disable:
        env["CARTAN_SF_DISABLE_NUMBA"] = "1"
    p = subprocess.run([sys.executable, __file__, "--worker", "--repeat", str(repeat)],
                       env=env, capture_output=True, text=True, check=True)
    return json.loads(p.stdout)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.worker:
        worker(args.repeat)
        return
    jit = run_mode(False, args.repeat)
    plain = run_mode(True, args.repeat)
    if not jit["numba"]:
        print("numba not available: both columns use the numpy path")
    print(f"{'workload':<38} {'numba [s]':>10} {'numpy [s]':>10} {'speedup':>8}")
    for name, t_jit in jit["times"].items():
        t_np = plain["times"][name]
        print(f"{name:<38} {t_jit:>10.4f} {t_np:>10.4f} {t_np / t_jit:>7.1f}x")


if __name__ == "__main__":
    main()
