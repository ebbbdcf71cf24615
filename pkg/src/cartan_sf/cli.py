"""Command-line entry point: ``cartan-sf {trajectory,phase,attainable,verify}``.

Vector arguments are comma separated; write ``--h0=-1,0,0,0,0`` when the first
entry is negative.  Output goes to ``--out``, else to ``$CARTAN_SF_OUTDIR`` with
a command-specific file name, else to stdout.  Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__, abnormal, attainable, bangbang, core, extremals, singular, verification
from .io import open_output, resolve_output, write_csv, write_json

log = logging.getLogger("cartan_sf")

TRAJECTORY_COLUMNS = ("t", "x", "y", "z", "v", "w", "h1", "h2", "h3", "h4", "h5", "u1", "u2", "branch", "H", "E")
LEVEL_COLUMNS = ("theta", "h3", "E", "stratum", "critical", "curve")
REDUCED_COLUMNS = ("hf1", "hf3", "c", "region", "curve")
SECTION_COLUMNS = ("x1", "y1", "z1", "v1", "w1", "label")


class CliError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    out: Optional[str] = None
    fmt: str = "csv"

    def validate(self) -> None:
        for key in ("T", "dt", "tol", "hf3_max"):
            val = self.params.get(key)
            if val is not None and not val > 0:
                raise CliError(f"--{key.replace('_', '-')} must be positive, got {val}")
        for key in ("samples", "grid", "values", "jobs", "stride", "max_branches", "max_points"):
            val = self.params.get(key)
            if val is not None and val < 1:
                raise CliError(f"--{key.replace('_', '-')} must be at least 1, got {val}")


def _vec(text: str, n: Optional[int] = None, what: str = "vector") -> tuple:
    try:
        vals = tuple(float(s) for s in text.split(","))
    except ValueError as exc:
        raise CliError(f"cannot parse {what} {text!r}: {exc}") from None
    if n is not None and len(vals) != n:
        raise CliError(f"{what} needs {n} comma-separated numbers, got {len(vals)}")
    if not all(math.isfinite(v) for v in vals):
        raise CliError(f"{what} has non-finite entries")
    return vals


# ---------------------------------------------------------------- trajectory


def _row(t, q, h, u, branch):
    h = np.asarray(h, dtype=float)
    H = abs(h[0]) + abs(h[1])
    E = float(core.energy(h))
    return [t, *q, *h, *u, branch, H, E]


def _bang_rows(cfg: RunConfig) -> tuple:
    h0 = _vec(cfg.params["h0"], 5, "--h0")
    q0 = _vec(cfg.params["q0"], 5, "--q0")
    T = cfg.params["T"]
    r = bangbang.exp_bangbang(h0, q0, T, max_branches=cfg.params["max_branches"])
    grid = np.linspace(0.0, T, cfg.params["samples"] + 1)
    rows, meta = [], []
    for k, b in enumerate(r.branches):
        times = np.union1d(grid, np.asarray(b.switch_times, dtype=float))
        states = b.state_at(times)
        starts = np.array([s.t0 for s in b.segments])
        idx = np.clip(np.searchsorted(starts, times, side="right") - 1, 0, len(b.segments) - 1)
        for t, s, i in zip(times, states, idx):
            rows.append(_row(t, s[5:], s[:5], b.segments[i].control, k))
        meta.append({"branch": k, "switch_times": list(b.switch_times), "flags": list(b.flags),
                     "lineage": [list(x) for x in b.lineage]})
        for t in b.switch_times:
            log.info("branch %d: switch at t = %.17g", k, t)
        if b.flags:
            log.info("branch %d flags: %s", k, ", ".join(b.flags))
    log.info("%d branch(es); stratum %s", len(r.branches), r.stratum)
    return rows, meta


def _feedback_rows(cfg: RunConfig) -> tuple:
    h0 = _vec(cfg.params["h0"], 5, "--h0")
    q0 = _vec(cfg.params["q0"], 5, "--q0")
    tr = extremals.integrate((h0, q0), "feedback", cfg.params["T"], cfg.params["dt"], stride=cfg.params["stride"])
    rows = [_row(t, q, h, u, 0) for t, q, h, u in zip(tr.t, tr.q, tr.h, tr.u)]
    for t in tr.switch_times:
        log.info("branch 0: switch at t = %.17g", t)
    return rows, [{"branch": 0, "switch_times": list(tr.switch_times), "flags": [], "lineage": []}]


def _abnormal_rows(cfg: RunConfig) -> tuple:
    if cfg.params.get("u") is None:
        raise CliError("--mode abnormal needs --u")
    u = _vec(cfg.params["u"], 2, "--u")
    try:
        pts = [(t, abnormal.abnormal_point(u, t)) for t in np.linspace(0.0, cfg.params["T"], cfg.params["samples"] + 1)]
    except ValueError as exc:
        raise CliError(str(exc)) from None
    nan5 = [math.nan] * 5
    rows = [[t, *q, *nan5, *u, 0, math.nan, math.nan] for t, q in pts]
    return rows, [{"branch": 0, "switch_times": [], "flags": ["abnormal: covector columns not computed"], "lineage": []}]


def _singular_rows(cfg: RunConfig) -> tuple:
    if cfg.params.get("target") is None:
        raise CliError("--mode singular needs --target")
    target = _vec(cfg.params["target"], 5, "--target")
    try:
        c = singular.reach_singular(target, cfg.params["T"])
    except (singular.NotAttainableError, singular.ConvergenceError) as exc:
        raise CliError(str(exc)) from None
    tr = extremals.integrate((np.zeros(5), core.ORIGIN), c, c.total, cfg.params["dt"], stride=cfg.params["stride"])
    nan5 = [math.nan] * 5
    rows = [[t, *q, *nan5, *u, 0, math.nan, math.nan] for t, q, u in zip(tr.t, tr.q, tr.u)]
    for t in c.switch_times():
        log.info("branch 0: switch at t = %.17g", t)
    pieces = [{"u": list(u), "duration": d} for u, d in c.segments]
    return rows, [{"branch": 0, "switch_times": c.switch_times(), "flags": [], "lineage": [], "control": pieces}]


def cmd_trajectory(cfg: RunConfig) -> int:
    mode = cfg.params["mode"]
    if mode in ("bang", "feedback") and cfg.params.get("h0") is None:
        raise CliError(f"--mode {mode} needs --h0")
    build = {"bang": _bang_rows, "feedback": _feedback_rows, "abnormal": _abnormal_rows, "singular": _singular_rows}
    try:
        rows, meta = build[mode](cfg)
    except (ValueError, RuntimeError) as exc:
        raise CliError(str(exc)) from None
    for r in rows:
        if max(abs(r[11]), abs(r[12])) > 1 + 1e-12:
            raise CliError(f"logged control {r[11:13]} leaves the unit square")  # pragma: no cover
    path = resolve_output(cfg.out, f"trajectory.{cfg.fmt}")
    with open_output(path) as fh:
        if cfg.fmt == "csv":
            write_csv(fh, TRAJECTORY_COLUMNS, rows)
        else:
            write_json(fh, {"command": "trajectory", "params": cfg.params, "columns": list(TRAJECTORY_COLUMNS),
                            "rows": rows, "branches": meta})
    return 0


# ---------------------------------------------------------------- phase portraits


def _default_energies(h4: float, h5: float) -> list:
    crit = sorted(set(bangbang.critical_values(h4, h5)))
    out = []
    for a, b in zip(crit, crit[1:] + [crit[-1] + 2.0]):
        out += [a, 0.5 * (a + b)]
    return out


def _bang_levels(cfg: RunConfig) -> tuple:
    h4, h5 = cfg.params["h4"], cfg.params["h5"]
    img, _ = bangbang.to_fundamental_domain((0.0, 0.0, 0.0, h4, h5))
    a4, a5 = float(img[3]), float(img[4])
    crit = bangbang.critical_values(a4, a5)
    energies = _vec(cfg.params["E"], what="--E") if cfg.params.get("E") else _default_energies(a4, a5)
    rows, curves, k = [], [], 0
    for E in energies:
        try:
            label = bangbang.stratum_for_energy(a4, a5, E)
            polylines = bangbang.level_curve(h4, h5, E, cfg.params["samples"])
        except ValueError as exc:
            log.warning("E = %.17g: %s", E, exc)
            curves.append({"E": E, "empty": True, "stratum": None})
            continue
        name = f"case{label.case}:C{label.stratum}"
        critical = any(bangbang._same(E, c, 1e-12) for c in crit)
        for poly in polylines:
            rows += [[th, y, E, name, critical, k] for th, y in poly]
            curves.append({"E": E, "empty": False, "stratum": name, "critical": critical, "curve": k,
                           "points": len(poly)})
            k += 1
    annotations = {"case": bangbang.phase_case(a4, a5), "critical_values": list(crit), "h4": h4, "h5": h5}
    log.info("case %d, critical values %s", annotations["case"], ", ".join(f"{c:g}" for c in crit))
    return LEVEL_COLUMNS, rows, curves, annotations


def _singular_levels(cfg: RunConfig) -> tuple:
    hf4, hf5 = cfg.params["hf4"], cfg.params["hf5"]
    if hf4 not in (-1.0, 1.0):
        raise CliError("--hf4 must be 1 or -1")
    n = singular.NormalizedAdjoint(1.0, 0.0, hf4, hf5)
    region = singular.classify_adjoint_region(n.canonical()).name
    levels = _vec(cfg.params["levels"], what="--levels") if cfg.params.get("levels") else [-1.0, -0.5, 0.0, 0.5, 1.0, 2.0]
    rows, curves, k = [], [], 0
    for c in levels:
        polylines = singular.reduced_level_curve(hf4, hf5, c, cfg.params["hf3_max"], cfg.params["samples"])
        if not polylines:
            log.warning("level c = %.17g is empty in the sampled window", c)
            curves.append({"c": c, "empty": True})
        for poly in polylines:
            rows += [[a, b, c, region, k] for a, b in poly]
            curves.append({"c": c, "empty": False, "curve": k, "points": len(poly)})
            k += 1
    return REDUCED_COLUMNS, rows, curves, {"hf4": hf4, "hf5": hf5, "region": region}


def cmd_phase_portrait(cfg: RunConfig) -> int:
    case = cfg.params["case"]
    if case == "bang":
        if cfg.params.get("h4") is None or cfg.params.get("h5") is None:
            raise CliError("--case bang needs --h4 and --h5")
        header, rows, curves, notes = _bang_levels(cfg)
    else:
        if cfg.params.get("hf4") is None or cfg.params.get("hf5") is None:
            raise CliError("--case singular needs --hf4 and --hf5")
        header, rows, curves, notes = _singular_levels(cfg)
    path = resolve_output(cfg.out, f"phase.{cfg.fmt}")
    with open_output(path) as fh:
        if cfg.fmt == "csv":
            write_csv(fh, header, rows)
        else:
            write_json(fh, {"command": "phase", "params": cfg.params, "columns": list(header), "rows": rows,
                            "curves": curves, "annotations": notes})
    return 0


# ---------------------------------------------------------------- attainable set


def _section_rows(cfg: RunConfig) -> list:
    T = cfg.params["T"]
    cloud = attainable.brute_force_section(T=T, n_grid=cfg.params["grid"], n_values=cfg.params["values"],
                                           jobs=cfg.params["jobs"])
    P, labels = cloud.points, cloud.labels
    keep = np.arange(len(P))
    if len(P) > cfg.params["max_points"]:
        rng = np.random.default_rng(cfg.params["seed"])
        keep = np.sort(rng.choice(len(P), cfg.params["max_points"], replace=False))
    names = cloud.label_names
    rows = [[*P[i], names[labels[i]]] for i in keep]
    if cfg.params["section"] == "xz":
        for x in np.linspace(-1.0, 1.0, cfg.params["grid"] + 1):
            zm = attainable.z_max(float(x)) * T * T
            rows.append([x * T, T, zm, math.nan, math.nan, "bound:z_max"])
            rows.append([x * T, T, -zm, math.nan, math.nan, "bound:-z_max"])
    log.info("%d sampled endpoints, %d written", len(P), len(keep))
    return rows


def cmd_attainable(cfg: RunConfig) -> int:
    if cfg.params.get("point") is None and cfg.params.get("section") is None:
        raise CliError("give --point or --section")
    path = resolve_output(cfg.out, f"attainable.{cfg.fmt}")
    if cfg.params.get("section") is not None:
        rows = _section_rows(cfg)
        with open_output(path) as fh:
            if cfg.fmt == "csv":
                write_csv(fh, SECTION_COLUMNS, rows)
            else:
                write_json(fh, {"command": "attainable", "params": cfg.params, "columns": list(SECTION_COLUMNS),
                                "rows": rows})
        return 0
    point = _vec(cfg.params["point"], 5, "--point")
    try:
        m = attainable.membership(attainable.SectionQuery(point, cfg.params["T"]), tol=cfg.params["tol"])
    except ValueError as exc:
        raise CliError(str(exc)) from None
    verdict = "inside" if m.inside else "outside"
    log.info("%s%s", verdict, "" if m.inside else f" (binding constraint: {m.binding})")
    report = {"point": list(point), "T": cfg.params["T"], "inside": m.inside, "binding": m.binding,
              "slacks": dict(m.slacks), "chart": m.chart._asdict()}
    with open_output(path) as fh:
        if cfg.fmt == "csv":
            keys = sorted(m.slacks)
            write_csv(fh, ["inside", "binding", *keys], [[m.inside, m.binding, *(m.slacks[k] for k in keys)]])
        else:
            write_json(fh, report)
    return 0


# ---------------------------------------------------------------- verification


def cmd_verify(cfg: RunConfig) -> int:
    try:
        results = verification.run_suites(cfg.params.get("suite"), seed=cfg.params["seed"], jobs=cfg.params["jobs"])
    except KeyError as exc:
        raise CliError(str(exc.args[0])) from None
    for r in results:
        log.info("%-17s %s  residual %.3g (threshold %.3g, %d checks, %.2f s)", r.name,
                 "PASS" if r.passed else "FAIL", r.residual, r.threshold, r.n_checks, r.elapsed)
    suites = []
    for r in results:
        d = r.as_dict()
        if not cfg.params.get("timings"):
            d.pop("elapsed")
        suites.append(d)
    ok = all(r.passed for r in results)
    path = resolve_output(cfg.out, f"verify.{cfg.fmt}")
    with open_output(path) as fh:
        if cfg.fmt == "csv":
            write_csv(fh, ["suite", "passed", "residual", "threshold", "n_checks"],
                      [[r.name, r.passed, r.residual, r.threshold, r.n_checks] for r in results])
        else:
            write_json(fh, {"seed": cfg.params["seed"], "passed": ok, "suites": suites})
    return 0 if ok else 1


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cartan-sf", description="Time-optimal l-infinity control on the Cartan group.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-q", "--quiet", action="store_true", help="only warnings on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt="csv"):
        sp.add_argument("--out", help="output file (default: $CARTAN_SF_OUTDIR/<command>.<fmt> or stdout)")
        sp.add_argument("--format", dest="fmt", choices=("csv", "json"), default=fmt)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--jobs", type=int, default=1)

    t = sub.add_parser("trajectory", help="integrate an extremal or a closed-form trajectory")
    t.add_argument("--mode", choices=("bang", "feedback", "abnormal", "singular"), default="bang")
    t.add_argument("--h0", help="initial covector h1,...,h5")
    t.add_argument("--q0", default="0,0,0,0,0", help="initial point x,y,z,v,w")
    t.add_argument("--u", help="boundary control u1,u2 (abnormal mode)")
    t.add_argument("--target", help="endpoint to reach with a singular control (singular mode)")
    t.add_argument("--T", type=float, default=1.0)
    t.add_argument("--dt", type=float, default=1e-4, help="RK4 step (feedback and singular modes)")
    t.add_argument("--stride", type=int, default=100, help="keep every n-th RK4 step")
    t.add_argument("--samples", type=int, default=200, help="uniform samples (bang and abnormal modes)")
    t.add_argument("--max-branches", type=int, default=bangbang.DEFAULT_MAX_BRANCHES)
    common(t)

    ph = sub.add_parser("phase", help="level curves of the reduced or angular systems")
    ph.add_argument("--case", choices=("bang", "singular"), required=True)
    ph.add_argument("--h4", type=float)
    ph.add_argument("--h5", type=float)
    ph.add_argument("--E", help="comma-separated energies (default: critical values and midpoints)")
    ph.add_argument("--hf4", type=float)
    ph.add_argument("--hf5", type=float)
    ph.add_argument("--levels", help="comma-separated first-integral values (singular case)")
    ph.add_argument("--hf3-max", dest="hf3_max", type=float, default=3.0)
    ph.add_argument("--samples", type=int, default=721)
    common(ph)

    a = sub.add_parser("attainable", help="membership query or brute-force section")
    a.add_argument("--point", help="x,y,z,v,w")
    a.add_argument("--section", choices=("xz", "xw", "xv", "zw", "zv", "vw"))
    a.add_argument("--T", type=float, default=1.0)
    a.add_argument("--tol", type=float, default=attainable.DEFAULT_TOL)
    a.add_argument("--grid", type=int, default=200, help="duration lattice resolution")
    a.add_argument("--values", type=int, default=21, help="middle-value resolution of the first family")
    a.add_argument("--max-points", dest="max_points", type=int, default=50_000)
    common(a)

    v = sub.add_parser("verify", help="run the invariant suites")
    v.add_argument("--suite", action="append", choices=sorted(verification.SUITES))
    v.add_argument("--timings", action="store_true", help="include wall times in the report")
    common(v, fmt="json")
    return p


COMMANDS = {"trajectory": cmd_trajectory, "phase": cmd_phase_portrait, "attainable": cmd_attainable,
            "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s",
                        stream=sys.stderr, force=True)
    params = {k: v for k, v in vars(args).items() if k not in ("command", "out", "fmt", "quiet")}
    cfg = RunConfig(args.command, params, args.out, args.fmt)
    try:
        cfg.validate()
        return COMMANDS[args.command](cfg)
    except CliError as exc:
        log.error("error: %s", exc)
        return 2
    except OSError as exc:
        log.error("error: cannot write output: %s", exc)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
