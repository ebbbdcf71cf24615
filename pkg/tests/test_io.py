import io
import math

import numpy as np

from cartan_sf.io import dumps_json, fmt_float, open_output, read_csv, resolve_output, write_csv


def test_float_format_round_trips(rng):
    for x in rng.normal(size=200) * 10.0 ** rng.integers(-20, 20, 200):
        assert float(fmt_float(x)) == x
    assert fmt_float(0.1) == "0.10000000000000001"
    assert fmt_float(math.nan) == "nan" and fmt_float(-math.inf) == "-inf"


def test_csv_cells_and_line_endings():
    buf = io.StringIO()
    write_csv(buf, ["a", "b", "c", "d"], [[1, 0.5, True, "x"], [np.int64(2), np.float64(0.25), False, "y"]])
    assert buf.getvalue() == "a,b,c,d\n1,0.5,1,x\n2,0.25,0,y\n"


def test_json_stable_and_nan_safe():
    s = dumps_json({"b": np.array([1.0, math.nan]), "a": np.float64(2.0), "c": (np.int32(3), np.bool_(True))})
    assert s == '{\n  "a": 2.0,\n  "b": [\n    1.0,\n    null\n  ],\n  "c": [\n    3,\n    true\n  ]\n}\n'


def test_resolve_output(tmp_path, monkeypatch):
    monkeypatch.delenv("CARTAN_SF_OUTDIR", raising=False)
    assert resolve_output(None, "x.csv") is None
    assert resolve_output("p.csv", "x.csv").name == "p.csv"
    monkeypatch.setenv("CARTAN_SF_OUTDIR", str(tmp_path))
    assert resolve_output(None, "x.csv") == tmp_path / "x.csv"


def test_open_output_creates_dirs(tmp_path):
    path = tmp_path / "a" / "b.csv"
    with open_output(path) as fh:
        write_csv(fh, ["x"], [[1.0]])
    assert read_csv(path) == (["x"], [["1"]])
