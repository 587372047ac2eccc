import numpy as np
import pytest

from cdds.analysis import (feasible_runs, gamma_min, load_example, margins_sweep, parse_grid,
                           resolve_model)
from cdds.sdpcore import read_sdpa


def test_parse_grid():
    g = parse_grid("0.05:0.25:0.001")
    assert g.size == 201 and g[0] == 0.05 and g[-1] == 0.25
    assert g[93 - 50] == 0.093  # rounding keeps decimal grid values exact
    assert parse_grid("0.3, 0.1,0.2").tolist() == [0.1, 0.2, 0.3]
    assert parse_grid("1:0:0.1").size == 0
    for bad in ("1:2", "0:1:0", "a:b:c"):
        with pytest.raises(ValueError):
            parse_grid(bad)


def test_feasible_runs():
    g = [1, 2, 3, 4, 5, 6]
    assert feasible_runs(g, [0, 1, 1, 0, 1, 1]) == [(2, 3), (5, 6)]
    assert feasible_runs(g, [0] * 6) == []
    assert feasible_runs([], []) == []


def test_resolve_model(tmp_path):
    p = tmp_path / "m.yaml"
    p.write_text("dims: {n: 1, nu: 1}\ndelays: {r1: 0.4}\nmatrices: {A1: [[-2]]}\n")
    assert resolve_model(str(p)).r1 == 0.4
    assert resolve_model("example-two").r2 == 4.05
    with pytest.raises(FileNotFoundError):
        resolve_model(str(tmp_path / "missing.yaml"))


def test_margins_with_oracle():
    res = margins_sweep(load_example("example-single"), "legendre:3", [0.05, 0.13, 0.2],
                        oracle=True, mesh=60)
    assert [r.lmi_feasible for r in res.rows] == [False, True, False]
    assert res.nodv == 17 and res.oracle_exceptions() == []
    assert res.rows[1].oracle_rightmost < 0 < res.rows[0].oracle_rightmost
    lines = res.to_csv().splitlines()
    assert lines[0] == "r,lmi_feasible,nodv,oracle_rightmost" and lines[2].startswith("0.13,1,17,")
    with pytest.raises(ValueError):
        margins_sweep(load_example("example-two"), "legendre:1", [1.0])


def test_gamma_export_without_solving(tmp_path):
    out = tmp_path / "g.dat-s"
    res = gamma_min(load_example("example-two"), "trig:1@18", export=str(out), solve=False)
    assert res.status == "not_solved" and res.nodv == 196
    c = read_sdpa(out)
    assert c.nvars == 196 and np.count_nonzero(c.objective) == 1
    assert res.csv_row() == "trig:1@18,,196,0,1e-07"


def test_gain_needs_channels():
    with pytest.raises(ValueError):
        gamma_min(load_example("example-single"), "legendre:1", solve=False)
