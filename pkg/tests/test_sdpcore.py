from pathlib import Path

import numpy as np
import pytest
import scipy.sparse as sp

from cdds.analysis import load_example, stability_problem
from cdds.lmisynth import Variable, build_problem
from cdds.sdpcore import (FAILURE, FEASIBLE, INFEASIBLE, OPTIMAL, ConicProgram, certify, decide,
                          export_sdpa, format_sdpa, minimize, read_sdpa, scalarize, solve)

DATA = Path(__file__).parent / "data"


def toy_problem():
    # minimise t subject to [[t, 1], [1, t]] >= 0
    return build_problem([Variable("t", 1)],
                         lambda v: {"G": np.array([[v["t"][0, 0], 1.0], [1.0, v["t"][0, 0]]])},
                         {"G": (">", False)}, objective={"t": 1.0})


def test_toy_minimum():
    out = minimize(toy_problem(), margin=0.0)
    assert out.status == OPTIMAL
    assert out.objective == pytest.approx(1.0, abs=1e-6)


def test_trace_minimum():
    p = build_problem([Variable("X", 3)], lambda v: {"X": v["X"] - np.eye(3)},
                      {"X": (">", False)})
    c = scalarize(p)
    obj = np.zeros(c.nvars)
    obj[[0, 3, 5]] = 1.0  # svec diagonal positions of a 3 x 3 matrix
    out = solve(ConicProgram(c.nvars, c.dims, c.consts, c.coefs, obj), tol=1e-9)
    assert out.status == OPTIMAL
    assert out.objective == pytest.approx(3.0, abs=1e-6)


def test_negative_identity_is_infeasible():
    p = build_problem([Variable("x", 1)], lambda v: {"G": -np.eye(2) + 0 * v["x"]},
                      {"G": (">", True)})
    assert decide(p).status == INFEASIBLE


def test_objective_row_only_for_gamma_problems():
    one = load_example("example-single")
    assert not np.any(scalarize(stability_problem(one, "legendre:1")).objective)
    assert np.count_nonzero(scalarize(toy_problem()).objective) == 1


def test_scalarization_reproduces_blocks(rng):
    p = stability_problem(load_example("example-single"), "legendre:2")
    c = scalarize(p, prescale=False)
    x = rng.standard_normal(c.nvars)
    blocks = p.blocks(x)
    for con, g in zip(p.constraints, c.evaluate(x)):
        ref = blocks[con.name] if con.sense == ">" else -blocks[con.name]
        assert np.allclose(g, ref, rtol=0, atol=1e-13 * max(1.0, np.abs(ref).max()))


def test_prescaling_is_recorded():
    c = scalarize(stability_problem(load_example("example-single"), "legendre:2"))
    for A, s in zip(c.coefs, c.scales):
        assert s > 0
        if A.nnz:
            assert np.abs(A).max() <= 1.0 + 1e-12


def test_golden_sdpa_bytes(tmp_path):
    c = scalarize(toy_problem())
    out = tmp_path / "toy.dat-s"
    export_sdpa(c, out)
    assert out.read_bytes() == (DATA / "toy.dat-s").read_bytes()


def test_golden_diagonal_block_round_trip(tmp_path):
    c = read_sdpa(DATA / "toy_diag.dat-s")
    assert c.dims == (2, 1) and c.diagonal == (False, True)
    assert np.allclose(c.consts[0], [[1.0, 0.0], [0.0, 0.0]])
    assert np.allclose(c.consts[1], [[-0.5]])
    export_sdpa(c, tmp_path / "again.dat-s")
    assert (tmp_path / "again.dat-s").read_bytes() == (DATA / "toy_diag.dat-s").read_bytes()


def test_round_trip_of_an_assembled_program(tmp_path):
    c = scalarize(stability_problem(load_example("example-two"), "legendre:1"))
    path = tmp_path / "two.dat-s"
    export_sdpa(c, path)
    back = read_sdpa(path)
    assert back.same_data(c)
    assert format_sdpa(back) == path.read_text()


def test_sdpa_reader_accepts_comments_and_punctuation():
    text = '"comment line\n*another\n1 =mdim\n1\n{2}\n{1.0}\n0,1,1,2,-1.0\n1 1 1 1 1\n1 1 2 2 1\n'
    assert read_sdpa(text).same_data(scalarize(toy_problem()))


def test_certify_flags_perturbation():
    one = load_example("example-single")
    p = stability_problem(one, "legendre:3")
    out = decide(p)
    assert out.status == FEASIBLE
    rep = certify(p, out.values)
    assert rep.overall_margin >= 0 and set(rep.block_min_eigs) == {"Phat", "Omega", "Q", "R"}
    bad = dict(out.values)
    bad["P"] = bad["P"] - (abs(rep.block_min_eigs["Phat"]) + 1e-3) * np.eye(bad["P"].shape[0])
    assert certify(p, bad).block_min_eigs["Phat"] < 0
    with pytest.raises(ValueError):
        certify(p, {"P": bad["P"]})


def test_determinism():
    p = stability_problem(load_example("example-single"), "legendre:3")
    a, b = decide(p), decide(p)
    assert a.status == b.status and np.array_equal(a.assignment, b.assignment)


def test_dependent_variables_are_reduced():
    # x1 and x2 enter only through their sum
    p = build_problem([Variable("x1", 1), Variable("x2", 1)],
                      lambda v: {"G": (v["x1"][0, 0] + v["x2"][0, 0]) * np.eye(2)
                                 - np.diag([1.0, 2.0])},
                      {"G": (">", True)})
    out = decide(p)
    assert out.status == FEASIBLE
    assert certify(p, out.values).overall_margin > 0


def test_unbounded_direction_detected():
    p = build_problem([Variable("x", 1), Variable("y", 1)],
                      lambda v: {"G": v["x"] + 1.0 + 0 * v["y"]}, {"G": (">", False)},
                      objective={"y": 1.0})
    assert minimize(p, margin=0.0).status == FAILURE


def test_settings_validated():
    with pytest.raises(ValueError):
        solve(scalarize(toy_problem()), tol=0.0)
    with pytest.raises(ValueError):
        ConicProgram(1, (2,), (np.zeros((2, 2)),), (sp.csc_matrix((3, 1)),), np.zeros(1))
