import numpy as np
import pytest
from hypothesis import given, strategies as st

from cdds.analysis import gain_problem, load_example, stability_problem
from cdds.basis import parse_basis_spec
from cdds.cddsmodel import CddsModel, build_augmented
from cdds.lmisynth import (SupplyRate, Variable, assemble_theorem1, build_problem,
                           count_decision_variables, crosscheck_omega, prepare_channels,
                           rank_one_update, supply_preset)
from cdds.lmisynth.crosscheck import assembled_dissipation_form
from cdds.matrixkit import signature, sym_sqrt
from cdds.quadrature import Interval
from cdds.sdpcore import decide
from cdds.suites import random_small_model


def nodv_single(n, nu, D):
    l = n + D * nu
    return l * (l + 1) // 2 + 2 * nu * (nu + 1) // 2


def nodv_two(n, nu, d, dl, gamma=True):
    l = n + 2 * nu + (d + dl) * nu
    return l * (l + 1) // 2 + 8 * nu * (nu + 1) // 2 + int(gamma)


@pytest.mark.parametrize("spec, D, expect", [
    ("legendre:3", 4, 17), ("trig:3@12", 7, 38), ("trig:5@12", 11, 80), ("legendre:0", 1, None),
])
def test_nodv_single_delay(spec, D, expect):
    p = stability_problem(load_example("example-single"), spec)
    count = count_decision_variables(p)
    # the probe count of the scalarization is an independent enumeration
    assert count == p.nvars == nodv_single(1, 1, D)
    if expect is not None:
        assert count == expect


@pytest.mark.parametrize("spec, dim, expect", [("trig:1@18", 3, 196), ("trig:2@18", 5, 376),
                                               ("legendre:2", 3, 196)])
def test_nodv_two_delay(spec, dim, expect):
    p = gain_problem(load_example("example-two"), spec)
    assert count_decision_variables(p) == p.nvars == nodv_two(2, 2, dim, dim) == expect


def test_positivity_form_selection():
    two = load_example("example-two")
    assert gain_problem(two, "legendre:2").meta["full_positivity"] is True
    assert gain_problem(two, "legendre:2", use_46=False).meta["full_positivity"] is False
    with pytest.warns(RuntimeWarning):
        assert gain_problem(two, "trig:1@18").meta["full_positivity"] is False
    with pytest.raises(ValueError):
        gain_problem(two, "trig:1@18", use_46=True)


def test_problem_probe_round_trip(rng):
    A = rng.standard_normal((3, 3))

    def builder(v):
        P, g = v["P"], v["g"][0, 0]
        return {"lyap": A.T @ P + P @ A + g * np.eye(3), "P": P - np.eye(3)}

    p = build_problem([Variable("P", 3), Variable("g", 1)], builder,
                      {"lyap": ("<", True), "P": (">", False)}, objective={"g": 1.0})
    assert p.nvars == 7 and p.objective.tolist() == [0] * 6 + [1]
    x = rng.standard_normal(p.nvars)
    blocks = p.blocks(x)
    for c in p.constraints:
        assert np.allclose(c.expr(x), blocks[c.name], atol=1e-13)
    with pytest.raises(ValueError):
        build_problem([Variable("P", 2)], lambda v: {"P": v["P"]}, {"P": (">", True)},
                      objective={"P": 1.0})


def test_supply_presets():
    s = supply_preset("l2gain", 2, 1, gamma=0.5)
    assert np.allclose(s.matrix(), np.diag([-2.0, -2.0, 0.5]))
    free = supply_preset("l2gain", 2, 1)
    assert free.objective_var == "gamma"
    J1, J3 = free.at(3.0)
    assert np.allclose(J1, -3 * np.eye(2)) and np.allclose(J3, 3 * np.eye(1))
    assert supply_preset("passivity", 2, 2).J2.shape == (2, 2)
    with pytest.raises(ValueError):
        supply_preset("passivity", 2, 1)
    with pytest.raises(ValueError):
        supply_preset("l2gain", 1, 1, gamma=-1.0)
    with pytest.raises(ValueError):
        SupplyRate(np.eye(1), np.eye(1), np.zeros((1, 1)), np.zeros((1, 1)))  # J1 not < 0
    with pytest.raises(ValueError):
        SupplyRate(-np.eye(1), np.eye(1), np.zeros((1, 2)), np.array([[0.0, 1.0], [0.0, 0.0]]))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_assembly_crosscheck_random_models(seed):
    rng = np.random.default_rng(seed)
    mdl = random_small_model(rng)
    ch1, ch2 = prepare_channels(mdl, parse_basis_spec("legendre:1", Interval(-mdl.r1, 0)),
                                parse_basis_spec("legendre:2", Interval(-mdl.r2, -mdl.r1)),
                                check="warn")
    sup = supply_preset("l2gain", mdl.m, mdl.q, gamma=1.3)
    for sc in ("eta", "inverse"):
        aug = build_augmented(mdl, ch1.decomposition, ch1.approx, ch2.decomposition,
                              ch2.approx, scaling=sc, eta1=0.7, eta2=1.4)
        p = assemble_theorem1(mdl, aug, ch1, ch2, sup)
        vals = {v.name: (lambda X: X @ X.T)(rng.standard_normal((v.dim, v.dim)))
                for v in p.variables}
        assert crosscheck_omega(mdl, ch1, ch2, sup, p, vals, sc, (0.7, 1.4)) <= 1e-9


@given(st.integers(0, 10_000))
def test_error_scaling_is_a_congruence(seed):
    """Both error scalings give congruent dissipation forms at any assignment."""
    rng = np.random.default_rng(seed)
    mdl = CddsModel.build(1, 1, 1, 1, r1=0.5, r2=1.2, A1=[[-1.0]], A2=[[0.3]], A6=[[0.5]],
                          D1=[[1.0]], C1=[[1.0]], A4=[["2*cos(7*tau)"]], A5=[["sin(9*tau)"]])
    ch1, ch2 = prepare_channels(mdl, parse_basis_spec("legendre:1", Interval(-0.5, 0)),
                                parse_basis_spec("legendre:1", Interval(-1.2, -0.5)))
    sup = supply_preset("l2gain", 1, 1, gamma=2.0)
    eta = rng.uniform(0.3, 3.0)
    forms = {}
    vals = None
    for sc in ("eta", "inverse"):
        aug = build_augmented(mdl, ch1.decomposition, ch1.approx, ch2.decomposition,
                              ch2.approx, scaling=sc, eta1=eta, eta2=eta)
        p = assemble_theorem1(mdl, aug, ch1, ch2, sup)
        if vals is None:
            vals = {v.name: (lambda X: X @ X.T + 0.1 * np.eye(v.dim))(
                rng.standard_normal((v.dim, v.dim))) for v in p.variables}
        forms[sc] = assembled_dissipation_form(p, vals, 1, 1)
    T = np.eye(forms["eta"].shape[0])
    k = forms["eta"].shape[0]
    T[k - 2:k - 1, k - 2:k - 1] = sym_sqrt(ch1.approx.error_gram) / eta
    T[k - 1:, k - 1:] = sym_sqrt(ch2.approx.error_gram) / eta
    mapped = T.T @ forms["eta"] @ T
    assert np.allclose(mapped, forms["inverse"], atol=1e-9 * np.abs(forms["inverse"]).max())
    assert signature(mapped) == signature(forms["inverse"])


@pytest.mark.parametrize("r", [0.05, 0.13])
def test_scaling_choice_keeps_the_verdict(r):
    one = load_example("example-single").with_delays(r)
    a = decide(stability_problem(one, "legendre:3", scaling="eta")).status
    b = decide(stability_problem(one, "legendre:3", scaling="inverse")).status
    assert a == b == ("feasible" if r == 0.13 else "infeasible_certificate")


@pytest.mark.parametrize("which", ["kappa", "p"])
def test_rank_one_block_updates(which):
    two = load_example("example-two")
    rep = rank_one_update(two, "legendre:3", "legendre:3", which, 2)
    assert rep.worst <= 1e-10
