import numpy as np
import pytest
from hypothesis import given, strategies as st

from cdds.basis import (NoClosureError, boundary, closure_residual, derived_unit_basis,
                        exp_basis, legendre_basis, parse_basis_spec, subset_basis, trig_basis,
                        weighted_poly_basis)
from cdds.quadrature import Interval, Weight, gram, integrate

IV = Interval(-4.05, -2.0)


@pytest.mark.parametrize("b", [
    legendre_basis(0, IV), legendre_basis(6, IV), trig_basis(3, 18.0, IV),
    exp_basis([-1.0, 0.5, 2.0], IV), parse_basis_spec("trig:5@12", Interval(-1.3, 0)),
])
def test_differentiation_closure(b):
    assert closure_residual(b) < 1e-6


def test_dimensions():
    assert legendre_basis(3, IV).dim == 4
    assert trig_basis(3, 12.0, IV).dim == 7
    assert parse_basis_spec("exp:1,2,3", IV).dim == 3


@given(st.integers(0, 12))
def test_legendre_gram_closed_form_matches_quadrature(d):
    b = legendre_basis(d, IV)
    num = gram(b, IV, tol=1e-13).matrix
    assert np.allclose(b.gram(), num, atol=1e-11)


def test_trig_and_exp_grams():
    for b in (trig_basis(2, 18.0, IV), exp_basis([0.3, -1.1], IV)):
        assert np.allclose(b.gram(), gram(b, IV, tol=1e-13).matrix, atol=1e-11)


def test_boundary_values():
    b = legendre_basis(3, IV)
    assert np.allclose(boundary(b, IV.hi), np.ones(4))
    assert np.allclose(boundary(b, IV.lo), [1, -1, 1, -1])
    with pytest.raises(ValueError):
        boundary(b, 0.0)


@pytest.mark.parametrize("deg", [0, 1, 2, 4])
def test_weighted_family_relations(deg):
    base = legendre_basis(6, IV)
    g = weighted_poly_basis(deg, IV, 4.05, base)
    t = np.linspace(IV.lo, IV.hi, 37)
    h = 1e-6
    d_wg = ((t + h + 4.05)[:, None] * g(t + h) - (t - h + 4.05)[:, None] * g(t - h)) / (2 * h)
    assert np.allclose(d_wg, base(t) @ g.relation.T, atol=1e-6)
    dg = (g(t + h) - g(t - h)) / (2 * h)
    assert np.allclose((t + 4.05)[:, None] * dg, base(t) @ g.printed_relation.T, atol=1e-6)
    G = gram(g, IV, Weight.affine(4.05)).matrix
    assert np.allclose(G, np.diag(np.diag(G)), atol=1e-12 * np.trace(G))


def test_weighted_family_limits():
    with pytest.raises(NoClosureError):
        weighted_poly_basis(4, IV, 4.05, legendre_basis(3, IV))
    with pytest.raises(NoClosureError):
        weighted_poly_basis(1, IV, 4.05, trig_basis(1, 18.0, IV))


def test_unit_derived_family_relation():
    base = trig_basis(2, 18.0, IV)
    phi = derived_unit_basis(base)
    t = np.linspace(IV.lo, IV.hi, 29)
    h = 1e-6
    assert np.allclose((phi(t + h) - phi(t - h)) / (2 * h), base(t) @ phi.relation.T, atol=1e-5)


def test_subset_basis_columns():
    base = legendre_basis(4, IV)
    s = subset_basis(base, [0, 2])
    t = np.linspace(IV.lo, IV.hi, 5)
    assert np.allclose(s(t), base(t)[:, [0, 2]])


@pytest.mark.parametrize("text", ["legendre", "trig:3", "exp:", "cheb:3", "legendre:-1"])
def test_bad_specs(text):
    with pytest.raises(ValueError):
        parse_basis_spec(text, IV)


def test_orthogonal_legendre_integrals():
    b = legendre_basis(5, IV)
    val = integrate(lambda t: b(t)[:, 3] * b(t)[:, 5], IV).value
    assert abs(val) < 1e-13
