import numpy as np
import pytest
from hypothesis import given, strategies as st

from cdds.analysis import load_example
from cdds.cddsmodel import CddsModel
from cdds.spectrum import (SpectrumError, SpectrumRequest, bary_row, cheb_diff, cheb_nodes,
                           generator_matrix, rightmost_roots, stability_margin_sweep)


def test_ode_root():
    # x' = -x with an inert delay channel
    mdl = CddsModel.build(1, 1, r1=1.0, A1=[[-1.0]])
    res = rightmost_roots(SpectrumRequest(mdl, mesh=16, window=1))
    assert res.rightmost_real == pytest.approx(-1.0, abs=1e-10)
    assert res.converged


def test_pure_delay_critical_pair():
    # x' = -(pi/2) x(t - 1) has roots +- i pi/2 on the axis
    mdl = CddsModel.build(1, 1, r1=1.0, A2=[[-np.pi / 2]], A6=[[1.0]])
    res = rightmost_roots(SpectrumRequest(mdl, mesh=40, window=2))
    assert res.rightmost_real == pytest.approx(0.0, abs=1e-10)
    assert np.allclose(sorted(res.roots.imag), [-np.pi / 2, np.pi / 2], atol=1e-10)


def test_roots_close_under_conjugation():
    res = rightmost_roots(SpectrumRequest(load_example("example-single"), mesh=60, window=12),
                          check=False)
    r = res.roots
    # the window may cut a pair, so match all but the last root
    for z in r[:-1]:
        assert np.min(np.abs(r - np.conj(z))) < 1e-8
    assert np.all(np.diff(r.real) <= 1e-12)


def test_characteristic_equation_is_satisfied():
    """Roots of the collocated generator solve det(s - A1 - A2 e^{-sr} - int K e^{s t}) = 0."""
    from scipy.integrate import quad

    mdl = load_example("example-single")
    r = mdl.r1
    s = rightmost_roots(SpectrumRequest(mdl, mesh=120, window=1)).roots[0]
    K = lambda t: -5 * np.sin(np.cos(12 * t))  # noqa: E731
    re = quad(lambda t: K(t) * np.exp(s.real * t) * np.cos(s.imag * t), -r, 0, epsabs=1e-13)[0]
    im = quad(lambda t: K(t) * np.exp(s.real * t) * np.sin(s.imag * t), -r, 0, epsabs=1e-13)[0]
    assert abs(s - 0.33 - (re + 1j * im)) < 1e-8


def test_two_delay_example_is_stable_at_nominal_delays():
    res = rightmost_roots(SpectrumRequest(load_example("example-two"), mesh=80, window=1),
                          check=False)
    assert res.rightmost_real < 0


def test_refuses_difference_coupling():
    mdl = CddsModel.build(1, 1, r1=1.0, A1=[[-1.0]], A7=[[0.3]], A6=[[1.0]])
    with pytest.raises(SpectrumError):
        rightmost_roots(SpectrumRequest(mdl, mesh=16))
    res = rightmost_roots(SpectrumRequest(mdl, mesh=32, force=True), check=False)
    assert np.isfinite(res.rightmost_real)


def test_mesh_minimum():
    with pytest.raises(ValueError):
        SpectrumRequest(CddsModel.build(1, 1, r1=1.0), mesh=4)


@given(st.integers(8, 40), st.floats(0.1, 5.0))
def test_differentiation_is_exact_on_polynomials(M, tau):
    x = cheb_nodes(M, tau)
    p = np.polynomial.Polynomial(np.arange(1.0, min(M, 6) + 1))
    assert np.allclose(cheb_diff(M, tau) @ p(x), p.deriv()(x), rtol=1e-7,
                       atol=1e-7 * np.abs(p.deriv()(x)).max())


@given(st.integers(8, 40), st.floats(0.0, 1.0))
def test_barycentric_interpolation(M, frac):
    x = cheb_nodes(M, 2.0)
    t = -2.0 * frac
    p = np.polynomial.Chebyshev(np.ones(M + 1), domain=[-2.0, 0.0])  # degree M: exact
    assert bary_row(x, t) @ p(x) == pytest.approx(p(t), abs=1e-10 * (M + 1))
    assert bary_row(x, t).sum() == pytest.approx(1.0)


def test_generator_size():
    two = load_example("example-two")
    assert generator_matrix(two, 20).shape == (2 + 20 * 2,) * 2


def test_sweep_finds_the_first_window():
    res = stability_margin_sweep(load_example("example-single"), np.arange(0.08, 0.19, 0.01),
                                 M=60, width=1e-4)
    assert len(res.intervals) == 1
    lo, hi = res.intervals[0]
    assert lo == pytest.approx(0.0928, abs=5e-4) and hi == pytest.approx(0.1691, abs=5e-4)
    assert res.to_csv().startswith("r,rightmost_real,converged\n")
    with pytest.raises(ValueError):
        stability_margin_sweep(load_example("example-single"), [0.2, 0.1])
