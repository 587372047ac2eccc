import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from cdds.basis import legendre_basis, trig_basis
from cdds.expr import KernelMatrix
from cdds.kernelapprox import (DecompositionError, ResidualFamily, approximate, custom_gamma,
                               decompose_kernels, error_scaled_functions, hierarchy_step,
                               least_squares_gamma)
from cdds.quadrature import Interval

IV1 = Interval(-2.0, 0.0)
IV2 = Interval(-4.05, -2.0)
T = np.linspace(-2.0, 0.0, 23)


def reconstruct(dec, name, t):
    h = np.hstack([dec.residuals(t), dec.basis(t)])
    C = dec.coeffs[name]
    nu = dec.nu
    return np.stack([C @ np.kron(hk[:, None], np.eye(nu)) for hk in h])


def test_example_kernels_are_reproduced_exactly():
    K = {"A4": KernelMatrix.from_strings([["3*sin(18*tau)", "-0.3*exp(cos(18*tau))"],
                                          ["0", "3*sin(18*tau)"]]),
         "C4": KernelMatrix.from_strings([["0.1", "0"], ["0", "0"]])}
    b = trig_basis(1, 18.0, IV1)
    dec = decompose_kernels(K, b, 2, residuals=["exp(sin(18*tau))", "exp(cos(18*tau))"])
    assert dec.mu == 2
    for name in K:
        assert np.allclose(reconstruct(dec, name, T), K[name](T), atol=1e-10)


def test_kernel_in_span_needs_no_residual():
    K = {"A4": KernelMatrix.from_strings([["3*tau^2 - 1"]])}
    dec = decompose_kernels(K, legendre_basis(2, IV1), 1)
    assert dec.mu == 0
    assert np.allclose(reconstruct(dec, "A4", T)[:, 0, 0], 3 * T**2 - 1)


def test_auto_residuals_and_refusal():
    K = {"A4": KernelMatrix.from_strings([["-5*sin(cos(12*tau))"]])}
    dec = decompose_kernels(K, legendre_basis(3, IV1), 1)
    assert dec.mu == 1 and dec.residuals.labels == ("-5*sin(cos(12*tau))",)
    assert np.allclose(reconstruct(dec, "A4", T)[:, 0, 0], -5 * np.sin(np.cos(12 * T)))
    with pytest.raises(DecompositionError):
        decompose_kernels(K, legendre_basis(3, IV1), 1, auto=False)


def test_column_mismatch_rejected():
    with pytest.raises(ValueError):
        decompose_kernels({"A4": KernelMatrix.from_strings([["1", "tau"]])},
                          legendre_basis(1, IV1), 1)


def test_dependent_family_detected():
    b = legendre_basis(2, IV1)
    K = {"A4": KernelMatrix.from_strings([["sin(tau)"]])}
    dec = decompose_kernels(K, b, 1, residuals=["sin(tau)", "2*sin(tau) + tau"])
    with pytest.raises(DecompositionError):
        least_squares_gamma(dec)
    with pytest.warns(RuntimeWarning):
        least_squares_gamma(dec, check="warn")


def test_error_gram_against_scalar_quadrature():
    fam = ResidualFamily.from_exprs(["exp(sin(18*tau))", "exp(cos(18*tau))"])
    a = approximate(fam, legendre_basis(3, IV2))
    for i in range(2):
        for j in range(2):
            ref = quad(lambda t: a.eps(np.array([t]))[0, i] * a.eps(np.array([t]))[0, j],
                       IV2.lo, IV2.hi, limit=400, epsabs=1e-13, epsrel=1e-13)[0]
            assert a.error_gram[i, j] == pytest.approx(ref, abs=1e-11)
    assert a.orthogonality_residual < 1e-12


def test_least_squares_beats_any_other_gamma(rng):
    fam = ResidualFamily.from_exprs(["exp(sin(18*tau))", "exp(cos(18*tau))"])
    b = trig_basis(1, 18.0, IV2)
    k = decompose_kernels({}, b, 1, residuals=fam)
    ls = least_squares_gamma(k)
    other = custom_gamma(k, ls.gamma + 0.05 * rng.standard_normal(ls.gamma.shape))
    assert np.linalg.eigvalsh(other.error_gram - ls.error_gram)[0] >= -1e-12
    assert not other.least_squares


def test_error_scaled_functions_have_inverse_gram():
    fam = ResidualFamily.from_exprs(["exp(sin(3*tau))", "cos(7*tau)"])
    a = approximate(fam, legendre_basis(2, IV1))
    g = error_scaled_functions(a)
    from cdds.quadrature import gram

    G = gram(g, IV1, tol=1e-13).matrix
    assert np.allclose(G, np.linalg.inv(a.error_gram), rtol=1e-8)


@given(st.lists(st.tuples(st.floats(-2, 2), st.floats(1, 9)), min_size=1, max_size=3),
       st.integers(0, 6))
def test_error_gram_ladder_is_monotone(terms, d):
    fam = ResidualFamily.from_exprs([f"{a!r}*cos({w!r}*tau) + exp(tau/{w!r})" for a, w in terms])
    st_ = hierarchy_step(fam, legendre_basis(d, IV1), legendre_basis(d + 1, IV1))
    assert st_.min_eig_diff >= -1e-12
    assert st_.rank_one_residual <= 1e-10
