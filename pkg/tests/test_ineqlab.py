import numpy as np
import pytest
from hypothesis import given, strategies as st

from cdds.basis import legendre_basis
from cdds.ineqlab import (InequalityCase, InequalityError, corollary1_gap, lemma3_gap,
                          random_case, random_summation_case, summation_gap)
from cdds.quadrature import Interval, Weight, integrate

IV = Interval(-1.5, 0.0)


def test_jensen_special_case():
    # f = 1 gives Jensen: int x^T U x >= (int x)^T U (int x) / length
    x = lambda t: np.stack([np.sin(3 * t), t**2], axis=1)  # noqa: E731
    U = np.array([[2.0, 0.5], [0.5, 1.0]])
    c = InequalityCase(IV, Weight.unit(), legendre_basis(0, IV), x, U)
    lhs = integrate(lambda t: np.einsum("ki,ij,kj->k", x(t), U, x(t)), IV).value
    s = integrate(x, IV).value
    assert corollary1_gap(c) == pytest.approx(lhs - s @ U @ s / IV.length, abs=1e-12)
    assert corollary1_gap(c) > 0


def test_signal_in_the_span_is_tight():
    x = lambda t: np.stack([1 + t, 3 * t**2], axis=1)  # noqa: E731
    c = InequalityCase(IV, Weight.unit(), legendre_basis(2, IV), x, np.eye(2))
    assert abs(corollary1_gap(c)) < 1e-12


def test_identity_and_orthogonality():
    c = InequalityCase(IV, Weight.affine(2.0), legendre_basis(1, IV),
                       lambda t: np.stack([np.cos(5 * t), np.exp(t)], axis=1), np.eye(2),
                       g=lambda t: np.sin(4 * np.asarray(t))[:, None], omega=5.0)
    r = lemma3_gap(c)
    assert r.gap >= 0
    assert r.identity_residual < 1e-9
    assert r.orthogonality_residual < 1e-12
    assert r.rhs_e >= 0


def test_g_adds_to_the_bound():
    x = lambda t: np.sin(6 * np.asarray(t))[:, None]  # noqa: E731
    f = legendre_basis(1, IV)
    with_g = lemma3_gap(InequalityCase(IV, Weight.unit(), f, x, np.eye(1),
                                       g=lambda t: np.sin(6 * np.asarray(t))[:, None]))
    without = corollary1_gap(InequalityCase(IV, Weight.unit(), f, x, np.eye(1)))
    assert with_g.gap <= without + 1e-12
    assert abs(with_g.gap) < 1e-10  # x lies in span{f, g}


def test_validation():
    x = lambda t: np.asarray(t)[:, None]  # noqa: E731
    with pytest.raises(InequalityError):
        InequalityCase(IV, Weight.unit(), legendre_basis(0, IV), x, np.array([[-1.0]]))
    with pytest.raises(InequalityError):
        InequalityCase(IV, Weight.unit(), legendre_basis(0, IV), x, np.array([[0.0, 1.0], [0, 0]]))
    with pytest.raises(InequalityError):
        lemma3_gap(InequalityCase(IV, Weight.unit(), legendre_basis(0, IV), x, np.eye(2)))
    with pytest.raises(InequalityError):
        lemma3_gap(InequalityCase(IV, Weight.unit(), legendre_basis(1, IV), x, np.eye(1),
                                  g=lambda t: 2 * np.asarray(t)[:, None]))


@given(st.integers(0, 2**32 - 1))
def test_random_integral_cases(seed):
    rng = np.random.default_rng(seed)
    try:
        r = lemma3_gap(random_case(rng))
    except InequalityError:
        return
    assert r.gap >= -1e-10
    assert r.identity_residual <= 1e-9


@given(st.integers(0, 2**32 - 1))
def test_random_summation_cases(seed):
    w, f, x, U = random_summation_case(np.random.default_rng(seed))
    assert summation_gap(w, f, x, U) >= -1e-10


@given(st.integers(2, 5), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_summation_bound_is_exact_with_as_many_points_as_functions(d, n, seed):
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.1, 2.0, d)
    f = rng.standard_normal((d, d))
    if np.linalg.cond(f) > 1e4:
        return
    x = rng.standard_normal((d, n))
    B = rng.standard_normal((n, n))
    U = B @ B.T
    lhs = np.einsum("k,ki,ij,kj->", w, x, U, x)
    assert abs(summation_gap(w, f, x, U)) <= 1e-9 * max(1.0, lhs)


def test_summation_validation():
    with pytest.raises(InequalityError):
        summation_gap([1.0], [[1.0]], [[1.0]], np.eye(1))
    with pytest.raises(InequalityError):
        summation_gap([1.0, -1.0], [[1.0], [1.0]], [[1.0], [2.0]], np.eye(1))
    with pytest.raises(InequalityError):
        summation_gap([1.0, 1.0], [[1.0, 1.0], [1.0, 1.0]], [[1.0], [2.0]], np.eye(1))
