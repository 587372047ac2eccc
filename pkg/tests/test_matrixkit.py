import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from cdds.matrixkit import (as_mat, congruence, dsum, hcat, kron, min_eig, signature, smat, svec,
                            svec_dim, sy, sym_sqrt)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def sym_arrays(max_n=6):
    return st.integers(1, max_n).flatmap(
        lambda n: arrays(float, (n, n), elements=finite).map(lambda a: a + a.T))


@given(sym_arrays())
def test_svec_round_trip(S):
    assert np.allclose(smat(svec(S)), S, atol=1e-12)
    assert svec(S).size == svec_dim(S.shape[0])


@given(st.integers(1, 5).flatmap(lambda n: st.tuples(
    arrays(float, (n, n), elements=finite), arrays(float, (n, n), elements=finite))))
def test_svec_inner_product_is_trace(pair):
    A, B = (X + X.T for X in pair)
    assert svec(A) @ svec(B) == pytest.approx(np.trace(A @ B), rel=1e-10, abs=1e-9)


def test_kron_mixed_product(rng):
    A, B, C, D = (rng.standard_normal(s) for s in [(2, 3), (4, 2), (3, 2), (2, 5)])
    assert np.allclose(kron(A, B) @ kron(C, D), kron(A @ C, B @ D))


def test_empty_operands():
    assert kron(np.zeros((0, 3)), np.eye(2)).shape == (0, 6)
    assert dsum().shape == (0, 0)
    assert dsum(np.eye(2), np.zeros((0, 0)), np.ones((1, 3))).shape == (3, 5)
    assert min_eig(np.zeros((0, 0))) == np.inf
    assert signature(np.zeros((0, 0))) == (0, 0, 0)
    assert hcat([np.zeros((2, 0)), np.ones((2, 1))], 2).shape == (2, 1)


def test_dsum_places_blocks():
    out = dsum([np.eye(1), 2 * np.ones((2, 2))])
    assert np.array_equal(out, [[1, 0, 0], [0, 2, 2], [0, 2, 2]])


def test_sy_and_shape_errors():
    assert np.array_equal(sy([[0, 1], [0, 0]]), [[0, 1], [1, 0]])
    with pytest.raises(ValueError):
        sy(np.ones((2, 3)))
    with pytest.raises(ValueError):
        congruence(np.eye(2), np.ones((3, 1)))
    with pytest.raises(ValueError):
        as_mat(np.ones((2, 2)), rows=3)


@given(sym_arrays(5), st.integers(0, 2**31 - 1))
def test_congruence_preserves_signature(S, seed):
    # Sylvester's law of inertia under an invertible, well-conditioned X
    n = S.shape[0]
    Q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((n, n)))
    X = Q @ np.diag(np.linspace(1.0, 2.0, n))
    scale = np.abs(S).max()
    tol = 1e-7 * max(scale, 1e-300)
    ev = np.linalg.eigvalsh(S)
    if np.any((np.abs(ev) > tol / 10) & (np.abs(ev) < 100 * tol)):
        return  # eigenvalue too close to the classification threshold
    assert signature(congruence(S, X), tol=4 * tol) == signature(S, tol=tol)


@given(arrays(float, (4, 4), elements=finite))
def test_sym_sqrt_squares_back(X):
    S = X @ X.T
    R = sym_sqrt(S)
    assert np.allclose(R @ R, S, atol=1e-8 * max(1.0, np.abs(S).max()))
    assert np.allclose(R, R.T)


def test_sym_sqrt_inverse_drops_null_space():
    S = np.diag([4.0, 0.0])
    assert np.allclose(sym_sqrt(S, inverse=True, cutoff=1e-12), np.diag([0.5, 0.0]))


def test_min_eig_rejects_nonfinite():
    with pytest.raises(ValueError):
        min_eig([[np.nan]])
