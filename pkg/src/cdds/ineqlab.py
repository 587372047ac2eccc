"""Numeric evaluators for projection-type integral and summation inequalities.

For a weight ``w >= 0`` on an interval, a family ``f`` and an optional
family ``g``, the integral inequality reads

    int w x^T U x  >=  xf^T (Fd (x) U) xf + xe^T (Ed^{-1} (x) U) xe

with ``xf = int w (f (x) I) x``, ``e = g - A f`` the part of ``g``
orthogonal to ``f``, ``xe = int w (e (x) I) x`` and ``Fd^{-1}``, ``Ed`` the
weighted Grams of ``f`` and ``e``.  The gap equals ``int w v^T U v`` for the
projection remainder ``v``; both sides are computed independently so the
identity doubles as an accuracy check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .basis import legendre_basis
from .quadrature import Interval, Weight, integrate

__all__ = [
    "InequalityError",
    "InequalityCase",
    "Lemma3Result",
    "lemma3_gap",
    "corollary1_gap",
    "summation_gap",
    "random_signal",
    "random_case",
    "random_summation_case",
]


class InequalityError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class InequalityCase:
    """``f``, ``g`` and ``x`` are vectorised: ``taus -> (len(taus), k)``."""

    interval: Interval
    weight: Weight
    f: Callable
    x: Callable
    U: np.ndarray
    g: Callable | None = None
    omega: float | None = None  # largest angular frequency, for panel sizing

    def __post_init__(self):
        U = np.asarray(self.U, dtype=float)
        if U.ndim != 2 or U.shape[0] != U.shape[1]:
            raise InequalityError("U must be square")
        if not np.allclose(U, U.T, atol=1e-12 * max(1.0, np.abs(U).max())):
            raise InequalityError("U must be symmetric")
        if np.linalg.eigvalsh(U)[0] < -1e-12 * max(1.0, np.abs(U).max()):
            raise InequalityError("U must be positive semidefinite")


@dataclass
class Lemma3Result:
    gap: float
    lhs: float
    rhs_f: float
    rhs_e: float
    identity: float  # int w v^T U v
    identity_residual: float  # |gap - identity| / max(1, lhs)
    orthogonality_residual: float  # max |int w e f^T| / scale


def _cols(h, t):
    v = np.asarray(h(t), dtype=float)
    return v.reshape(v.shape[0], -1) if v.ndim > 1 else v[:, None]


def _integ(fn, c: InequalityCase, tol):
    return integrate(fn, c.interval, c.weight, tol, omega_max=c.omega).value


def lemma3_gap(c: InequalityCase, tol: float = 1e-12, gram_tol: float = 1e-12) -> Lemma3Result:
    """Left side minus right side of the integral inequality, with the proof identity."""
    t0 = np.array([c.interval.lo])
    d = _cols(c.f, t0).shape[1]
    dg = _cols(c.g, t0).shape[1] if c.g is not None else 0
    n = _cols(c.x, t0).shape[1]
    U = np.asarray(c.U, dtype=float)
    if U.shape != (n, n):
        raise InequalityError(f"U is {U.shape}, signal has dimension {n}")

    def h(t):
        parts = [_cols(c.g, t)] if dg else []
        return np.hstack(parts + [_cols(c.f, t)])

    def moments(t):
        H = h(t)
        X = _cols(c.x, t)
        gram = H[:, :, None] * H[:, None, :]
        cross = H[:, :, None] * X[:, None, :]
        quad = np.einsum("ki,ij,kj->k", X, U, X)
        return np.concatenate([gram.reshape(len(t), -1), cross.reshape(len(t), -1),
                               quad[:, None]], axis=1)

    k = dg + d
    mom = _integ(moments, c, tol)
    G = mom[: k * k].reshape(k, k)
    G = 0.5 * (G + G.T)
    HX = mom[k * k: k * k + k * n].reshape(k, n)
    lhs = float(mom[-1])
    ev = np.linalg.eigvalsh(G)
    if ev[0] <= gram_tol * max(ev[-1], 1e-300):
        raise InequalityError(f"joint Gram is not positive definite (min eigenvalue {ev[0]:.3e})")
    Gf = G[dg:, dg:]
    Fd = np.linalg.inv(Gf)
    Gg_f = G[:dg, dg:]
    A = Gg_f @ Fd
    # e = g - A f, its Gram and moments follow from the joint ones
    T = np.hstack([np.eye(dg), -A]) if dg else np.zeros((0, k))
    Ed = T @ G @ T.T
    orth = float(np.abs(T @ G[:, dg:]).max() / max(1.0, np.abs(G).max())) if dg else 0.0
    xf = HX[dg:]  # d x n, row i = int w f_i x^T
    xe = T @ HX
    rhs_f = float(np.sum(xf * (Fd @ xf @ U)))
    rhs_e = float(np.sum(xe * (np.linalg.solve(Ed, xe) @ U))) if dg else 0.0
    gap = lhs - rhs_f - rhs_e

    # the remainder v(t) = x - f^T Fd xf - e^T Ed^{-1} xe, integrated directly
    Cf = Fd @ xf
    Ce = np.linalg.solve(Ed, xe) if dg else np.zeros((0, n))

    def vquad(t):
        F = _cols(c.f, t)
        V = _cols(c.x, t) - F @ Cf
        if dg:
            E = _cols(c.g, t) - F @ A.T
            V = V - E @ Ce
        return np.einsum("ki,ij,kj->k", V, U, V)

    scale = max(1.0, abs(lhs))
    # v is a remainder after cancellation; its accuracy is relative to lhs
    ident = float(_integ(vquad, c, tol * scale))
    return Lemma3Result(gap=gap, lhs=lhs, rhs_f=rhs_f, rhs_e=rhs_e, identity=ident,
                        identity_residual=abs(gap - ident) / scale,
                        orthogonality_residual=orth)


def corollary1_gap(c: InequalityCase, tol: float = 1e-12) -> float:
    """Gap of the inequality with the ``f`` projection only."""
    if c.g is not None:
        raise InequalityError("corollary1_gap takes a case without g")
    return lemma3_gap(c, tol).gap


def summation_gap(weights, f, x, U, gram_tol: float = 1e-12) -> float:
    """Discrete analogue: ``sum w x^T U x - s^T (F (x) U) s``, ``s = sum w f (x) x``.

    ``weights`` has shape ``(K,)``, ``f`` ``(K, d)``, ``x`` ``(K, n)``.
    """
    w = np.asarray(weights, dtype=float).ravel()
    f = np.asarray(f, dtype=float)
    x = np.asarray(x, dtype=float)
    U = np.asarray(U, dtype=float)
    K = w.size
    if K < 2:
        raise InequalityError("index set needs at least two points")
    if f.ndim == 1:
        f = f[:, None]
    if x.ndim == 1:
        x = x[:, None]
    if f.shape[0] != K or x.shape[0] != K:
        raise InequalityError("weights, f and x must have the same length")
    if np.any(w < 0):
        raise InequalityError("weights must be nonnegative")
    Gi = (w[:, None] * f).T @ f
    ev = np.linalg.eigvalsh(Gi)
    if ev[0] <= gram_tol * max(ev[-1], 1e-300):
        raise InequalityError(f"discrete Gram is singular (min eigenvalue {ev[0]:.3e})")
    S = (w[:, None] * f).T @ x  # d x n
    lhs = float(np.einsum("k,ki,ij,kj->", w, x, U, x))
    rhs = float(np.sum(S * (np.linalg.solve(Gi, S) @ U)))
    return lhs - rhs


# ---------------------------------------------------------------------------
# Reproducible random cases
# ---------------------------------------------------------------------------

def random_signal(rng: np.random.Generator, n: int, iv: Interval, terms: int = 3):
    """Seeded mixture of a cubic and a few sinusoids, ``taus -> (k, n)``."""
    c = 0.5 * (iv.lo + iv.hi)
    h = 0.5 * iv.length
    poly = rng.standard_normal((4, n))
    amp = rng.standard_normal((terms, n))
    freq = rng.uniform(0.5, 8.0, terms) / h
    phase = rng.uniform(0, 2 * np.pi, (terms, n))

    def x(t):
        s = (np.asarray(t, dtype=float) - c) / h
        out = np.vander(s, 4, increasing=True) @ poly
        for k in range(terms):
            out = out + amp[k] * np.sin(freq[k] * np.asarray(t)[:, None] + phase[k])
        return out

    return x, float(freq.max())


def _random_psd(rng, n):
    r = rng.integers(1, n + 1)  # rank, so singular U are covered
    B = rng.standard_normal((n, r))
    return B @ B.T


def random_case(rng: np.random.Generator, with_g: bool = True) -> InequalityCase:
    """Random interval, weight, Legendre ``f``, sinusoidal ``g``, signal and ``U``."""
    lo = rng.uniform(-3, 1)
    iv = Interval(lo, lo + rng.uniform(0.2, 3))
    if rng.random() < 0.5:
        wt = Weight.unit()
    else:
        wt = Weight.affine(-iv.lo + rng.uniform(0.0, 1.0))
    d = int(rng.integers(0, 4))
    f = legendre_basis(d, iv)
    n = int(rng.integers(1, 4))
    x, wx = random_signal(rng, n, iv)
    g = None
    wg = 0.0
    if with_g:
        k = int(rng.integers(1, 3))
        a = rng.uniform(2.0, 12.0, k) / iv.length
        b = rng.uniform(0, 2 * np.pi, k)

        def g(t, a=a, b=b):
            return np.sin(np.asarray(t, dtype=float)[:, None] * a + b)

        wg = float(a.max())
    return InequalityCase(interval=iv, weight=wt, f=f, x=x, U=_random_psd(rng, n), g=g,
                          omega=max(wx, wg))


def random_summation_case(rng: np.random.Generator):
    """``(weights, f, x, U)`` with a full-rank discrete Gram."""
    d = int(rng.integers(1, 5))
    K = int(rng.integers(max(d, 2), 12))
    n = int(rng.integers(1, 4))
    w = rng.uniform(0.1, 2.0, K)
    if K > d and rng.random() < 0.2:
        w[rng.integers(0, K)] = 0.0
    f = rng.standard_normal((K, d))
    while np.linalg.matrix_rank((w[:, None] * f).T @ f) < d:
        f = rng.standard_normal((K, d))
    return w, f, rng.standard_normal((K, n)), _random_psd(rng, n)
