"""Independent derivation of the dissipation matrix.

The matrix is rebuilt by differentiating each term of the functional along
the system, writing every signal as a row map acting on the augmented
vector.  Only the model matrices, the bases and the kernel decompositions
are used; the augmented form and the boundary matrices of the assembly are
not.  Error integrals are taken with the ``E^{-1} eps`` weights, so the
result is compared with the assembled matrix after the congruence that
undoes the ``eta`` scaling.
"""

from __future__ import annotations

import numpy as np

from ..cddsmodel import CddsModel
from ..matrixkit import sym_sqrt
from .channels import Channel
from .problem import LmiProblem
from .supply import SupplyRate

__all__ = ["dissipation_form", "assembled_dissipation_form", "crosscheck_omega"]


class _Signals:
    """Row maps ``theta -> signal`` on the layout dy1, dy2, w, x, y1, y2, F1, F2, E1, E2."""

    def __init__(self, mdl: CddsModel, ch1: Channel, ch2: Channel):
        n, nu, q = mdl.n, mdl.nu, mdl.q
        d, dl = ch1.basis.dim, ch2.basis.dim
        mu1, mu2 = ch1.approx.mu, ch2.approx.mu
        sizes = [("dy1", nu), ("dy2", nu), ("w", q), ("x", n), ("y1", nu), ("y2", nu),
                 ("F1", d * nu), ("F2", dl * nu), ("E1", mu1 * nu), ("E2", mu2 * nu)]
        self.off = {}
        i = 0
        for k, s in sizes:
            self.off[k] = (i, s)
            i += s
        self.N = i

    def sel(self, name: str) -> np.ndarray:
        i, s = self.off[name]
        out = np.zeros((s, self.N))
        out[:, i:i + s] = np.eye(s)
        return out


def _kernel_map(sig: _Signals, coeff: np.ndarray, ch: Channel, nu: int, F: str, E: str):
    """Row map of ``int K(s) y(t+s) ds`` from the decomposition coefficients.

    ``K (phi (x) I) = coeff[:, :mu nu]`` and ``phi = Gamma f + E (E^{-1} eps)``.
    """
    mu = ch.approx.mu
    Cphi = coeff[:, : mu * nu]
    Cf = coeff[:, mu * nu:]
    out = Cf @ sig.sel(F)
    if mu:
        for a in range(mu):
            blk = Cphi[:, a * nu:(a + 1) * nu]
            for b in range(ch.basis.dim):
                out = out + ch.approx.gamma[a, b] * blk @ sig.sel(F)[b * nu:(b + 1) * nu]
            for b in range(mu):
                out = out + ch.approx.error_gram[a, b] * blk @ sig.sel(E)[b * nu:(b + 1) * nu]
    return out


def _integral_of_derivative(fam, lo_pt, hi_pt, y_hi, y_lo, Fsel, nu, relation):
    """``int fam(s) (x) y'(t+s) ds`` by parts: boundary terms minus ``(relation (x) I) F``."""
    a = np.asarray(fam(np.array([hi_pt])))[0]
    b = np.asarray(fam(np.array([lo_pt])))[0]
    return np.kron(a[:, None], y_hi) - np.kron(b[:, None], y_lo) - np.kron(relation, np.eye(nu)) @ Fsel


def dissipation_form(mdl: CddsModel, ch1: Channel, ch2: Channel, supply: SupplyRate,
                     values: dict) -> np.ndarray:
    """Upper bound matrix of ``dv/dt - s(z, w)`` at fixed variable values.

    ``values`` holds ``P, Q1, Q2, R1, R2, S1, S2, U1, U2`` (and ``gamma`` for
    a parameterized supply).  Error integrals use ``E^{-1} eps`` weights.
    """
    M = mdl.mats
    nu = mdl.nu
    r1, r2 = mdl.r1, mdl.r2
    sig = _Signals(mdl, ch1, ch2)
    sel = sig.sel
    g = values.get("gamma")
    J1, J3 = supply.at(float(np.asarray(g).ravel()[0]) if g is not None else None)

    x, y1, y2, w = sel("x"), sel("y1"), sel("y2"), sel("w")
    dy1, dy2 = sel("dy1"), sel("dy2")
    y0 = M["A6"] @ x + M["A7"] @ y1 + M["A8"] @ y2
    int4 = _kernel_map(sig, ch1.decomposition.coeffs["A4"], ch1, nu, "F1", "E1")
    int5 = _kernel_map(sig, ch2.decomposition.coeffs["A5"], ch2, nu, "F2", "E2")
    xdot = M["A1"] @ x + M["A2"] @ y1 + M["A3"] @ y2 + int4 + int5 + M["D1"] @ w
    ydot0 = M["A6"] @ xdot + M["A7"] @ dy1 + M["A8"] @ dy2
    lz4 = _kernel_map(sig, ch1.decomposition.coeffs["C4"], ch1, nu, "F1", "E1")
    lz5 = _kernel_map(sig, ch2.decomposition.coeffs["C5"], ch2, nu, "F2", "E2")
    z = (M["C1"] @ x + M["C2"] @ y1 + M["C3"] @ y2 + lz4 + lz5 + M["C6"] @ dy1
         + M["C7"] @ dy2 + M["D2"] @ w)

    f1, f2 = ch1.basis, ch2.basis
    F1dot = _integral_of_derivative(f1, -r1, 0.0, y0, y1, sel("F1"), nu, f1.companion)
    F2dot = _integral_of_derivative(f2, -r2, -r1, y1, y2, sel("F2"), nu, f2.companion)
    eta = np.vstack([x, y1, y2, sel("F1"), sel("F2")])
    etadot = np.vstack([xdot, dy1, dy2, F1dot, F2dot])

    P = values["P"]
    Q1, Q2, R1, R2 = values["Q1"], values["Q2"], values["R1"], values["R2"]
    S1, S2, U1, U2 = values["S1"], values["S2"], values["U1"], values["U2"]
    quad = lambda L, X, Rr=None: L.T @ X @ (L if Rr is None else Rr)

    # d/dt of eta^T P eta
    out = quad(eta, P, etadot) + quad(etadot, P, eta)
    # int_{-r1}^0 y^T (Q1 + (s + r1) R1) y
    out += quad(y0, Q1 + r1 * R1) - quad(y1, Q1)
    # int_{-r2}^{-r1} y^T (Q2 + (s + r2) R2) y; weight at s = -r1 is r2 - r1
    out += quad(y1, Q2 + (-r1 + r2) * R2) - quad(y2, Q2)
    # the same two pieces for y'
    out += quad(ydot0, S1 + r1 * U1) - quad(dy1, S1)
    out += quad(dy1, S2 + (-r1 + r2) * U2) - quad(dy2, S2)

    # -int y^T R y bounded through the basis and error projections
    Fg1 = np.linalg.inv(f1.gram())
    Fg2 = np.linalg.inv(f2.gram())
    out -= quad(sel("F1"), np.kron(Fg1, R1)) + quad(sel("F2"), np.kron(Fg2, R2))
    if ch1.approx.mu:
        out -= quad(sel("E1"), np.kron(ch1.approx.error_gram, R1))
    if ch2.approx.mu:
        out -= quad(sel("E2"), np.kron(ch2.approx.error_gram, R2))
    # -int y'^T U y' bounded through the phi projections
    p1, p2 = ch1.phi, ch2.phi
    Z1 = _integral_of_derivative(p1, -r1, 0.0, y0, y1, sel("F1"), nu, p1.relation)
    Z2 = _integral_of_derivative(p2, -r2, -r1, y1, y2, sel("F2"), nu, p2.relation)
    out -= quad(Z1, np.kron(np.linalg.inv(p1.gram()), U1))
    out -= quad(Z2, np.kron(np.linalg.inv(p2.gram()), U2))

    # minus the supply rate
    if supply.m:
        W = supply.Jtil.T @ np.linalg.inv(J1) @ supply.Jtil
        out -= quad(z, W)
        out -= quad(z, supply.J2, w) + quad(w, supply.J2.T, z)
    if supply.q:
        out -= quad(w, J3)
    return 0.5 * (out + out.T)


def assembled_dissipation_form(p: LmiProblem, values: dict, m: int, nu: int) -> np.ndarray:
    """Schur complement of the assembled ``Omega_t`` onto its last block."""
    Ot = np.asarray(p.builder(values)["Omega"], dtype=float)
    k = m + nu
    A = Ot[:k, :k]
    B = Ot[:k, k:]
    return Ot[k:, k:] - B.T @ np.linalg.solve(A, B)


def crosscheck_omega(mdl: CddsModel, ch1: Channel, ch2: Channel, supply: SupplyRate,
                     p: LmiProblem, values: dict, scaling: str = "eta",
                     eta: tuple = (1.0, 1.0)) -> float:
    """Largest entrywise difference between the two derivations, relative to scale."""
    ref = dissipation_form(mdl, ch1, ch2, supply, values)
    got = assembled_dissipation_form(p, values, supply.m, mdl.nu)
    if scaling == "eta":
        # map the assembled form back to E^{-1} eps weights; T = eta^{-1} E^{1/2}
        # on the error columns is well conditioned, its inverse is not
        T = np.eye(ref.shape[0])
        nu = mdl.nu
        sig = _Signals(mdl, ch1, ch2)
        for nm, ch, e in (("E1", ch1, eta[0]), ("E2", ch2, eta[1])):
            i, s = sig.off[nm]
            if s:
                T[i:i + s, i:i + s] = np.kron(sym_sqrt(ch.approx.error_gram) / e, np.eye(nu))
        got = T.T @ got @ T
    scale = max(1.0, np.abs(ref).max())
    return float(np.abs(ref - got).max() / scale)
