"""LMI conditions for the two-delay system.

Decision variables: ``P`` (``l x l``) and ``Q1, Q2, R1, R2, S1, S2, U1, U2``
(``nu x nu``), plus ``gamma`` when the supply rate carries one.  Constraints:

* ``Phat > 0``  (positivity of the functional),
* ``Q*, R*, S*, U* >= 0``,
* ``Omega_t < 0`` (dissipation inequality after the Schur complement).

The error-integral segments follow the scaling of the augmented form, so
with ``scaling='eta'`` the congruence-scaled variant is produced and no
inverse of an error Gram is ever formed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..basis import boundary
from ..cddsmodel import AugmentedForm, CddsModel
from ..matrixkit import dsum, kron, sy
from .channels import Channel
from .problem import LmiProblem, Variable, build_problem
from .supply import SupplyRate

__all__ = ["Theorem1Data", "theorem1_data", "assemble_theorem1", "SYM_VARS"]

SYM_VARS = ("Q1", "Q2", "R1", "R2", "S1", "S2", "U1", "U2")


@dataclass(frozen=True, eq=False)
class Theorem1Data:
    """Constant matrices shared by the assembly and its cross-checks."""

    aug: AugmentedForm
    r1: float
    r2: float
    G1: np.ndarray
    G2: np.ndarray
    G3: np.ndarray
    G4: np.ndarray
    H1: np.ndarray | None
    H2: np.ndarray | None
    Phi1: np.ndarray
    Phi2: np.ndarray
    Gw1: np.ndarray | None
    Gw2: np.ndarray | None
    F1: np.ndarray
    F2: np.ndarray
    Err1: np.ndarray
    Err2: np.ndarray
    Theta1: np.ndarray
    Theta2: np.ndarray
    Yt: np.ndarray
    AY: np.ndarray

    @property
    def full_positivity(self) -> bool:
        return self.H1 is not None and self.H2 is not None


def _err_block(aug: AugmentedForm, ch: Channel, eta: float) -> np.ndarray:
    mu = ch.approx.mu
    if aug.scaling == "eta":
        return eta * eta * np.eye(mu)
    return ch.approx.error_gram


def theorem1_data(mdl: CddsModel, aug: AugmentedForm, ch1: Channel, ch2: Channel,
                  use_46: str | bool = "auto") -> Theorem1Data:
    """Boundary matrices ``G1..G4``, ``H1, H2`` and the ``Theta`` blocks."""
    r1, r2 = mdl.r1, mdl.r2
    r3 = r2 - r1
    dm = aug.dims
    n, nu, q, d, dl, l = dm["n"], dm["nu"], dm["q"], dm["d"], dm["delta"], dm["l"]
    mu = dm["mu"]
    N = aug.N
    f1, f2 = ch1.basis, ch2.basis
    p1, p2 = ch1.phi, ch2.phi
    k1, k2 = p1.dim, p2.dim
    col = lambda v: np.asarray(v, dtype=float).reshape(-1, 1)

    G1 = np.hstack([col(boundary(p1, 0.0)), -col(boundary(p1, -r1)), np.zeros((k1, 1)),
                    -p1.relation, np.zeros((k1, dl))])
    G2 = np.hstack([np.zeros((k2, 1)), col(boundary(p2, -r1)), -col(boundary(p2, -r2)),
                    np.zeros((k2, d)), -p2.relation])
    G3 = np.hstack([col(boundary(f1, 0.0)), -col(boundary(f1, -r1)), np.zeros((d, 1)),
                    -f1.companion, np.zeros((d, dl))])
    G4 = np.hstack([np.zeros((dl, 1)), col(boundary(f2, -r1)), -col(boundary(f2, -r2)),
                    np.zeros((dl, d)), -f2.companion])

    have_g = ch1.g is not None and ch2.g is not None
    if use_46 is True and not have_g:
        raise ValueError("full positivity condition requested but no weighted "
                         "polynomial family exists for these bases")
    if use_46 == "auto" and not have_g:
        warnings.warn("weighted families unavailable for these bases; "
                      "using the reduced positivity condition", RuntimeWarning, stacklevel=3)
    H1 = H2 = Gw1 = Gw2 = None
    if have_g and use_46 is not False:
        g1, g2 = ch1.g, ch2.g
        H1 = np.hstack([r1 * col(boundary(g1, 0.0)), np.zeros((g1.dim, 2)), -g1.relation,
                        np.zeros((g1.dim, dl))])
        H2 = np.hstack([np.zeros((g2.dim, 1)), r3 * col(boundary(g2, -r1)),
                        np.zeros((g2.dim, 1)), np.zeros((g2.dim, d)), -g2.relation])
        Gw1 = ch1.Ginv()
        Gw2 = ch2.Ginv()

    Pi = aug.Pi
    I = np.eye(nu)
    lay = aug.layout
    eta_cols = slice(lay["x"].start, lay["F2"].stop)
    Theta1 = np.zeros((l, N))
    Theta1[:n] = aug.Abig
    Theta1[n:n + 2 * nu, : 2 * nu] = np.eye(2 * nu)
    Theta1[n + 2 * nu:n + 2 * nu + d * nu, eta_cols] = kron(G3, I) @ Pi
    Theta1[n + 2 * nu + d * nu:, eta_cols] = kron(G4, I) @ Pi
    Theta2 = aug.select("x", "y1", "y2", "F1", "F2")
    Yt = np.zeros((nu, N))
    Yt[:, eta_cols] = aug.Xi
    AY = mdl.mats["A6"] @ aug.Abig + aug.Y
    eta1, eta2 = aug.eta
    return Theorem1Data(
        aug=aug, r1=r1, r2=r2, G1=G1, G2=G2, G3=G3, G4=G4, H1=H1, H2=H2,
        Phi1=ch1.Phi(), Phi2=ch2.Phi(), Gw1=Gw1, Gw2=Gw2,
        F1=ch1.approx.basis_gram_inv, F2=ch2.approx.basis_gram_inv,
        Err1=_err_block(aug, ch1, eta1), Err2=_err_block(aug, ch2, eta2),
        Theta1=Theta1, Theta2=Theta2, Yt=Yt, AY=AY,
    )


def assemble_theorem1(
    mdl: CddsModel,
    aug: AugmentedForm,
    ch1: Channel,
    ch2: Channel,
    supply: SupplyRate,
    use_46: str | bool = "auto",
    margin: float | None = None,
) -> LmiProblem:
    """Build the LMI problem for a two-delay model.

    Parameters
    ----------
    use_46 : {"auto", True, False}
        Whether to include the weighted-family terms in the positivity
        condition.  ``"auto"`` uses them whenever both intervals admit a
        weighted polynomial family.
    margin : float, optional
        Recorded in the problem metadata for the solver layer.
    """
    if mdl.single_delay:
        raise ValueError("use assemble_single_delay for single-delay models")
    td = theorem1_data(mdl, aug, ch1, ch2, use_46)
    dm = aug.dims
    n, nu, m, q, l, N = dm["n"], dm["nu"], dm["m"], dm["q"], dm["l"], aug.N
    if supply.m != m or supply.q != q:
        raise ValueError(f"supply rate is {supply.m}x{supply.q}, model needs {m}x{q}")
    r1, r2 = mdl.r1, mdl.r2
    r3 = r2 - r1
    lay = aug.layout
    eta_cols = slice(lay["x"].start, lay["F2"].stop)
    Pi = aug.Pi
    Sigma = aug.Sigma
    W1 = td.G1.T @ td.Phi1 @ td.G1
    W2 = td.G2.T @ td.Phi2 @ td.G2
    V1 = td.H1.T @ td.Gw1 @ td.H1 if td.full_positivity else None
    V2 = td.H2.T @ td.Gw2 @ td.H2 if td.full_positivity else None
    JtS = supply.Jtil @ Sigma
    has_gamma = supply.objective_var is not None
    pad_n2 = np.zeros((n + 2 * nu, n + 2 * nu))

    def builder(v):
        P = v["P"]
        Q1, Q2, R1, R2 = v["Q1"], v["Q2"], v["R1"], v["R2"]
        S1, S2, U1, U2 = v["S1"], v["S2"], v["U1"], v["U2"]
        J1, J3 = supply.at(v["gamma"][0, 0] if has_gamma else None)
        X = td.Theta2.T @ P @ td.Theta1
        X[:, lay["w"]] -= Sigma.T @ supply.J2
        Om = sy(X)
        Om[eta_cols, eta_cols] -= Pi.T @ (kron(W1, U1) + kron(W2, U2)) @ Pi
        Om -= dsum(S1 - S2 - r3 * U2, S2, J3, np.zeros((n, n)), Q1 - Q2 - r3 * R2, Q2,
                   kron(td.F1, R1), kron(td.F2, R2), kron(td.Err1, R1), kron(td.Err2, R2))
        Om += td.Yt.T @ (Q1 + r1 * R1) @ td.Yt
        SU = S1 + r1 * U1
        Omt = np.block([
            [J1, np.zeros((m, nu)), JtS],
            [np.zeros((nu, m)), -SU, SU @ td.AY],
            [JtS.T, (SU @ td.AY).T, Om],
        ])
        Ph = P + dsum(pad_n2, kron(td.F1, Q1), kron(td.F2, Q2)) \
            + Pi.T @ (kron(W1, S1) + kron(W2, S2)) @ Pi
        if V1 is not None:
            Ph = Ph + Pi.T @ (kron(V1, U1) + kron(V2, U2)) @ Pi
        out = {"Phat": Ph, "Omega": Omt}
        for k in SYM_VARS:
            out[k] = v[k]
        if has_gamma:
            out["gamma"] = v["gamma"]
        return out

    variables = [Variable("P", l)] + [Variable(k, nu) for k in SYM_VARS]
    senses = {"Phat": (">", True), "Omega": ("<", True)}
    senses.update({k: (">", False) for k in SYM_VARS})
    objective = None
    if has_gamma:
        variables.append(Variable("gamma", 1))
        senses["gamma"] = (">", False)
        objective = {"gamma": 1.0}
    meta = dict(kind="theorem1", dims=dict(dm), full_positivity=td.full_positivity,
                margin=margin, scaling=aug.scaling, eta=aug.eta, r1=r1, r2=r2,
                has_gamma=has_gamma)
    return build_problem(variables, builder, senses, objective, meta)
