"""LMI conditions for a single-delay model.

Layout of the augmented signal: ``w, x, y1, F1, E1``.  The functional acts
on ``(x, F1)`` with ``F1 = int f(s) (x) y(t+s) ds``.
"""

from __future__ import annotations

import numpy as np

from ..basis import boundary
from ..cddsmodel import AugmentedForm, CddsModel
from ..matrixkit import dsum, kron, sy
from .channels import Channel
from .problem import LmiProblem, Variable, build_problem
from .supply import SupplyRate

__all__ = ["single_delay_theta", "assemble_single_delay"]


def single_delay_theta(mdl: CddsModel, aug: AugmentedForm, ch: Channel):
    """``(Theta1, Theta2, Yt)``: derivative map, state selector, ``y(t)`` selector."""
    dm = aug.dims
    n, nu, d, l, N = dm["n"], dm["nu"], dm["d"], dm["l"], aug.N
    lay = aug.layout
    f = ch.basis
    I = np.eye(nu)
    Yt = np.zeros((nu, N))
    Yt[:, lay["x"]] = mdl.mats["A6"]
    Yt[:, lay["y1"]] = mdl.mats["A7"]
    f0 = np.asarray(boundary(f, 0.0), dtype=float).reshape(-1, 1)
    fr = np.asarray(boundary(f, -mdl.r1), dtype=float).reshape(-1, 1)
    dF = kron(f0, I) @ Yt - kron(fr, I) @ aug.select("y1") - kron(f.companion, I) @ aug.select("F1")
    Theta1 = np.vstack([aug.Abig, dF])
    Theta2 = aug.select("x", "F1")
    assert Theta1.shape == (l, N)
    return Theta1, Theta2, Yt


def assemble_single_delay(
    mdl: CddsModel,
    aug: AugmentedForm,
    ch: Channel,
    supply: SupplyRate,
    margin: float | None = None,
) -> LmiProblem:
    """Build the LMI problem for a single-delay model.

    Variables ``P`` (``n + d nu``), ``Q`` and ``R`` (``nu``), and ``gamma``
    when the supply rate carries one.
    """
    if not mdl.single_delay:
        raise ValueError("model has two delays; use assemble_theorem1")
    dm = aug.dims
    n, nu, m, q, l = dm["n"], dm["nu"], dm["m"], dm["q"], dm["l"]
    if supply.m != m or supply.q != q:
        raise ValueError(f"supply rate is {supply.m}x{supply.q}, model needs {m}x{q}")
    r = mdl.r1
    lay = aug.layout
    Theta1, Theta2, Yt = single_delay_theta(mdl, aug, ch)
    F = ch.approx.basis_gram_inv
    mu = ch.approx.mu
    if aug.scaling == "eta":
        Err = aug.eta[0] ** 2 * np.eye(mu)
    else:
        Err = ch.approx.error_gram
    Sigma = aug.Sigma
    JtS = supply.Jtil @ Sigma
    has_gamma = supply.objective_var is not None

    def builder(v):
        P, Q, R = v["P"], v["Q"], v["R"]
        J1, J3 = supply.at(v["gamma"][0, 0] if has_gamma else None)
        X = Theta2.T @ P @ Theta1
        X[:, lay["w"]] -= Sigma.T @ supply.J2
        Om = sy(X) - dsum(J3, np.zeros((n, n)), Q, kron(F, R), kron(Err, R))
        Om += Yt.T @ (Q + r * R) @ Yt
        Omt = np.block([[J1, JtS], [JtS.T, Om]])
        Ph = P + dsum(np.zeros((n, n)), kron(F, Q))
        out = {"Phat": Ph, "Omega": Omt, "Q": Q, "R": R}
        if has_gamma:
            out["gamma"] = v["gamma"]
        return out

    variables = [Variable("P", l), Variable("Q", nu), Variable("R", nu)]
    senses = {"Phat": (">", True), "Omega": ("<", True), "Q": (">", False), "R": (">", False)}
    objective = None
    if has_gamma:
        variables.append(Variable("gamma", 1))
        senses["gamma"] = (">", False)
        objective = {"gamma": 1.0}
    meta = dict(kind="single", dims=dict(dm), margin=margin, scaling=aug.scaling,
                eta=aug.eta, r1=r, has_gamma=has_gamma)
    return build_problem(variables, builder, senses, objective, meta)
