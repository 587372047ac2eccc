"""Hierarchy checks: error Gram ladders, rank-one block updates and nesting.

Growing a family by one orthogonal function changes the assembled blocks by
a rank-one term.  These helpers measure that exactly on the assembled
matrices and re-solve feasibility along a delay grid to observe that the
feasible sets only grow.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..basis import legendre_basis, parse_basis_spec
from ..cddsmodel import CddsModel, build_augmented
from ..kernelapprox import ResidualFamily, hierarchy_step
from ..matrixkit import kron
from ..quadrature import Interval, Weight
from .channels import Channel, prepare_channel
from .supply import SupplyRate, supply_preset
from .problem import count_decision_variables
from .theorem1 import assemble_theorem1, theorem1_data

__all__ = [
    "LadderReport",
    "RankOneReport",
    "HierarchyReport",
    "e_ladder",
    "check_orthogonal",
    "rank_one_update",
    "hierarchy_probe",
]


@dataclass
class LadderReport:
    degrees: list
    min_eig_diffs: list
    rank_one_residuals: list

    @property
    def worst(self) -> float:
        return min(self.min_eig_diffs) if self.min_eig_diffs else float("inf")


def e_ladder(residuals: ResidualFamily, iv: Interval, dmax: int,
             weight: Weight | None = None, tol: float = 1e-13) -> LadderReport:
    """``min_eig(E_d - E_{d+1})`` for Legendre degrees ``0..dmax``."""
    rep = LadderReport([], [], [])
    for d in range(dmax + 1):
        st = hierarchy_step(residuals, legendre_basis(d, iv), legendre_basis(d + 1, iv),
                            tol=tol, weight=weight)
        rep.degrees.append(d)
        rep.min_eig_diffs.append(st.min_eig_diff)
        rep.rank_one_residuals.append(st.rank_one_residual)
    return rep


def check_orthogonal(fam, rtol: float = 1e-10) -> None:
    """Raise if the Gram of ``fam`` (under its own weight) is not diagonal."""
    G = fam.gram()
    if G.size == 0:
        return
    off = np.abs(G - np.diag(np.diag(G))).max()
    if off > rtol * np.trace(G):
        raise ValueError(f"family {fam.label} is not orthogonal (off-diagonal {off:.3e})")


def _channel2(mdl: CddsModel, basis2, phi_dim=None, g_dim=None, check="warn") -> Channel:
    k2 = {"A5": mdl.kernels["A5"], "C5": mdl.kernels["C5"]}
    return prepare_channel(basis2, k2, mdl.nu, mdl.residuals2, phi_dim=phi_dim,
                           g_dim=g_dim, weight_offset=mdl.r2, check=check)


def _channel1(mdl: CddsModel, basis1, check="warn") -> Channel:
    k1 = {"A4": mdl.kernels["A4"], "C4": mdl.kernels["C4"]}
    return prepare_channel(basis1, k1, mdl.nu, mdl.residuals1, weight_offset=mdl.r1, check=check)


@dataclass
class RankOneReport:
    """Residuals of the rank-one identities for one growth step.

    ``block``: the constant block (``G2^T Phi G2`` or ``H2^T Ginv H2``).
    ``omega``/``phat``: the assembled matrices at a random assignment.
    """

    which: str
    dim: int
    block: float
    omega: float
    phat: float

    @property
    def worst(self) -> float:
        return max(self.block, self.omega, self.phat)


def rank_one_update(mdl: CddsModel, spec1: str, spec2: str, which: str, dim: int,
                    supply: SupplyRate | None = None, seed: int = 0) -> RankOneReport:
    """Compare the assembled blocks at family dimension ``dim`` and ``dim + 1``.

    ``which='kappa'`` grows the unit family on the second interval,
    ``which='p'`` the weighted polynomial family there.
    """
    b1 = parse_basis_spec(spec1, Interval(-mdl.r1, 0.0))
    b2 = parse_basis_spec(spec2, Interval(-mdl.r2, -mdl.r1))
    if supply is None:
        mdl = mdl.autonomous()
        supply = supply_preset("none", 0, 0)
    ch1 = _channel1(mdl, b1)
    if which == "kappa":
        lo, hi = (_channel2(mdl, b2, phi_dim=k) for k in (dim, dim + 1))
        fam = hi.phi
    elif which == "p":
        lo, hi = (_channel2(mdl, b2, g_dim=k) for k in (dim, dim + 1))
        if hi.g is None:
            raise ValueError(f"no weighted family of dimension {dim + 1} over {b2.label}")
        fam = hi.g
    else:
        raise ValueError("which must be 'kappa' or 'p'")
    check_orthogonal(fam)

    aug = build_augmented(mdl, ch1.decomposition, ch1.approx, lo.decomposition, lo.approx)
    use = True if which == "p" else "auto"
    t_lo = theorem1_data(mdl, aug, ch1, lo, use_46=use)
    t_hi = theorem1_data(mdl, aug, ch1, hi, use_46=use)
    if which == "kappa":
        B_lo = t_lo.G2.T @ t_lo.Phi2 @ t_lo.G2
        B_hi = t_hi.G2.T @ t_hi.Phi2 @ t_hi.G2
        row = t_hi.G2[-1]
    else:
        B_lo = t_lo.H2.T @ t_lo.Gw2 @ t_lo.H2
        B_hi = t_hi.H2.T @ t_hi.Gw2 @ t_hi.H2
        row = t_hi.H2[-1]
    psi = 1.0 / fam.gram()[-1, -1]
    upd = psi * np.outer(row, row)
    scale = max(1.0, np.abs(B_hi).max())
    block = float(np.abs(B_hi - B_lo - upd).max() / scale)

    p_lo = assemble_theorem1(mdl, aug, ch1, lo, supply, use_46=use)
    p_hi = assemble_theorem1(mdl, aug, ch1, hi, supply, use_46=use)
    rng = np.random.default_rng(seed)
    vals = {}
    for v in p_lo.variables:
        X = rng.standard_normal((v.dim, v.dim))
        vals[v.name] = X @ X.T / max(v.dim, 1)
    out_lo, out_hi = p_lo.builder(vals), p_hi.builder(vals)
    Pi = aug.Pi
    lay = aug.layout
    eta_cols = slice(lay["x"].start, lay["F2"].stop)
    U2, S2 = vals["U2"], vals["S2"]
    m, nu = supply.m, mdl.nu
    k = m + nu
    dO = np.asarray(out_hi["Omega"]) - np.asarray(out_lo["Omega"])
    expect_O = np.zeros_like(dO)
    if which == "kappa":
        blk = Pi.T @ kron(upd, U2) @ Pi
        expect_O[k + eta_cols.start:k + eta_cols.stop, k + eta_cols.start:k + eta_cols.stop] = -blk
        expect_P = Pi.T @ kron(upd, S2) @ Pi
    else:
        expect_P = Pi.T @ kron(upd, U2) @ Pi
    dP = np.asarray(out_hi["Phat"]) - np.asarray(out_lo["Phat"])
    sO = max(1.0, np.abs(np.asarray(out_hi["Omega"])).max())
    sP = max(1.0, np.abs(np.asarray(out_hi["Phat"])).max())
    return RankOneReport(which=which, dim=dim, block=block,
                         omega=float(np.abs(dO - expect_O).max() / sO),
                         phat=float(np.abs(dP - expect_P).max() / sP))


@dataclass
class HierarchyReport:
    which: str
    dims: list
    grid: list
    status: dict = field(default_factory=dict)  # (delay, dim) -> status string
    nodv: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    @property
    def nested(self) -> bool:
        return not self.violations

    def feasible_set(self, dim) -> list:
        return [r for r in self.grid if self.status[(r, dim)] == "feasible"]


def hierarchy_probe(mdl: CddsModel, spec1: str, spec2: str, which: str, dims,
                    grid, supply: SupplyRate | None = None, margin: float = 1e-7,
                    tol: float = 1e-8) -> HierarchyReport:
    """Feasibility along a grid of second delays ``r2`` for growing families.

    A point that is feasible at one dimension and not at a larger one is
    recorded in ``violations``.
    """
    from ..sdpcore import decide, minimize  # sdpcore imports lmisynth

    dims = sorted(dims)
    rep = HierarchyReport(which=which, dims=list(dims), grid=list(grid))
    if supply is None:
        base = mdl.autonomous()
        supply = supply_preset("none", 0, 0)
    else:
        base = mdl
    for r2 in grid:
        m = base.with_delays(base.r1, r2)
        b1 = parse_basis_spec(spec1, Interval(-m.r1, 0.0))
        b2 = parse_basis_spec(spec2, Interval(-m.r2, -m.r1))
        ch1 = _channel1(m, b1)
        for k in dims:
            if which == "kappa":
                ch2 = _channel2(m, b2, phi_dim=k)
                check_orthogonal(ch2.phi)
                use = "auto"
            elif which == "p":
                ch2 = _channel2(m, b2, g_dim=k)
                if ch2.g is None:
                    raise ValueError(f"no weighted family of dimension {k}")
                check_orthogonal(ch2.g)
                use = True
            else:
                raise ValueError("which must be 'kappa' or 'p'")
            aug = build_augmented(m, ch1.decomposition, ch1.approx, ch2.decomposition, ch2.approx)
            p = assemble_theorem1(m, aug, ch1, ch2, supply, use_46=use)
            rep.nodv[k] = count_decision_variables(p)
            out = minimize(p, margin, tol) if p.objective is not None else decide(p, margin, tol)
            rep.status[(r2, k)] = out.status
        seen_feasible = False
        for k in dims:
            ok = rep.status[(r2, k)] in ("feasible", "objective_optimal")
            if seen_feasible and not ok:
                rep.violations.append((r2, k))
            seen_feasible = seen_feasible or ok
    return rep
