"""Affine symmetric-matrix expressions and LMI problem containers.

A problem is described by named symmetric matrix variables and a *builder*
function mapping a dict of variable values to a dict of constraint blocks.
Because the builder is affine, its coefficients are recovered by probing it
with the scaled unit basis of each variable's ``svec`` coordinates.  The
same builder is reused to re-evaluate blocks when certifying a solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from ..matrixkit import smat, svec_dim

__all__ = [
    "Variable",
    "AffineExpr",
    "Constraint",
    "LmiProblem",
    "build_problem",
    "count_decision_variables",
]


@dataclass(frozen=True)
class Variable:
    name: str
    dim: int  # a scalar is a 1 x 1 variable

    @property
    def size(self) -> int:
        return svec_dim(self.dim)


@dataclass(frozen=True, eq=False)
class AffineExpr:
    """``const + sum_j x_j * coef[:, j].reshape(k, k)``."""

    const: np.ndarray
    coef: sp.csc_matrix

    @property
    def dim(self) -> int:
        return self.const.shape[0]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        k = self.dim
        v = self.const + (self.coef @ np.asarray(x, dtype=float)).reshape(k, k)
        return 0.5 * (v + v.T)

    @property
    def is_homogeneous(self) -> bool:
        return not np.any(self.const)


@dataclass(frozen=True, eq=False)
class Constraint:
    """``expr >= 0`` (``sense='>'``) or ``expr <= 0`` (``sense='<'``).

    Strict constraints are enforced with a margin by the solver layer.
    """

    name: str
    expr: AffineExpr
    sense: str
    strict: bool

    def standard(self) -> AffineExpr:
        """Orientation with the constraint read as ``G(x) >= 0``."""
        if self.sense == ">":
            return self.expr
        return AffineExpr(-self.expr.const, -self.expr.coef)


@dataclass(frozen=True, eq=False)
class LmiProblem:
    variables: tuple
    constraints: tuple
    objective: np.ndarray | None
    builder: Callable
    meta: dict = field(default_factory=dict)

    @property
    def nvars(self) -> int:
        return sum(v.size for v in self.variables)

    def offsets(self) -> dict:
        out, i = {}, 0
        for v in self.variables:
            out[v.name] = slice(i, i + v.size)
            i += v.size
        return out

    def unpack(self, x: np.ndarray) -> dict:
        """Split a coordinate vector into named symmetric matrices."""
        x = np.asarray(x, dtype=float)
        return {v.name: smat(x[s]) for v, s in zip(self.variables, self.offsets().values())}

    def blocks(self, x: np.ndarray) -> dict:
        """Re-evaluate every constraint block through the builder."""
        return self.builder(self.unpack(x))

    def constraint(self, name: str) -> Constraint:
        for c in self.constraints:
            if c.name == name:
                return c
        raise KeyError(name)


def count_decision_variables(p: LmiProblem) -> int:
    return sum(v.dim * (v.dim + 1) // 2 for v in p.variables)


def _unit(dim: int, idx: int) -> np.ndarray:
    e = np.zeros(svec_dim(dim))
    e[idx] = 1.0
    return smat(e)


def build_problem(
    variables: Sequence[Variable],
    builder: Callable[[dict], dict],
    senses: dict,
    objective: dict | None = None,
    meta: dict | None = None,
) -> LmiProblem:
    """Probe an affine ``builder`` and package the result.

    Parameters
    ----------
    variables : sequence of Variable
    builder : callable
        ``builder(values) -> {name: block}`` with every block affine in the
        variable values.
    senses : dict
        ``name -> (sense, strict)`` with sense ``'>'`` or ``'<'``; defines
        the constraint order.
    objective : dict, optional
        ``variable name -> weight`` for scalar variables (minimised).
    """
    variables = tuple(variables)
    zeros = {v.name: np.zeros((v.dim, v.dim)) for v in variables}
    base = builder(zeros)
    names = list(senses)
    consts = {k: 0.5 * (np.asarray(base[k]) + np.asarray(base[k]).T) for k in names}
    rows = {k: [] for k in names}
    cols = {k: [] for k in names}
    vals = {k: [] for k in names}
    j = 0
    for v in variables:
        for idx in range(v.size):
            probe = dict(zeros)
            probe[v.name] = _unit(v.dim, idx)
            out = builder(probe)
            for k in names:
                diff = np.asarray(out[k]) - consts[k]
                diff = 0.5 * (diff + diff.T)
                nz = np.flatnonzero(diff)
                if nz.size:
                    rows[k].append(nz)
                    cols[k].append(np.full(nz.size, j))
                    vals[k].append(diff.ravel()[nz])
            j += 1
    nv = j
    cons = []
    for k in names:
        kk = consts[k].shape[0]
        if rows[k]:
            coef = sp.csc_matrix((np.concatenate(vals[k]),
                                  (np.concatenate(rows[k]), np.concatenate(cols[k]))),
                                 shape=(kk * kk, nv))
        else:
            coef = sp.csc_matrix((kk * kk, nv))
        sense, strict = senses[k]
        cons.append(Constraint(k, AffineExpr(consts[k], coef), sense, strict))
    obj = None
    if objective:
        obj = np.zeros(nv)
        off = 0
        for v in variables:
            if v.name in objective:
                if v.dim != 1:
                    raise ValueError("objective weights apply to scalar variables only")
                obj[off] = objective[v.name]
            off += v.size
    return LmiProblem(variables=variables, constraints=tuple(cons), objective=obj,
                      builder=builder, meta=dict(meta or {}))
