"""Characteristic roots by Chebyshev collocation of the infinitesimal generator.

The state is ``x(t)`` together with the history of ``y`` on ``[-r_max, 0]``,
sampled at Chebyshev extreme points.  ``y(t)`` itself is eliminated through
the difference equation, delayed values come from barycentric interpolation
and distributed terms use Clenshaw-Curtis weights.  The eigenvalues of the
resulting matrix approximate the rightmost characteristic roots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .cddsmodel import CddsModel
from .quadrature import clenshaw_curtis_weights

__all__ = [
    "SpectrumError",
    "SpectrumRequest",
    "SpectrumResult",
    "cheb_nodes",
    "cheb_diff",
    "bary_row",
    "generator_matrix",
    "rightmost_roots",
    "SweepRow",
    "SweepResult",
    "stability_margin_sweep",
]


class SpectrumError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectrumRequest:
    model: CddsModel
    mesh: int = 200
    window: int = 6
    force: bool = False

    def __post_init__(self):
        if self.mesh < 8:
            raise ValueError("mesh must be >= 8")


@dataclass
class SpectrumResult:
    roots: np.ndarray
    rightmost_real: float
    mesh_used: int
    converged: bool
    change: float


def cheb_nodes(M: int, tau: float) -> np.ndarray:
    """``M + 1`` extreme points on ``[-tau, 0]``, from ``0`` down to ``-tau``."""
    x = np.cos(np.pi * np.arange(M + 1) / M)
    return 0.5 * tau * (x - 1.0)


def cheb_diff(M: int, tau: float) -> np.ndarray:
    """Differentiation matrix on :func:`cheb_nodes` (negative-sum diagonal)."""
    x = np.cos(np.pi * np.arange(M + 1) / M)
    c = np.ones(M + 1)
    c[0] = c[M] = 2.0
    c *= (-1.0) ** np.arange(M + 1)
    X = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (X + np.eye(M + 1))
    D -= np.diag(D.sum(axis=1))
    return D * (2.0 / tau)


def _bary_weights(M: int) -> np.ndarray:
    w = (-1.0) ** np.arange(M + 1)
    w[0] *= 0.5
    w[M] *= 0.5
    return w


def bary_row(nodes: np.ndarray, t: float, w: np.ndarray | None = None) -> np.ndarray:
    """Row ``l`` with ``p(t) = l @ p(nodes)`` for the interpolant on Chebyshev nodes."""
    if w is None:
        w = _bary_weights(len(nodes) - 1)
    diff = t - nodes
    hit = np.flatnonzero(np.abs(diff) <= 1e-14 * max(1.0, abs(t)))
    row = np.zeros(len(nodes))
    if hit.size:
        row[hit[0]] = 1.0
        return row
    q = w / diff
    return q / q.sum()


def _integral_rows(K, lo: float, hi: float, nodes: np.ndarray, tau: float, M: int,
                   cc_w: np.ndarray, bw: np.ndarray) -> list:
    """Per-node matrices ``B_j`` with ``int_lo^hi K(s) p(s) ds = sum_j B_j y_j``."""
    rows, cols = K.shape
    out = [np.zeros((rows, cols)) for _ in range(M + 1)]
    if K.is_zero or hi <= lo:
        return out
    if abs(lo + tau) <= 1e-14 * tau and abs(hi) <= 1e-14 * tau:
        Kv = K(nodes)
        for j in range(M + 1):
            out[j] = 0.5 * tau * cc_w[j] * Kv[j]
        return out
    # subinterval: Clenshaw-Curtis on its own nodes, values by interpolation
    x, w = clenshaw_curtis_weights(M)
    s = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x
    Kv = K(s)
    L = np.array([bary_row(nodes, si, bw) for si in s])
    for i in range(len(s)):
        wi = 0.5 * (hi - lo) * w[i]
        for j in np.flatnonzero(L[i]):
            out[j] = out[j] + wi * L[i, j] * Kv[i]
    return out


def generator_matrix(mdl: CddsModel, M: int) -> np.ndarray:
    """Dense ``(n + M nu)``-square discretization of the generator.

    Unknowns: ``x(t)`` then ``y(t + theta_j)`` for ``j = 1..M``.
    """
    n, nu = mdl.n, mdl.nu
    A = mdl.mats
    r1 = mdl.r1
    r2 = mdl.r2 if mdl.r2 is not None else r1
    tau = r2
    nodes = cheb_nodes(M, tau)
    D = cheb_diff(M, tau)
    bw = _bary_weights(M)
    _, cc_w = clenshaw_curtis_weights(M)
    l1 = bary_row(nodes, -r1, bw)
    l2 = bary_row(nodes, -r2, bw)
    A7 = A["A7"]
    A8 = A["A8"] if mdl.r2 is not None else np.zeros((nu, nu))

    # y(t) = A6 x + A7 y(-r1) + A8 y(-r2), solved for y_0
    lhs = np.eye(nu) - l1[0] * A7 - l2[0] * A8
    if np.linalg.cond(lhs) > 1e12:
        raise SpectrumError("difference equation is singular at the current node")
    size = n + M * nu
    rhs = np.zeros((nu, size))
    rhs[:, :n] = A["A6"]
    for j in range(1, M + 1):
        rhs[:, n + (j - 1) * nu:n + j * nu] = l1[j] * A7 + l2[j] * A8
    Y0 = np.linalg.solve(lhs, rhs)

    # Ymap[j] maps the unknowns to y_j for j = 0..M
    Ymap = [Y0]
    for j in range(1, M + 1):
        E = np.zeros((nu, size))
        E[:, n + (j - 1) * nu:n + j * nu] = np.eye(nu)
        Ymap.append(E)
    Yall = np.stack(Ymap)  # (M+1, nu, size)

    def delayed(row):
        return np.tensordot(row, Yall, axes=(0, 0))

    out = np.zeros((size, size))
    xdot = np.zeros((n, size))
    xdot[:, :n] += A["A1"]
    xdot += A["A2"] @ delayed(l1)
    if mdl.r2 is not None:
        xdot += A["A3"] @ delayed(l2)
    for B, j in zip(_integral_rows(mdl.kernels["A4"], -r1, 0.0, nodes, tau, M, cc_w, bw),
                    range(M + 1)):
        if np.any(B):
            xdot += B @ Yall[j]
    if mdl.r2 is not None:
        for B, j in zip(_integral_rows(mdl.kernels["A5"], -r2, -r1, nodes, tau, M, cc_w, bw),
                        range(M + 1)):
            if np.any(B):
                xdot += B @ Yall[j]
    out[:n] = xdot
    # history rows: d/dt y(t + theta_j) = d/dtheta y at theta_j
    for j in range(1, M + 1):
        out[n + (j - 1) * nu:n + j * nu] = np.tensordot(D[j], Yall, axes=(0, 0))
    return out


def _rightmost(mdl: CddsModel, M: int, window: int) -> np.ndarray:
    ev = np.linalg.eigvals(generator_matrix(mdl, M))
    order = np.lexsort((-ev.imag, -ev.real))
    return ev[order][:window]


def rightmost_roots(req: SpectrumRequest, tol: float = 1e-6, check: bool = True) -> SpectrumResult:
    """Rightmost roots at mesh ``M``, confirmed at ``ceil(1.5 M)``.

    Raises :class:`SpectrumError` when the rightmost real part moves by
    ``tol`` or more between the meshes and ``check`` is set; otherwise the
    result carries ``converged=False``.
    """
    mdl = req.model
    if not mdl.difference_free and not req.force:
        raise SpectrumError(
            "model couples y through A7/A8; the collocation oracle is only validated "
            "for A7 = A8 = 0 (set force to run it anyway)")
    M = req.mesh
    a = _rightmost(mdl, M, max(req.window, 1))
    b = _rightmost(mdl, math.ceil(1.5 * M), 1)
    change = abs(a[0].real - b[0].real)
    ok = bool(change < tol)
    if check and not ok:
        raise SpectrumError(
            f"rightmost root not converged: {a[0].real:.9g} at M={M} vs "
            f"{b[0].real:.9g} at M={math.ceil(1.5 * M)}")
    return SpectrumResult(roots=a[: req.window], rightmost_real=float(a[0].real),
                          mesh_used=M, converged=ok, change=float(change))


@dataclass
class SweepRow:
    r: float
    rightmost_real: float
    converged: bool


@dataclass
class SweepResult:
    rows: list
    intervals: list  # (lo, hi) of stable stretches, endpoints refined
    crossings: list

    def to_csv(self) -> str:
        lines = ["r,rightmost_real,converged"]
        for row in self.rows:
            lines.append(f"{row.r:.6g},{row.rightmost_real:.12g},{int(row.converged)}")
        return "\n".join(lines) + "\n"


def stability_margin_sweep(family: Callable[[float], CddsModel] | CddsModel,
                           grid: Sequence[float], M: int = 200, width: float = 1e-3,
                           tol: float = 1e-6, force: bool = False) -> SweepResult:
    """Rightmost real part along ``grid``; stable stretches refined by bisection.

    ``family`` maps a delay value to a model; a single-delay model is
    accepted directly and swept over its delay.
    """
    if isinstance(family, CddsModel):
        base = family
        family = lambda r: base.with_delays(r)  # noqa: E731
    grid = [float(r) for r in grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly ascending")

    def val(r):
        res = rightmost_roots(SpectrumRequest(family(r), M, 1, force), tol=tol, check=False)
        return res.rightmost_real, res.converged

    rows = []
    for r in grid:
        v, ok = val(r)
        rows.append(SweepRow(r, v, ok))
    crossings = []
    for a, b in zip(rows, rows[1:]):
        if (a.rightmost_real < 0) != (b.rightmost_real < 0):
            lo, hi = a.r, b.r
            slo = a.rightmost_real < 0
            while hi - lo > width:
                mid = 0.5 * (lo + hi)
                if (val(mid)[0] < 0) == slo:
                    lo = mid
                else:
                    hi = mid
            crossings.append(0.5 * (lo + hi))
    intervals = []
    start = grid[0] if rows and rows[0].rightmost_real < 0 else None
    ci = iter(crossings)
    for a, b in zip(rows, rows[1:]):
        if (a.rightmost_real < 0) != (b.rightmost_real < 0):
            c = next(ci)
            if a.rightmost_real < 0:
                intervals.append((start, c))
                start = None
            else:
                start = c
    if start is not None:
        intervals.append((start, grid[-1]))
    return SweepResult(rows=rows, intervals=intervals, crossings=crossings)
