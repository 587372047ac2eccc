"""Semidefinite programming back end.

A :class:`ConicProgram` is the scalarized image of an LMI problem::

    minimize  c^T x   subject to   G_i(x) = C_i + sum_j x_j A_ij  >= 0.

Programs are solved with the primal-dual interior-point cone solver from
``cvxopt``.  Feasibility questions are posed as the slack problem
``max t  s.t.  G_i(x) >= t I`` (strict blocks only), with the scale fixed by
``sum_i tr G_i(x) <= 1`` for homogeneous programs and ``t <= 1`` otherwise.
Every positive answer is rechecked by re-evaluating the blocks.

Export and import use the sparse SDPA format, whose convention is
``sum_j F_j x_j - F_0 >= 0`` so that ``F_0 = -C``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .lmisynth.problem import LmiProblem
from .matrixkit import min_eig

__all__ = [
    "ConicProgram",
    "SdpOutcome",
    "CertificateReport",
    "scalarize",
    "solve",
    "decide",
    "minimize",
    "certify",
    "export_sdpa",
    "read_sdpa",
    "format_sdpa",
]

FEASIBLE = "feasible"
INFEASIBLE = "infeasible_certificate"
OPTIMAL = "objective_optimal"
FAILURE = "numerical_failure"


@dataclass(frozen=True, eq=False)
class ConicProgram:
    """Blocks ``G_i(x) = consts[i] + (coefs[i] @ x).reshape(k, k)``.

    ``scales`` are the positive factors already applied to each block, so
    the unscaled block is ``G_i / scales[i]``.
    """

    nvars: int
    dims: tuple
    consts: tuple
    coefs: tuple
    objective: np.ndarray
    strict: tuple = ()
    diagonal: tuple = ()
    scales: tuple = ()
    names: tuple = ()

    def __post_init__(self):
        k = len(self.dims)
        if any(d <= 0 for d in self.dims):
            raise ValueError("block dimensions must be positive")
        if len(self.consts) != k or len(self.coefs) != k:
            raise ValueError("one constant and one coefficient map per block")
        for d, c, a in zip(self.dims, self.consts, self.coefs):
            if c.shape != (d, d) or a.shape != (d * d, self.nvars):
                raise ValueError("block maps are dimensionally inconsistent")
        if self.objective.shape != (self.nvars,):
            raise ValueError("objective row has the wrong length")
        for nm, default in (("strict", False), ("diagonal", False), ("scales", 1.0),
                            ("names", None)):
            if not getattr(self, nm):
                vals = tuple(f"block{i + 1}" if nm == "names" else default for i in range(k))
                object.__setattr__(self, nm, vals)

    @property
    def homogeneous(self) -> bool:
        return all(not np.any(c) for c in self.consts)

    @property
    def has_objective(self) -> bool:
        return bool(np.any(self.objective))

    def evaluate(self, x) -> list:
        x = np.asarray(x, dtype=float)
        out = []
        for d, c, a in zip(self.dims, self.consts, self.coefs):
            g = c + (a @ x).reshape(d, d)
            out.append(0.5 * (g + g.T))
        return out

    def same_data(self, other: "ConicProgram") -> bool:
        """Equality of everything the SDPA format carries."""
        if self.nvars != other.nvars or tuple(self.dims) != tuple(other.dims):
            return False
        if tuple(self.diagonal) != tuple(other.diagonal):
            return False
        if not np.array_equal(self.objective, other.objective):
            return False
        for c1, c2, a1, a2 in zip(self.consts, other.consts, self.coefs, other.coefs):
            if not np.array_equal(c1, c2):
                return False
            if (sp.csc_matrix(a1) != sp.csc_matrix(a2)).nnz:
                return False
        return True


@dataclass
class SdpOutcome:
    status: str
    assignment: np.ndarray | None
    objective: float | None = None
    primal_margin: float = float("nan")
    dual_certificate: list | None = None
    slack: float | None = None
    dual_bound: float | None = None
    iterations: int = 0
    message: str = ""
    values: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.status in (FEASIBLE, OPTIMAL)


# ---------------------------------------------------------------------------
# Scalarization
# ---------------------------------------------------------------------------

def scalarize(p: LmiProblem, prescale: bool = True) -> ConicProgram:
    """Conic image of ``p`` in declaration order, each block read as ``G >= 0``.

    With ``prescale`` every block is divided by its largest coefficient
    magnitude so the solver sees entries of unit size.
    """
    dims, consts, coefs, strict, diag, scales, names = [], [], [], [], [], [], []
    for con in p.constraints:
        e = con.standard()
        s = 1.0
        if prescale:
            big = max(np.abs(e.const).max(initial=0.0), abs(e.coef).max() if e.coef.nnz else 0.0)
            s = 1.0 / big if big > 0 else 1.0
        dims.append(e.dim)
        consts.append(s * e.const)
        coefs.append(sp.csc_matrix(s * e.coef))
        strict.append(con.strict)
        diag.append(e.dim == 1)
        scales.append(s)
        names.append(con.name)
    obj = p.objective if p.objective is not None else np.zeros(p.nvars)
    return ConicProgram(nvars=p.nvars, dims=tuple(dims), consts=tuple(consts), coefs=tuple(coefs),
                        objective=np.asarray(obj, dtype=float), strict=tuple(strict),
                        diagonal=tuple(diag), scales=tuple(scales), names=tuple(names))


# ---------------------------------------------------------------------------
# Solving
# ---------------------------------------------------------------------------

def _cvx_blocks(c: ConicProgram, shift: dict, extra_cols: dict):
    """cvxopt ``Gs``/``hs`` lists; ``extra_cols[i]`` appends columns for block ``i``."""
    from cvxopt import matrix, spmatrix

    Gs, hs = [], []
    for i, (d, C, A) in enumerate(zip(c.dims, c.consts, c.coefs)):
        h = C - shift.get(i, 0.0) * np.eye(d)
        cols = [-A]
        if extra_cols:
            cols.append(sp.csc_matrix(extra_cols.get(i, np.zeros((d * d, 1)))))
        G = sp.hstack(cols).tocoo() if len(cols) > 1 else A.tocoo() * -1
        # cvxopt stores matrices column-major; blocks are symmetric so vec order agrees
        Gs.append(spmatrix(G.data.tolist(), G.row.tolist(), G.col.tolist(), G.shape))
        hs.append(matrix(h.T.copy()))
    return Gs, hs


def _run(cvec, Gl, hl, Gs, hs, tol, max_iter):
    from cvxopt import matrix, solvers

    opts = {"show_progress": False, "abstol": tol, "reltol": tol, "feastol": tol,
            "maxiters": int(max_iter)}
    kw = {}
    if Gl is not None:
        kw = {"Gl": Gl, "hl": hl}
    return solvers.sdp(matrix(cvec), Gs=Gs, hs=hs, options=opts, **kw)


def _check_settings(tol, max_iter):
    if not tol > 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")


def solve(c: ConicProgram, tol: float = 1e-8, max_iter: int = 100,
          margin: float = 0.0) -> SdpOutcome:
    """Solve ``c``: minimize its objective, or decide feasibility if it has none.

    Strict blocks are required to satisfy ``G_i >= margin I`` (in the
    scaled data).  Without an objective the slack problem is solved and the
    program is declared feasible when the rechecked slack reaches
    ``margin`` and every non-strict block has eigenvalues above ``-10 tol``.
    """
    _check_settings(tol, max_iter)
    if c.nvars > _RANK_CHECK_LIMIT:
        out = _dispatch(c, tol, max_iter, margin)
        if out.status != FAILURE or "Rank(A)" not in out.message:
            return out
    # dependent variables: solve over a basis of the row space and map back
    red, V, unbounded = _reduce(c)
    if c.nvars <= _RANK_CHECK_LIMIT and red.nvars == c.nvars:
        return _dispatch(c, tol, max_iter, margin)
    if unbounded:
        return SdpOutcome(FAILURE, None, message="objective unbounded below (direction "
                          "leaving every block unchanged)")
    out = _dispatch(red, tol, max_iter, margin)
    if out.assignment is not None:
        out.assignment = V @ out.assignment
    out.message += f" (reduced to {red.nvars} of {c.nvars} variables)"
    return out


_RANK_CHECK_LIMIT = 1000  # programs up to this size are checked for dependent variables


def _dispatch(c, tol, max_iter, margin):
    if c.has_objective:
        return _solve_objective(c, tol, max_iter, margin)
    return _solve_feasibility(c, tol, max_iter, margin)


def _reduce(c: ConicProgram, rtol: float = 1e-12):
    """Orthonormal ``V`` spanning the effective variable directions; ``x = V z``."""
    M = sp.vstack([sp.csc_matrix(A) for A in c.coefs]).tocsc()
    G = (M.T @ M).toarray()
    w, U = np.linalg.eigh(G)
    keep = w > rtol * max(w[-1], 1e-300) if w.size else np.zeros(0, bool)
    V = U[:, keep]
    obj = c.objective
    unbounded = bool(np.any(obj)) and (np.linalg.norm(obj - V @ (V.T @ obj))
                                       > 1e-9 * np.linalg.norm(obj))
    red = ConicProgram(V.shape[1], c.dims, c.consts,
                       tuple(sp.csc_matrix(sp.csc_matrix(A) @ V) for A in c.coefs),
                       V.T @ obj, c.strict, c.diagonal, c.scales, c.names)
    return red, V, unbounded


def _recheck(c: ConicProgram, x, tol):
    blocks = c.evaluate(x)
    eigs = [min_eig(b) for b in blocks]
    strict = [e for e, s in zip(eigs, c.strict) if s]
    loose = [e for e, s in zip(eigs, c.strict) if not s]
    return eigs, min(strict, default=np.inf), min(loose, default=np.inf)


def _solve_feasibility(c: ConicProgram, tol, max_iter, margin) -> SdpOutcome:
    from cvxopt import matrix, spmatrix

    nv = c.nvars
    if not any(c.strict):
        c = ConicProgram(c.nvars, c.dims, c.consts, c.coefs, c.objective,
                         strict=tuple(True for _ in c.dims), diagonal=c.diagonal,
                         scales=c.scales, names=c.names)
    extra = {i: np.eye(d).reshape(-1, 1) for i, (d, s) in enumerate(zip(c.dims, c.strict)) if s}
    Gs, hs = _cvx_blocks(c, {}, extra)
    # linear part: normalisation row
    if c.homogeneous:
        row = np.zeros(nv + 1)
        for d, A in zip(c.dims, c.coefs):
            row[:nv] += np.asarray(A[np.arange(d) * (d + 1), :].sum(axis=0)).ravel()
        Gl = matrix(row.reshape(1, -1))
        hl = matrix([1.0])
    else:
        Gl = spmatrix([1.0], [0], [nv], (1, nv + 1))
        hl = matrix([1.0])
    cvec = np.zeros(nv + 1)
    cvec[nv] = -1.0
    try:
        sol = _run(cvec, Gl, hl, Gs, hs, tol, max_iter)
    except (ValueError, ArithmeticError) as e:
        return SdpOutcome(FAILURE, None, message=f"solver error: {e}")
    st = sol["status"]
    iters = int(sol.get("iterations", 0) or 0)
    if sol["x"] is None:
        return SdpOutcome(FAILURE, None, iterations=iters, message=f"solver status {st}")
    z = np.array(sol["x"]).ravel()
    x, t = z[:nv], float(z[nv])
    dual = sol.get("dual objective")
    ub = -float(dual) if dual is not None else None
    eigs, smin, lmin = _recheck(c, x, tol)
    out = SdpOutcome(FAILURE, x, primal_margin=float(min(eigs)) if eigs else np.inf,
                     slack=t, dual_bound=ub, iterations=iters, message=f"solver status {st}",
                     dual_certificate=[np.array(zz) for zz in sol["zs"]] if sol.get("zs") else None)
    if smin >= margin and lmin >= -10 * tol and smin > 0:
        out.status = FEASIBLE
    elif st == "optimal" and ub is not None and ub < margin:
        out.status = INFEASIBLE
    elif st == "optimal" and smin < margin:
        # converged but below the margin; the slack optimum is the certificate
        out.status = INFEASIBLE if max(t, ub if ub is not None else t) < margin else FAILURE
    return out


def _solve_objective(c: ConicProgram, tol, max_iter, margin) -> SdpOutcome:
    shift = {i: margin for i, s in enumerate(c.strict) if s}
    Gs, hs = _cvx_blocks(c, shift, {})
    try:
        sol = _run(c.objective, None, None, Gs, hs, tol, max_iter)
    except (ValueError, ArithmeticError) as e:
        return SdpOutcome(FAILURE, None, message=f"solver error: {e}")
    st = sol["status"]
    iters = int(sol.get("iterations", 0) or 0)
    if st == "primal infeasible":
        return SdpOutcome(INFEASIBLE, None, iterations=iters, message=st,
                          dual_certificate=[np.array(zz) for zz in sol["zs"]])
    if st == "dual infeasible":
        return SdpOutcome(FAILURE, None, iterations=iters, message="objective unbounded below")
    if sol["x"] is None:
        return SdpOutcome(FAILURE, None, iterations=iters, message=f"solver status {st}")
    x = np.array(sol["x"]).ravel()
    eigs, smin, lmin = _recheck(c, x, tol)
    pm = float(min(eigs)) if eigs else np.inf
    obj = float(c.objective @ x)
    out = SdpOutcome(FAILURE, x, objective=obj, primal_margin=pm, iterations=iters,
                     dual_bound=float(sol["dual objective"]) if sol.get("dual objective") is not None else None,
                     message=f"solver status {st}")
    # accept the answer only if the rechecked blocks honour the margin up to -10 tol
    if smin >= margin - 10 * tol and lmin >= -10 * tol:
        out.status = OPTIMAL if st == "optimal" else FAILURE
        if st != "optimal":
            out.message += " (point is feasible but optimality was not certified)"
    return out


# ---------------------------------------------------------------------------
# LMI-level helpers
# ---------------------------------------------------------------------------

@dataclass
class CertificateReport:
    block_min_eigs: dict
    scaled_min_eigs: dict
    overall_margin: float
    strict_margin: float

    def ok(self, margin: float = 0.0, tol: float = 0.0) -> bool:
        return self.strict_margin >= margin and self.overall_margin >= -tol


def certify(p: LmiProblem, assignment, scales: dict | None = None) -> CertificateReport:
    """Re-evaluate every block of ``p`` at ``assignment`` through its builder.

    ``assignment`` is a coordinate vector or a dict of variable values.
    Eigenvalues are reported per block on the unscaled data, and also after
    the optional ``scales`` (block name to factor) used for decisions.
    """
    vals = assignment if isinstance(assignment, dict) else p.unpack(assignment)
    missing = [v.name for v in p.variables if v.name not in vals]
    if missing:
        raise ValueError(f"assignment misses variables {missing}")
    blocks = p.builder(vals)
    raw, scaled = {}, {}
    strict = np.inf
    for con in p.constraints:
        g = np.asarray(blocks[con.name], dtype=float)
        if con.sense == "<":
            g = -g
        e = min_eig(g)
        raw[con.name] = e
        s = (scales or {}).get(con.name, 1.0)
        scaled[con.name] = s * e
        if con.strict:
            strict = min(strict, s * e)
    overall = min(scaled.values(), default=np.inf)
    return CertificateReport(raw, scaled, overall, strict)


def decide(p: LmiProblem, margin: float = 1e-7, tol: float = 1e-8,
           max_iter: int = 100) -> SdpOutcome:
    """Feasibility verdict for an LMI problem without objective."""
    c = scalarize(p)
    out = solve(ConicProgram(c.nvars, c.dims, c.consts, c.coefs, np.zeros(c.nvars), c.strict,
                             c.diagonal, c.scales, c.names), tol, max_iter, margin)
    return _attach(p, c, out, margin, tol)


def minimize(p: LmiProblem, margin: float = 1e-7, tol: float = 1e-8,
             max_iter: int = 100) -> SdpOutcome:
    """Minimize the objective of ``p`` with strict blocks held at ``margin``."""
    if p.objective is None or not np.any(p.objective):
        raise ValueError("problem has no objective")
    c = scalarize(p)
    out = solve(c, tol, max_iter, margin)
    return _attach(p, c, out, margin, tol)


def _attach(p, c, out, margin, tol):
    if out.assignment is None:
        return out
    out.values = p.unpack(out.assignment)
    rep = certify(p, out.assignment, dict(zip(c.names, c.scales)))
    # independent recheck through the builder, not the scalarized maps
    if out.status in (FEASIBLE, OPTIMAL):
        need = margin if out.status == FEASIBLE else margin - 10 * tol
        if not rep.ok(need, 10 * tol):
            out.status = FAILURE
            out.message += "; certificate recheck failed"
    out.primal_margin = rep.overall_margin
    return out


# ---------------------------------------------------------------------------
# SDPA sparse format
# ---------------------------------------------------------------------------

def _num(v: float) -> str:
    v = float(v)
    if v == 0.0:
        v = 0.0  # drop negative zero
    return repr(v)


def format_sdpa(c: ConicProgram) -> str:
    """Text of ``c`` in sparse SDPA format (deterministic, byte-stable)."""
    buf = io.StringIO()
    buf.write(f"{c.nvars}\n{len(c.dims)}\n")
    buf.write(" ".join(str(-d if dg else d) for d, dg in zip(c.dims, c.diagonal)) + "\n")
    buf.write(" ".join(_num(v) for v in c.objective) + "\n")
    for b, (d, C) in enumerate(zip(c.dims, c.consts), start=1):
        F0 = -C
        for i, j in zip(*np.triu_indices(d)):
            if F0[i, j] != 0.0:
                buf.write(f"0 {b} {i + 1} {j + 1} {_num(F0[i, j])}\n")
    entries = []
    for b, (d, A) in enumerate(zip(c.dims, c.coefs), start=1):
        A = sp.csc_matrix(A)
        for j in range(c.nvars):
            lo, hi = A.indptr[j], A.indptr[j + 1]
            for r, v in zip(A.indices[lo:hi], A.data[lo:hi]):
                i, k = divmod(int(r), d)
                if i <= k and v != 0.0:
                    entries.append((j + 1, b, i + 1, k + 1, v))
    entries.sort(key=lambda e: e[:4])
    for j, b, i, k, v in entries:
        buf.write(f"{j} {b} {i} {k} {_num(v)}\n")
    return buf.getvalue()


def export_sdpa(c: ConicProgram, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(format_sdpa(c))


def read_sdpa(path_or_text) -> ConicProgram:
    """Parse a sparse SDPA file (or its text) back into a program."""
    text = path_or_text
    if "\n" not in str(path_or_text):
        with open(path_or_text, encoding="ascii") as fh:
            text = fh.read()
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and ln[0] not in '"*']
    toks = lambda s: s.replace(",", " ").replace("{", " ").replace("}", " ").replace("(", " ").replace(")", " ").split()
    nv = int(toks(lines[0])[0])
    nb = int(toks(lines[1])[0])
    sizes = [int(v) for v in toks(lines[2])[:nb]]
    obj = np.array([float(v) for v in toks(lines[3])[:nv]], dtype=float)
    dims = [abs(s) for s in sizes]
    consts = [np.zeros((d, d)) for d in dims]
    trip = [([], [], []) for _ in dims]
    for ln in lines[4:]:
        f = toks(ln)
        j, b, i, k, v = int(f[0]), int(f[1]) - 1, int(f[2]) - 1, int(f[3]) - 1, float(f[4])
        d = dims[b]
        if j == 0:
            consts[b][i, k] = -v
            consts[b][k, i] = -v
        else:
            rows, cols, vals = trip[b]
            rows.append(i * d + k)
            cols.append(j - 1)
            vals.append(v)
            if i != k:
                rows.append(k * d + i)
                cols.append(j - 1)
                vals.append(v)
    coefs = tuple(sp.csc_matrix((vals, (rows, cols)), shape=(d * d, nv))
                  for d, (rows, cols, vals) in zip(dims, trip))
    return ConicProgram(nvars=nv, dims=tuple(dims), consts=tuple(consts), coefs=coefs,
                        objective=obj, diagonal=tuple(s < 0 for s in sizes))
