"""Self-checking suites behind ``cdds verify``.

Each suite returns a :class:`SuiteReport` of named checks, every check with
the measured value and the threshold it is held to.  The random cases are
seeded, so reports are reproducible.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .basis import parse_basis_spec
from .cddsmodel import CddsModel, build_augmented
from .ineqlab import (InequalityError, corollary1_gap, lemma3_gap, random_case,
                      random_summation_case, summation_gap)
from .lmisynth import (SupplyRate, assemble_theorem1, crosscheck_omega, e_ladder,
                       hierarchy_probe, prepare_channels, rank_one_update)
from .lmisynth.problem import LmiProblem, Variable, build_problem
from .quadrature import Interval
from .sdpcore import FEASIBLE, INFEASIBLE, decide

__all__ = [
    "Check",
    "SuiteReport",
    "SUITES",
    "run_suite",
    "inequality_suite",
    "hierarchy_suite",
    "assembly_suite",
    "sdp_suite",
    "random_small_model",
    "SdpCase",
    "random_sdp_case",
]


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def line(self, suite: str) -> str:
        tag = "PASS" if self.passed else "FAIL"
        s = f"{suite}\t{self.name}\t{tag}\tvalue={self.value:.6g}\tthreshold={self.threshold:.6g}"
        return s + (f"\t{self.detail}" if self.detail else "")


@dataclass
class SuiteReport:
    suite: str
    checks: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, value, threshold, ok, detail=""):
        self.checks.append(Check(name, bool(ok), float(value), float(threshold), detail))

    def lines(self) -> list:
        return [c.line(self.suite) for c in self.checks]


# ---------------------------------------------------------------------------
# inequalities
# ---------------------------------------------------------------------------

def inequality_suite(cases: int = 1000, seed: int = 0) -> SuiteReport:
    """Integral, projection-only and summation inequalities on random cases."""
    rep = SuiteReport("inequalities")
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    gaps, ident, orth, redraws = [], [], [], 0
    while len(gaps) < cases:
        try:
            r = lemma3_gap(random_case(rng, with_g=True))
        except InequalityError:
            redraws += 1  # near-dependent g and f; the joint Gram is singular
            continue
        gaps.append(r.gap)
        ident.append(r.identity_residual)
        orth.append(r.orthogonality_residual)
    cgaps = []
    while len(cgaps) < cases:
        try:
            cgaps.append(corollary1_gap(random_case(rng, with_g=False)))
        except InequalityError:
            redraws += 1
    sgaps = [summation_gap(*random_summation_case(rng)) for _ in range(cases)]
    note = f"cases={cases} redraws={redraws}"
    rep.add("integral_gap_min", min(gaps), -1e-10, min(gaps) >= -1e-10, note)
    rep.add("projection_only_gap_min", min(cgaps), -1e-10, min(cgaps) >= -1e-10)
    rep.add("summation_gap_min", min(sgaps), -1e-10, min(sgaps) >= -1e-10)
    rep.add("identity_residual_max", max(ident), 1e-9, max(ident) <= 1e-9)
    rep.add("orthogonality_residual_max", max(orth), 1e-9, max(orth) <= 1e-9)
    rep.seconds = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------------------
# hierarchy
# ---------------------------------------------------------------------------

def _example(name):
    from .analysis import load_example

    return load_example(name)


def nesting_model() -> CddsModel:
    """Small two-delay model whose feasible delay set ends inside ``[0.8, 1.6]``."""
    return CddsModel.build(1, 1, r1=0.3, r2=1.0, A1=[[0.0]], A3=[[-1.0]], A6=[[1.0]],
                           A5=[["0.1*cos(tau)"]])


def hierarchy_suite(dmax: int = 8, grid=(0.8, 1.2, 1.4, 1.5, 1.6), probe: bool = True) -> SuiteReport:
    """Error Gram ladders, rank-one updates and empirical nesting."""
    rep = SuiteReport("hierarchy")
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        one = _example("example-single")
        two = _example("example-two")
        ch, _ = prepare_channels(one, parse_basis_spec("legendre:1", Interval(-one.r1, 0.0)),
                                 check="warn")
        ladders = [("example-single", ch)]
        c1, c2 = prepare_channels(two, parse_basis_spec("legendre:1", Interval(-two.r1, 0.0)),
                                  parse_basis_spec("legendre:1", Interval(-two.r2, -two.r1)),
                                  check="warn")
        ladders += [("example-two/1", c1), ("example-two/2", c2)]
        for label, c in ladders:
            lad = e_ladder(c.approx.residuals, c.interval, dmax)
            rep.add(f"ladder_min_eig[{label}]", lad.worst, -1e-12, lad.worst >= -1e-12,
                    f"degrees=0..{dmax}")
            worst = max(lad.rank_one_residuals)
            rep.add(f"ladder_rank_one[{label}]", worst, 1e-10, worst <= 1e-10)
        for which in ("kappa", "p"):
            worst = 0.0
            for dim in (1, 2, 3):
                worst = max(worst, rank_one_update(two, "legendre:4", "legendre:4", which, dim).worst)
            rep.add(f"rank_one_update[{which}]", worst, 1e-10, worst <= 1e-10, "dims=1..3")
        if probe:
            mdl = nesting_model()
            for which, dims in (("kappa", [1, 2, 3, 4]), ("p", [1, 2, 3])):
                h = hierarchy_probe(mdl, "legendre:2", "legendre:2", which, dims, list(grid))
                sets = " ".join(f"{k}:{len(h.feasible_set(k))}" for k in dims)
                rep.add(f"nesting[{which}]", len(h.violations), 0, h.nested, f"feasible_counts {sets}")
    rep.seconds = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def random_small_model(rng: np.random.Generator) -> CddsModel:
    """Two-delay model with every block populated and cosine kernels."""
    n, nu, m, q = (int(v) for v in rng.integers(1, 4, 4))
    r1 = rng.uniform(0.3, 1.0)
    r2 = r1 + rng.uniform(0.3, 1.0)

    def mat(a, b, s=0.5):
        return s * rng.standard_normal((a, b))

    def kern(rows):
        return [[f"{rng.uniform(-1, 1):.3f}*cos({rng.uniform(3, 9):.3f}*tau+{rng.uniform(0, 3):.3f})"
                 for _ in range(nu)] for _ in range(rows)]

    blocks = dict(A1=mat(n, n), A2=mat(n, nu), A3=mat(n, nu), A6=mat(nu, n), A7=mat(nu, nu, 0.2),
                  A8=mat(nu, nu, 0.2), C1=mat(m, n), C2=mat(m, nu), C3=mat(m, nu), C6=mat(m, nu),
                  C7=mat(m, nu), D1=mat(n, q), D2=mat(m, q), A4=kern(n), A5=kern(n), C4=kern(m),
                  C5=kern(m))
    return CddsModel.build(n, nu, m, q, r1=r1, r2=r2, **blocks)


def assembly_suite(models: int = 20, seed: int = 1, tol: float = 1e-9) -> SuiteReport:
    """Assembled dissipation matrix against the term-by-term derivation."""
    rep = SuiteReport("assembly")
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = {"eta": 0.0, "inverse": 0.0}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for _ in range(models):
            mdl = random_small_model(rng)
            d, dl = (int(v) for v in rng.integers(1, 3, 2))
            ch1, ch2 = prepare_channels(
                mdl, parse_basis_spec(f"legendre:{d}", Interval(-mdl.r1, 0.0)),
                parse_basis_spec(f"legendre:{dl}", Interval(-mdl.r2, -mdl.r1)), check="warn")
            m, q = mdl.m, mdl.q
            J3 = rng.standard_normal((q, q))
            sup = SupplyRate(-np.eye(m) * rng.uniform(0.5, 2), 0.5 * rng.standard_normal((m, m)),
                             0.5 * rng.standard_normal((m, q)), J3 + J3.T)
            eta = (rng.uniform(0.5, 2), rng.uniform(0.5, 2))
            for sc in ("eta", "inverse"):
                aug = build_augmented(mdl, ch1.decomposition, ch1.approx, ch2.decomposition,
                                      ch2.approx, scaling=sc, eta1=eta[0], eta2=eta[1])
                p = assemble_theorem1(mdl, aug, ch1, ch2, sup)
                vals = {}
                for v in p.variables:
                    X = rng.standard_normal((v.dim, v.dim))
                    vals[v.name] = X @ X.T
                worst[sc] = max(worst[sc], crosscheck_omega(mdl, ch1, ch2, sup, p, vals, sc, eta))
    for sc, w in worst.items():
        rep.add(f"omega_crosscheck[{sc}]", w, tol, w <= tol, f"models={models}")
    rep.seconds = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------------------
# sdp ground truth
# ---------------------------------------------------------------------------

@dataclass
class SdpCase:
    kind: str
    problem: LmiProblem
    feasible: bool
    witness: object  # a feasible point, or the PSD Z that refutes every point


def _rand_sym(rng, k):
    X = rng.standard_normal((k, k))
    return 0.5 * (X + X.T)


def _lyapunov_case(rng, stable: bool) -> SdpCase:
    n = int(rng.integers(1, 5))
    A = rng.standard_normal((n, n))
    ev = np.linalg.eigvals(A)
    # move the spectral abscissa to -a (stable) or +a
    a = rng.uniform(0.2, 1.0)
    A = A - (ev.real.max() + (a if stable else -a)) * np.eye(n)

    def builder(v):
        P = v["P"]
        return {"P": P, "lyap": -(A.T @ P + P @ A)}

    p = build_problem([Variable("P", n)], builder, {"P": (">", True), "lyap": (">", True)})
    if stable:
        from scipy.linalg import solve_continuous_lyapunov

        witness = solve_continuous_lyapunov(A.T, -np.eye(n))
    else:
        # left eigenvector of the unstable root refutes A^T P + P A < 0 with P > 0
        witness = None
    return SdpCase("lyapunov", p, stable, witness)


def _affine_case(rng, feasible: bool) -> SdpCase:
    nb = int(rng.integers(1, 3))
    dims = [int(rng.integers(2, 9)) for _ in range(nb)]
    nv = int(rng.integers(1, 13))
    F = [[_rand_sym(rng, d) for _ in range(nv)] for d in dims]
    if feasible:
        x0 = rng.standard_normal(nv)
        F0 = []
        for d, Fi in zip(dims, F):
            B = rng.standard_normal((d, d))
            S = B @ B.T / d + rng.uniform(0.1, 1.0) * np.eye(d)
            F0.append(S - sum(x * f for x, f in zip(x0, Fi)))
        witness = x0
    else:
        # a PSD Z orthogonal to every F_i in the first block with <Z, F0> < 0
        d = dims[0]
        r = int(rng.integers(1, d + 1))
        B = rng.standard_normal((d, r))
        Z = B @ B.T
        Zn = Z / np.sum(Z * Z)
        F[0] = [f - np.sum(Z * f) * Zn for f in F[0]]
        C = _rand_sym(rng, d)
        C = C - np.sum(Z * C) * Zn - rng.uniform(0.1, 1.0) * Zn * np.trace(Z)
        F0 = [C] + [_rand_sym(rng, dd) for dd in dims[1:]]
        witness = Z

    names = [f"x{i}" for i in range(nv)]

    def builder(v):
        x = [float(v[nm][0, 0]) for nm in names]
        return {f"G{b}": F0[b] + sum(xi * f for xi, f in zip(x, F[b])) for b in range(nb)}

    p = build_problem([Variable(nm, 1) for nm in names], builder,
                      {f"G{b}": (">", True) for b in range(nb)})
    return SdpCase("affine", p, feasible, witness)


def random_sdp_case(rng: np.random.Generator, index: int) -> SdpCase:
    """Cases cycle through stable/unstable Lyapunov and feasible/infeasible affine LMIs."""
    k = index % 4
    if k < 2:
        return _lyapunov_case(rng, stable=(k == 0))
    return _affine_case(rng, feasible=(k == 2))


def _witness_ok(case: SdpCase) -> bool:
    """Check the generator's own certificate, independently of the solver."""
    p = case.problem
    if case.kind == "lyapunov":
        if case.feasible:
            blocks = p.builder({"P": case.witness})
            return min(np.linalg.eigvalsh(b)[0] for b in blocks.values()) > 0
        return True  # instability is the certificate; checked by the eigenvalues below
    if case.feasible:
        vals = {f"x{i}": np.array([[x]]) for i, x in enumerate(case.witness)}
        return min(np.linalg.eigvalsh(b)[0] for b in p.builder(vals).values()) > 0
    Z = case.witness
    con = p.constraints[0]
    d = con.expr.dim
    lin = np.abs(Z.ravel() @ con.expr.coef.toarray()).max(initial=0.0)
    return lin <= 1e-10 * max(1.0, np.abs(Z).max()) * d and np.sum(Z * con.expr.const) < 0


def sdp_suite(cases: int = 200, seed: int = 2, margin: float = 1e-7, tol: float = 1e-8) -> SuiteReport:
    """Solver verdicts against generated ground truth."""
    rep = SuiteReport("sdp")
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    agree, worst_margin, bad_witness, mismatches = 0, np.inf, 0, []
    for i in range(cases):
        case = random_sdp_case(rng, i)
        if not _witness_ok(case):
            bad_witness += 1
        out = decide(case.problem, margin=margin, tol=tol)
        want = FEASIBLE if case.feasible else INFEASIBLE
        if out.status == want:
            agree += 1
        else:
            mismatches.append(f"{i}:{case.kind}:{out.status}")
        if out.status == FEASIBLE:
            worst_margin = min(worst_margin, out.primal_margin)
    rate = agree / max(cases, 1)
    rep.add("status_agreement", rate, 1.0, rate == 1.0,
            f"cases={cases}" + (f" mismatches={','.join(mismatches[:10])}" if mismatches else ""))
    if not np.isfinite(worst_margin):
        worst_margin = 0.0
    rep.add("certified_margin_min", worst_margin, -tol, worst_margin >= -tol)
    rep.add("generator_witnesses_bad", bad_witness, 0, bad_witness == 0)
    rep.seconds = time.perf_counter() - t0
    return rep


SUITES = {
    "inequalities": inequality_suite,
    "hierarchy": hierarchy_suite,
    "assembly": assembly_suite,
    "sdp": sdp_suite,
}


def run_suite(name: str, **kw) -> SuiteReport:
    try:
        fn = SUITES[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}") from None
    return fn(**kw)
