"""Drivers: delay-margin sweeps, gain minimisation and SDPA export.

These glue the model, the kernel approximation, the LMI assembly and the
solver together; the command-line tool and the acceptance tests call them.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

import numpy as np

from .basis import parse_basis_spec
from .cddsmodel import CddsModel, build_augmented, load_model
from .lmisynth import (assemble_single_delay, assemble_theorem1, count_decision_variables,
                       prepare_channels, supply_preset)
from .lmisynth.problem import LmiProblem
from .quadrature import Interval
from .sdpcore import FAILURE, decide, export_sdpa, minimize, scalarize

__all__ = [
    "EXAMPLES",
    "load_example",
    "resolve_model",
    "parse_grid",
    "stability_problem",
    "gain_problem",
    "MarginRow",
    "MarginsResult",
    "margins_sweep",
    "feasible_runs",
    "GammaResult",
    "gamma_min",
]

EXAMPLES = {
    "example-single": "example_single_delay.yaml",
    "example-two": "example_two_delay.yaml",
}


def load_example(name: str) -> CddsModel:
    """One of the bundled models (see :data:`EXAMPLES`)."""
    try:
        fname = EXAMPLES[name]
    except KeyError:
        raise ValueError(f"unknown example {name!r}; choose from {sorted(EXAMPLES)}") from None
    with resources.as_file(resources.files("cdds.data") / fname) as path:
        return load_model(path)


def resolve_model(ref: str) -> CddsModel:
    """A bundled example name or a path to a model document."""
    if ref in EXAMPLES:
        return load_example(ref)
    return load_model(ref)


def parse_grid(text: str) -> np.ndarray:
    """``lo:hi:step`` (inclusive of ``hi`` up to rounding) or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must be lo:hi:step, got {text!r}")
        lo, hi, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("grid step must be positive")
        if hi < lo:
            return np.zeros(0)
        k = int(np.floor((hi - lo) / step + 1e-9))
        digits = max(0, -int(np.floor(np.log10(step))) + 3)
        return np.round(lo + step * np.arange(k + 1), digits)
    vals = [float(v) for v in text.split(",") if v.strip()]
    return np.array(sorted(vals))


def _bases(mdl: CddsModel, spec1: str, spec2: str | None):
    b1 = parse_basis_spec(spec1, Interval(-mdl.r1, 0.0))
    b2 = None
    if not mdl.single_delay:
        b2 = parse_basis_spec(spec2 or spec1, Interval(-mdl.r2, -mdl.r1))
    return b1, b2


def stability_problem(mdl: CddsModel, spec1: str, spec2: str | None = None,
                      eta1: float = 1.0, eta2: float = 1.0, use_46="auto",
                      scaling: str = "eta") -> LmiProblem:
    """Stability conditions of the input-free model."""
    mdl = mdl.autonomous()
    b1, b2 = _bases(mdl, spec1, spec2)
    ch1, ch2 = prepare_channels(mdl, b1, b2, check="warn")
    sup = supply_preset("none", 0, 0)
    if mdl.single_delay:
        aug = build_augmented(mdl, ch1.decomposition, ch1.approx, scaling=scaling, eta1=eta1)
        return assemble_single_delay(mdl, aug, ch1, sup)
    aug = build_augmented(mdl, ch1.decomposition, ch1.approx, ch2.decomposition, ch2.approx,
                          scaling=scaling, eta1=eta1, eta2=eta2)
    return assemble_theorem1(mdl, aug, ch1, ch2, sup, use_46=use_46)


def gain_problem(mdl: CddsModel, spec1: str, spec2: str | None = None,
                 eta1: float = 1.0, eta2: float = 1.0, use_46="auto",
                 scaling: str = "eta") -> LmiProblem:
    """L2-gain conditions with ``gamma`` as the minimised variable."""
    if mdl.m == 0 or mdl.q == 0:
        raise ValueError("gain minimisation needs inputs and outputs (m, q > 0)")
    b1, b2 = _bases(mdl, spec1, spec2)
    ch1, ch2 = prepare_channels(mdl, b1, b2, check="warn")
    sup = supply_preset("l2gain", mdl.m, mdl.q)
    if mdl.single_delay:
        aug = build_augmented(mdl, ch1.decomposition, ch1.approx, scaling=scaling, eta1=eta1)
        return assemble_single_delay(mdl, aug, ch1, sup)
    aug = build_augmented(mdl, ch1.decomposition, ch1.approx, ch2.decomposition, ch2.approx,
                          scaling=scaling, eta1=eta1, eta2=eta2)
    return assemble_theorem1(mdl, aug, ch1, ch2, sup, use_46=use_46)


@dataclass
class MarginRow:
    r: float
    status: str
    nodv: int
    oracle_rightmost: float | None = None

    @property
    def lmi_feasible(self) -> bool:
        return self.status == "feasible"


@dataclass
class MarginsResult:
    basis: str
    rows: list
    intervals: list = field(default_factory=list)

    @property
    def nodv(self) -> int | None:
        return self.rows[0].nodv if self.rows else None

    @property
    def failures(self) -> int:
        return sum(r.status == FAILURE for r in self.rows)

    def oracle_exceptions(self) -> list:
        """Grid points reported feasible where the oracle sees an unstable root."""
        return [r.r for r in self.rows
                if r.lmi_feasible and r.oracle_rightmost is not None and r.oracle_rightmost >= 0]

    def to_csv(self) -> str:
        oracle = any(r.oracle_rightmost is not None for r in self.rows)
        head = "r,lmi_feasible,nodv" + (",oracle_rightmost" if oracle else "")
        lines = [head]
        for r in self.rows:
            s = f"{r.r:.6g},{int(r.lmi_feasible)},{r.nodv}"
            if oracle:
                s += "," + ("" if r.oracle_rightmost is None else f"{r.oracle_rightmost:.12g}")
            lines.append(s)
        return "\n".join(lines) + "\n"


def feasible_runs(grid: Sequence[float], flags: Sequence[bool]) -> list:
    """Maximal runs of consecutive true flags as ``(first, last)`` grid values."""
    out, start, prev = [], None, None
    for r, ok in zip(grid, flags):
        if ok and start is None:
            start = r
        if not ok and start is not None:
            out.append((start, prev))
            start = None
        prev = r
    if start is not None:
        out.append((start, prev))
    return out


def margins_sweep(mdl: CddsModel, spec: str, grid: Sequence[float], margin: float = 1e-7,
                  tol: float = 1e-8, oracle: bool = False, mesh: int = 200,
                  eta: float = 1.0) -> MarginsResult:
    """Stability verdict of a single-delay model at each delay of ``grid``."""
    if not mdl.single_delay:
        raise ValueError("delay-margin sweeps take a single-delay model")
    rows = []
    for r in grid:
        m = mdl.with_delays(float(r))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            p = stability_problem(m, spec, eta1=eta)
        out = decide(p, margin=margin, tol=tol)
        row = MarginRow(float(r), out.status, count_decision_variables(p))
        if oracle:
            from .spectrum import SpectrumRequest, rightmost_roots

            res = rightmost_roots(SpectrumRequest(m, mesh, 1), check=False)
            row.oracle_rightmost = res.rightmost_real
        rows.append(row)
    res = MarginsResult(basis=spec, rows=rows)
    res.intervals = feasible_runs([r.r for r in rows], [r.lmi_feasible for r in rows])
    return res


@dataclass
class GammaResult:
    basis1: str
    basis2: str | None
    status: str
    gamma: float | None
    nodv: int
    iterations: int
    margin: float
    assemble_seconds: float
    solve_seconds: float
    exported: str | None = None
    message: str = ""

    def csv_row(self) -> str:
        order = self.basis1 if self.basis2 in (None, self.basis1) else f"{self.basis1}|{self.basis2}"
        g = "" if self.gamma is None else f"{self.gamma:.10g}"
        return f"{order},{g},{self.nodv},{self.iterations},{self.margin:.3g}"


def gamma_min(mdl: CddsModel, spec1: str, spec2: str | None = None, margin: float = 1e-7,
              tol: float = 1e-8, eta1: float = 1.0, eta2: float = 1.0, use_46="auto",
              export: str | None = None, solve: bool = True,
              max_iter: int = 100) -> GammaResult:
    """Minimise the L2-gain bound; optionally write the program in SDPA format."""
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        p = gain_problem(mdl, spec1, spec2, eta1=eta1, eta2=eta2, use_46=use_46)
    nodv = count_decision_variables(p)
    if export:
        export_sdpa(scalarize(p), export)
    t1 = time.perf_counter()
    res = GammaResult(spec1, spec2, "not_solved", None, nodv, 0, margin, t1 - t0, 0.0,
                      exported=export)
    if not solve:
        return res
    out = minimize(p, margin=margin, tol=tol, max_iter=max_iter)
    res.solve_seconds = time.perf_counter() - t1
    res.status = out.status
    res.iterations = out.iterations
    res.message = out.message
    if out.feasible:
        res.gamma = float(out.values["gamma"][0, 0])
    return res
