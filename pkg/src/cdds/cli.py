"""Command-line entry point: ``cdds margins | gamma-min | verify | spectrum``.

Human-readable summaries go to standard output; the full data goes to the
CSV file named with ``--csv``.  The exit status is 0 unless a suite check
fails or the solver reports a numerical failure; usage errors exit with 2.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import analysis
from .sdpcore import FAILURE

__all__ = ["main", "build_parser"]


def _write(path, text):
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _chunks(grid, k):
    # contiguous pieces keep results in grid order when concatenated
    return [c for c in np.array_split(np.asarray(grid, dtype=float), k) if c.size]


def _margins_chunk(args):
    ref, basis, grid, margin, tol, oracle, mesh, eta = args
    mdl = analysis.resolve_model(ref)
    return analysis.margins_sweep(mdl, basis, grid, margin=margin, tol=tol, oracle=oracle,
                                  mesh=mesh, eta=eta).rows


def cmd_margins(ns) -> int:
    mdl = analysis.resolve_model(ns.model)
    if not mdl.single_delay:
        raise _Usage("margins takes a single-delay model")
    grid = analysis.parse_grid(ns.grid)
    rows = []
    if grid.size:
        jobs = max(1, min(ns.jobs, grid.size))
        parts = [(ns.model, ns.basis1, c, ns.margin, ns.tol, ns.oracle, ns.mesh, ns.eta1)
                 for c in _chunks(grid, jobs)]
        if jobs == 1:
            rows = _margins_chunk(parts[0])
        else:
            with ProcessPoolExecutor(jobs) as ex:
                for part in ex.map(_margins_chunk, parts):
                    rows.extend(part)
    res = analysis.MarginsResult(basis=ns.basis1, rows=rows)
    res.intervals = analysis.feasible_runs([r.r for r in rows], [r.lmi_feasible for r in rows])
    if ns.csv:
        _write(ns.csv, res.to_csv())
    print(f"basis {ns.basis1}: {len(rows)} grid points, NoDV {res.nodv}")
    for lo, hi in res.intervals:
        print(f"  feasible [{lo:.6g}, {hi:.6g}]")
    if not res.intervals:
        print("  no feasible grid point")
    if ns.oracle:
        bad = res.oracle_exceptions()
        print(f"  oracle: {len(bad)} feasible point(s) with a root in the closed right half-plane"
              + (f" at {bad}" if bad else ""))
    if res.failures:
        print(f"  {res.failures} numerical failure(s)")
    return 1 if res.failures else 0


def cmd_gamma_min(ns) -> int:
    mdl = analysis.resolve_model(ns.model)
    res = analysis.gamma_min(mdl, ns.basis1, ns.basis2, margin=ns.margin, tol=ns.tol,
                             eta1=ns.eta1, eta2=ns.eta2, use_46=ns.use_46,
                             export=ns.export_sdpa, solve=not ns.no_solve,
                             max_iter=ns.max_iter)
    if ns.csv:
        _write(ns.csv, "order,gamma,nodv,iterations,margin\n" + res.csv_row() + "\n")
    print(f"bases {res.basis1} / {res.basis2 or res.basis1}: NoDV {res.nodv}, "
          f"assembled in {res.assemble_seconds:.2f} s")
    if res.exported:
        print(f"  SDPA written to {res.exported}")
    if ns.no_solve:
        return 0
    if res.gamma is not None:
        print(f"  min gamma = {res.gamma:.8g} ({res.status}, {res.iterations} iterations, "
              f"{res.solve_seconds:.2f} s)")
    else:
        print(f"  no gain bound: {res.status} ({res.message})")
    return 1 if res.status == FAILURE else 0


def cmd_verify(ns) -> int:
    from .suites import SUITES

    kw = {}
    if ns.cases is not None:
        if ns.suite == "hierarchy":
            raise _Usage("--cases does not apply to the hierarchy suite")
        kw["models" if ns.suite == "assembly" else "cases"] = ns.cases
    if ns.seed is not None:
        if ns.suite == "hierarchy":
            raise _Usage("--seed does not apply to the hierarchy suite")
        kw["seed"] = ns.seed
    rep = SUITES[ns.suite](**kw)
    text = "\n".join(rep.lines()) + "\n"
    if ns.csv:
        _write(ns.csv, "suite,check,passed,value,threshold\n" + "".join(
            f"{rep.suite},{c.name},{int(c.passed)},{c.value:.12g},{c.threshold:.12g}\n"
            for c in rep.checks))
    sys.stdout.write(text)
    print(f"{rep.suite}: {'PASS' if rep.passed else 'FAIL'} ({rep.seconds:.1f} s)")
    return 0 if rep.passed else 1


def cmd_spectrum(ns) -> int:
    from .spectrum import SpectrumError, stability_margin_sweep

    mdl = analysis.resolve_model(ns.model)
    grid = analysis.parse_grid(ns.grid)
    if not mdl.difference_free and not ns.force:
        raise _Usage("model couples y through A7/A8; the collocation oracle is only validated "
                     "for A7 = A8 = 0 (pass --force to run it anyway)")
    if grid.size == 0:
        if ns.csv:
            _write(ns.csv, "r,rightmost_real,converged\n")
        print("empty grid")
        return 0
    if mdl.single_delay:
        family = mdl
    else:
        family = lambda r: mdl.with_delays(mdl.r1, r)  # noqa: E731
    try:
        res = stability_margin_sweep(family, grid, M=ns.mesh, force=ns.force)
    except SpectrumError as e:
        print(f"spectrum: {e}", file=sys.stderr)
        return 1
    if ns.csv:
        _write(ns.csv, res.to_csv())
    print(f"mesh {ns.mesh}: {len(res.rows)} grid points")
    for lo, hi in res.intervals:
        print(f"  stable ({lo:.6g}, {hi:.6g})")
    if not res.intervals:
        print("  no stable grid point")
    loose = sum(not r.converged for r in res.rows)
    if loose:
        print(f"  {loose} point(s) where the rightmost root moved by 1e-6 or more between meshes")
    return 0


class _Usage(Exception):
    pass


def _add_model(p):
    p.add_argument("model", help="bundled example name (example-single, example-two) or a model file")


def _add_solver(p):
    p.add_argument("--margin", type=float, default=1e-7, help="strictness margin (default 1e-7)")
    p.add_argument("--tol", type=float, default=1e-8, help="solver tolerance (default 1e-8)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cdds", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("margins", help="stability verdicts along a delay grid (single delay)")
    _add_model(p)
    p.add_argument("--basis1", required=True, help="e.g. legendre:3, trig:3@12, exp:1,2")
    p.add_argument("--grid", required=True, help="lo:hi:step or a comma list of delays")
    p.add_argument("--oracle", action="store_true", help="add the rightmost-root column")
    p.add_argument("--mesh", type=int, default=200, help="oracle collocation mesh (default 200)")
    p.add_argument("--eta1", type=float, default=1.0)
    p.add_argument("--jobs", type=int, default=1, help="worker processes for the grid")
    p.add_argument("--csv", help="write the per-point table here ('-' for stdout)")
    _add_solver(p)
    p.set_defaults(func=cmd_margins)

    p = sub.add_parser("gamma-min", help="minimise the L2-gain bound")
    _add_model(p)
    p.add_argument("--basis1", required=True)
    p.add_argument("--basis2", help="second-interval basis (default: same as --basis1)")
    p.add_argument("--eta1", type=float, default=1.0)
    p.add_argument("--eta2", type=float, default=1.0)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--use-46", dest="use_46", action="store_const", const=True,
                   help="always add the weighted positivity block")
    g.add_argument("--no-46", dest="use_46", action="store_const", const=False,
                   help="use the reduced positivity block")
    p.set_defaults(use_46="auto")
    p.add_argument("--export-sdpa", metavar="PATH", help="write the program in sparse SDPA format")
    p.add_argument("--no-solve", action="store_true", help="assemble (and export) only")
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--csv")
    _add_solver(p)
    p.set_defaults(func=cmd_gamma_min)

    p = sub.add_parser("verify", help="run a self-checking suite")
    p.add_argument("suite", choices=["inequalities", "hierarchy", "assembly", "sdp"])
    p.add_argument("--cases", type=int, help="number of random cases (models for assembly)")
    p.add_argument("--seed", type=int)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("spectrum", help="rightmost characteristic root along a delay grid")
    _add_model(p)
    p.add_argument("--grid", required=True, help="values of the (largest) delay")
    p.add_argument("--mesh", type=int, default=200)
    p.add_argument("--force", action="store_true", help="run on models with A7/A8 nonzero")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_spectrum)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        return ns.func(ns)
    except (_Usage, ValueError, FileNotFoundError) as e:
        ap.print_usage(sys.stderr)
        print(f"cdds: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
