"""Coupled differential-difference system model and its augmented form.

The system is

    x'(t) = A1 x + A2 y(t-r1) + A3 y(t-r2) + int_{-r1}^0 K_A4 y(t+s) ds
            + int_{-r2}^{-r1} K_A5 y(t+s) ds + D1 w
    y(t)  = A6 x + A7 y(t-r1) + A8 y(t-r2)
    z(t)  = C1 x + C2 y(t-r1) + C3 y(t-r2) + int K_C4 y + int K_C5 y
            + C6 y'(t-r1) + C7 y'(t-r2) + D2 w

A single-delay model has ``r2 = None``; every second-channel term must then
vanish.  Models are read from YAML documents::

    dims: {n: 1, nu: 1, m: 0, q: 0}
    delays: {r1: 0.13}
    matrices: {A1: [[0.33]], A6: [[1]]}
    kernels: {A4: [["-5*sin(cos(12*tau))"]]}
    residuals: {interval1: ["..."], interval2: ["..."]}
    supply: {preset: l2gain}
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
import yaml

from .expr import Expr, ExprError, KernelMatrix
from .kernelapprox import ApproximationResult, KernelDecomposition
from .matrixkit import as_mat, kron, sym_sqrt

__all__ = [
    "ModelError",
    "CddsModel",
    "DifferenceStability",
    "AugmentedForm",
    "parse_model",
    "load_model",
    "check_difference_stability",
    "build_augmented",
]

_MATRIX_NAMES = ("A1", "A2", "A3", "A6", "A7", "A8", "C1", "C2", "C3", "C6", "C7", "D1", "D2")
_KERNEL_NAMES = ("A4", "A5", "C4", "C5")


class ModelError(ValueError):
    def __init__(self, msg: str, line: int | None = None, col: int | None = None):
        where = f" (line {line}, column {col})" if line is not None else ""
        super().__init__(msg + where)
        self.line = line
        self.col = col


def _shape(name: str, n: int, nu: int, m: int, q: int) -> tuple[int, int]:
    return {
        "A1": (n, n), "A2": (n, nu), "A3": (n, nu), "A6": (nu, n), "A7": (nu, nu),
        "A8": (nu, nu), "C1": (m, n), "C2": (m, nu), "C3": (m, nu), "C6": (m, nu),
        "C7": (m, nu), "D1": (n, q), "D2": (m, q), "A4": (n, nu), "A5": (n, nu),
        "C4": (m, nu), "C5": (m, nu),
    }[name]


@dataclass(frozen=True, eq=False)
class CddsModel:
    n: int
    nu: int
    m: int
    q: int
    r1: float
    r2: float | None
    mats: dict
    kernels: dict
    residuals1: tuple = ()
    residuals2: tuple = ()
    supply: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        for v, lab in ((self.n, "n"), (self.nu, "nu")):
            if v < 1:
                raise ModelError(f"dimension {lab} must be >= 1")
        if self.m < 0 or self.q < 0:
            raise ModelError("m and q must be >= 0")
        if not self.r1 > 0:
            raise ModelError("delay r1 must be positive")
        if self.r2 is not None and not self.r2 > self.r1:
            raise ModelError(f"delays need 0 < r1 < r2, got r1={self.r1}, r2={self.r2}")
        for k in _MATRIX_NAMES:
            exp = _shape(k, self.n, self.nu, self.m, self.q)
            got = self.mats[k].shape
            if got != exp:
                raise ModelError(f"matrix {k} has shape {got}, expected {exp}")
        for k in _KERNEL_NAMES:
            exp = _shape(k, self.n, self.nu, self.m, self.q)
            if self.kernels[k].shape != exp:
                raise ModelError(f"kernel {k} has shape {self.kernels[k].shape}, expected {exp}")
        if self.single_delay:
            for k in ("A3", "A8", "C3", "C6", "C7"):
                if np.any(self.mats[k]):
                    raise ModelError(f"single-delay model must have {k} = 0")
            for k in ("A5", "C5"):
                if not self.kernels[k].is_zero:
                    raise ModelError(f"single-delay model must have kernel {k} = 0")

    def __getattr__(self, key):
        mats = self.__dict__.get("mats", {})
        if key in mats:
            return mats[key]
        raise AttributeError(key)

    @property
    def single_delay(self) -> bool:
        return self.r2 is None

    @property
    def difference_free(self) -> bool:
        return not (np.any(self.mats["A7"]) or np.any(self.mats["A8"]))

    def with_delays(self, r1: float, r2: float | None = None) -> "CddsModel":
        r2 = self.r2 if r2 is None else r2
        return dataclasses.replace(self, r1=float(r1), r2=r2)

    def autonomous(self) -> "CddsModel":
        """Copy with the input and output channels removed (``m = q = 0``)."""
        mats = {k: v for k, v in self.mats.items()}
        for k in ("C1", "C2", "C3", "C6", "C7"):
            mats[k] = np.zeros((0, self.nu if k != "C1" else self.n))
        mats["D1"] = np.zeros((self.n, 0))
        mats["D2"] = np.zeros((0, 0))
        kern = dict(self.kernels)
        kern["C4"] = KernelMatrix.zeros(0, self.nu)
        kern["C5"] = KernelMatrix.zeros(0, self.nu)
        return dataclasses.replace(self, m=0, q=0, mats=mats, kernels=kern)

    def scaled(self, factor: float) -> "CddsModel":
        """Model with every matrix and kernel multiplied by ``factor``."""
        mats = {k: factor * v for k, v in self.mats.items()}
        kern = {}
        for k, K in self.kernels.items():
            kern[k] = KernelMatrix([[Expr(f"{factor!r}*({e.text})") for e in r] for r in K.entries],
                                   cols=K.cols)
        return dataclasses.replace(self, mats=mats, kernels=kern)

    @classmethod
    def build(cls, n, nu, m=0, q=0, r1=1.0, r2=None, residuals1=(), residuals2=(),
              supply=None, name="", **blocks) -> "CddsModel":
        """Construct from keyword matrices; kernels may be expression grids."""
        mats = {}
        for k in _MATRIX_NAMES:
            shp = _shape(k, n, nu, m, q)
            mats[k] = as_mat(blocks.pop(k), *shp) if k in blocks else np.zeros(shp)
        kern = {}
        for k in _KERNEL_NAMES:
            shp = _shape(k, n, nu, m, q)
            if k in blocks:
                v = blocks.pop(k)
                kern[k] = v if isinstance(v, KernelMatrix) else KernelMatrix.from_strings(v)
            else:
                kern[k] = KernelMatrix.zeros(*shp)
        if blocks:
            raise ModelError(f"unknown blocks {sorted(blocks)}")
        return cls(n=n, nu=nu, m=m, q=q, r1=float(r1), r2=None if r2 is None else float(r2),
                   mats=mats, kernels=kern, residuals1=tuple(residuals1),
                   residuals2=tuple(residuals2), supply=dict(supply or {}), name=name)


# ---------------------------------------------------------------------------
# Document parsing
# ---------------------------------------------------------------------------

def _mark(node):
    return node.start_mark.line + 1, node.start_mark.column + 1


def _map(node, what):
    if not isinstance(node, yaml.MappingNode):
        raise ModelError(f"{what} must be a mapping", *_mark(node))
    return {k.value: v for k, v in node.value}


def _scalar(node, what):
    if not isinstance(node, yaml.ScalarNode):
        raise ModelError(f"{what} must be a scalar", *_mark(node))
    return yaml.safe_load(yaml.serialize(node))


def _number(node, what) -> float:
    v = _scalar(node, what)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ModelError(f"{what} must be a number", *_mark(node))
    return float(v)


def _matrix(node, name, shape):
    if not isinstance(node, yaml.SequenceNode):
        raise ModelError(f"matrix {name} must be a list of rows", *_mark(node))
    rows = []
    for r in node.value:
        if isinstance(r, yaml.SequenceNode):
            rows.append([_number(c, f"entry of {name}") for c in r.value])
        else:
            rows.append([_number(r, f"entry of {name}")])
    if shape[0] == 0 or shape[1] == 0:
        if rows and any(rows):
            raise ModelError(f"matrix {name} should be empty for shape {shape}", *_mark(node))
        return np.zeros(shape)
    if len(rows) != shape[0] or any(len(r) != shape[1] for r in rows):
        got = (len(rows), len(rows[0]) if rows else 0)
        raise ModelError(f"matrix {name} has shape {got}, expected {shape}", *_mark(node))
    return np.array(rows, dtype=float)


def _expr(node, what) -> Expr:
    if not isinstance(node, yaml.ScalarNode):
        raise ModelError(f"{what} must be an expression string", *_mark(node))
    line, col = _mark(node)
    if node.style in ("'", '"'):
        col += 1
    try:
        return Expr(str(node.value), line, col)
    except ExprError as e:
        raise ModelError(f"malformed expression in {what}: {e.args[0].split(' (line')[0]}",
                         e.line, e.col) from None


def _kernel(node, name, shape) -> KernelMatrix:
    if not isinstance(node, yaml.SequenceNode) or len(node.value) != shape[0]:
        raise ModelError(f"kernel {name} must have {shape[0]} rows", *_mark(node))
    rows = []
    for r in node.value:
        if not isinstance(r, yaml.SequenceNode) or len(r.value) != shape[1]:
            raise ModelError(f"kernel {name} must have {shape[1]} columns", *_mark(r))
        rows.append([_expr(c, f"kernel {name}") for c in r.value])
    return KernelMatrix(rows)


def parse_model(text: str) -> CddsModel:
    """Parse and validate a YAML model document."""
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ModelError(f"invalid YAML: {getattr(e, 'problem', e)}",
                         *(_mark_tuple(mark) if mark else (None, None))) from None
    if root is None:
        raise ModelError("empty model document")
    top = _map(root, "model document")
    for key in ("dims", "delays"):
        if key not in top:
            raise ModelError(f"missing section {key!r}")
    dims = _map(top["dims"], "dims")
    for key in ("n", "nu"):
        if key not in dims:
            raise ModelError(f"missing dimension {key!r}", *_mark(top["dims"]))
    n = int(_number(dims["n"], "n"))
    nu = int(_number(dims["nu"], "nu"))
    m = int(_number(dims["m"], "m")) if "m" in dims else 0
    q = int(_number(dims["q"], "q")) if "q" in dims else 0
    delays = _map(top["delays"], "delays")
    if "r1" not in delays:
        raise ModelError("missing delay field 'r1'", *_mark(top["delays"]))
    r1 = _number(delays["r1"], "r1")
    r2 = _number(delays["r2"], "r2") if "r2" in delays and _scalar(delays["r2"], "r2") is not None else None
    if r2 is not None and not r2 > r1:
        raise ModelError(f"delays need r1 < r2 (got r1={r1}, r2={r2})", *_mark(delays["r2"]))

    blocks = {}
    mats = _map(top["matrices"], "matrices") if "matrices" in top else {}
    for k, node in mats.items():
        if k not in _MATRIX_NAMES:
            raise ModelError(f"unknown matrix {k!r}", *_mark(node))
        blocks[k] = _matrix(node, k, _shape(k, n, nu, m, q))
    kers = _map(top["kernels"], "kernels") if "kernels" in top else {}
    for k, node in kers.items():
        if k not in _KERNEL_NAMES:
            raise ModelError(f"unknown kernel {k!r}", *_mark(node))
        blocks[k] = _kernel(node, k, _shape(k, n, nu, m, q))
    res = {"interval1": (), "interval2": ()}
    if "residuals" in top:
        for k, node in _map(top["residuals"], "residuals").items():
            if k not in res:
                raise ModelError(f"unknown residual section {k!r}", *_mark(node))
            if not isinstance(node, yaml.SequenceNode):
                raise ModelError("residual functions must be a list", *_mark(node))
            res[k] = tuple(_expr(c, f"residuals.{k}") for c in node.value)
    supply = {}
    if "supply" in top:
        supply = yaml.safe_load(yaml.serialize(top["supply"])) or {}
        if not isinstance(supply, dict):
            raise ModelError("supply must be a mapping", *_mark(top["supply"]))
    name = str(_scalar(top["name"], "name")) if "name" in top else ""
    try:
        return CddsModel.build(n, nu, m, q, r1, r2, residuals1=res["interval1"],
                               residuals2=res["interval2"], supply=supply, name=name, **blocks)
    except ModelError:
        raise
    except ValueError as e:
        raise ModelError(str(e)) from None


def _mark_tuple(mark):
    return mark.line + 1, mark.column + 1


def load_model(path) -> CddsModel:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


# ---------------------------------------------------------------------------
# Difference-equation check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DifferenceStability:
    verdict: str  # "SATISFIED" or "UNKNOWN"
    radius: float


def check_difference_stability(mdl: CddsModel) -> DifferenceStability:
    """Sufficient test ``rho(|A7| + |A8|) < 1`` for the difference equation."""
    M = np.abs(mdl.mats["A7"]) + np.abs(mdl.mats["A8"])
    rad = float(np.max(np.abs(np.linalg.eigvals(M)))) if M.size else 0.0
    return DifferenceStability("SATISFIED" if rad < 1.0 else "UNKNOWN", rad)


# ---------------------------------------------------------------------------
# Augmented form
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AugmentedForm:
    """Matrices acting on the augmented signal ``theta(t)``.

    Two-delay layout: ``dy1, dy2, w, x, y1, y2, F1, F2, E1, E2`` where
    ``F*`` are basis integrals and ``E*`` error integrals.  Single-delay
    layout: ``w, x, y1, F1, E1``.  ``eta`` records the error-integral
    scaling: with ``scaling='eta'`` the error columns carry
    ``eta E^{1/2}`` (the congruence-scaled form), with ``'inverse'`` they
    carry ``E`` (error integrals of ``E^{-1} eps``).
    """

    Abig: np.ndarray
    Sigma: np.ndarray
    Xi: np.ndarray
    Pi: np.ndarray | None
    Y: np.ndarray
    layout: dict
    dims: dict
    scaling: str
    eta: tuple

    @property
    def N(self) -> int:
        return self.Abig.shape[1]

    def select(self, *names) -> np.ndarray:
        """Selection matrix picking the named segments of theta."""
        rows = []
        for nm in names:
            sl = self.layout[nm]
            e = np.zeros((sl.stop - sl.start, self.N))
            e[:, sl] = np.eye(sl.stop - sl.start)
            rows.append(e)
        return np.vstack(rows) if rows else np.zeros((0, self.N))


def _error_cols(approx: ApproximationResult, scaling: str, eta: float) -> np.ndarray:
    """Matrix placed in the residual rows of the error columns (mu x mu)."""
    if approx.mu == 0:
        return np.zeros((0, 0))
    if scaling == "eta":
        return eta * sym_sqrt(approx.error_gram)
    if scaling == "inverse":
        return approx.error_gram
    raise ValueError(f"unknown scaling {scaling!r}")


def _kernel_blocks(C: np.ndarray, approx: ApproximationResult, nu: int, scaling: str, eta: float):
    mu, d = approx.mu, approx.dim
    gam = np.vstack([approx.gamma.reshape(mu, d), np.eye(d)])
    err = np.vstack([_error_cols(approx, scaling, eta), np.zeros((d, mu))])
    return C @ kron(gam, np.eye(nu)), C @ kron(err, np.eye(nu))


def build_augmented(
    mdl: CddsModel,
    kd1: KernelDecomposition,
    approx1: ApproximationResult,
    kd2: KernelDecomposition | None = None,
    approx2: ApproximationResult | None = None,
    scaling: str = "eta",
    eta1: float = 1.0,
    eta2: float = 1.0,
) -> AugmentedForm:
    """Assemble ``A``, ``Sigma``, ``Xi``, ``Pi`` and ``Y`` on the augmented layout."""
    n, nu, m, q = mdl.n, mdl.nu, mdl.m, mdl.q
    M = mdl.mats
    _check_interval(kd1, approx1, -mdl.r1, 0.0, "first")
    if mdl.single_delay:
        d, mu = approx1.dim, approx1.mu
        A4f, A4e = _kernel_blocks(kd1.coeffs["A4"], approx1, nu, scaling, eta1)
        C4f, C4e = _kernel_blocks(kd1.coeffs["C4"], approx1, nu, scaling, eta1)
        sizes = [("w", q), ("x", n), ("y1", nu), ("F1", d * nu), ("E1", mu * nu)]
        layout = _tile(sizes)
        Abig = np.hstack([M["D1"], M["A1"], M["A2"], A4f, A4e])
        Sigma = np.hstack([M["D2"], M["C1"], M["C2"], C4f, C4e])
        Xi = np.hstack([M["A6"], M["A7"], np.zeros((nu, d * nu))])
        Y = np.zeros((nu, Abig.shape[1]))
        Y[:, layout["y1"]] = M["A7"]
        dims = dict(n=n, nu=nu, m=m, q=q, d=d, delta=0, mu1=mu, mu2=0,
                    rho=d, l=n + d * nu, mu=mu, N=Abig.shape[1])
        return AugmentedForm(Abig=Abig, Sigma=Sigma, Xi=Xi, Pi=None, Y=Y, layout=layout,
                             dims=dims, scaling=scaling, eta=(eta1,))

    if kd2 is None or approx2 is None:
        raise ValueError("two-delay model needs a second-interval approximation")
    _check_interval(kd2, approx2, -mdl.r2, -mdl.r1, "second")
    d, mu1 = approx1.dim, approx1.mu
    dl, mu2 = approx2.dim, approx2.mu
    rho = d + dl
    l = n + 2 * nu + rho * nu
    A4f, A4e = _kernel_blocks(kd1.coeffs["A4"], approx1, nu, scaling, eta1)
    A5f, A5e = _kernel_blocks(kd2.coeffs["A5"], approx2, nu, scaling, eta2)
    C4f, C4e = _kernel_blocks(kd1.coeffs["C4"], approx1, nu, scaling, eta1)
    C5f, C5e = _kernel_blocks(kd2.coeffs["C5"], approx2, nu, scaling, eta2)
    sizes = [("dy1", nu), ("dy2", nu), ("w", q), ("x", n), ("y1", nu), ("y2", nu),
             ("F1", d * nu), ("F2", dl * nu), ("E1", mu1 * nu), ("E2", mu2 * nu)]
    layout = _tile(sizes)
    Abig = np.hstack([np.zeros((n, 2 * nu)), M["D1"], M["A1"], M["A2"], M["A3"],
                      A4f, A5f, A4e, A5e])
    Sigma = np.hstack([M["C6"], M["C7"], M["D2"], M["C1"], M["C2"], M["C3"],
                       C4f, C5f, C4e, C5e])
    Xi = np.hstack([M["A6"], M["A7"], M["A8"], np.zeros((nu, rho * nu))])
    Pi = np.vstack([Xi, np.hstack([np.zeros((2 * nu + rho * nu, n)), np.eye(2 * nu + rho * nu)])])
    Y = np.hstack([M["A7"], M["A8"], np.zeros((nu, q + l + (mu1 + mu2) * nu))])
    dims = dict(n=n, nu=nu, m=m, q=q, d=d, delta=dl, mu1=mu1, mu2=mu2, rho=rho, l=l,
                mu=mu1 + mu2, N=Abig.shape[1])
    if Abig.shape[1] != 2 * nu + q + l + (mu1 + mu2) * nu:
        raise ValueError("augmented column count does not match the layout")
    return AugmentedForm(Abig=Abig, Sigma=Sigma, Xi=Xi, Pi=Pi, Y=Y, layout=layout, dims=dims,
                         scaling=scaling, eta=(eta1, eta2))


def _tile(sizes) -> dict:
    out = {}
    i = 0
    for name, k in sizes:
        out[name] = slice(i, i + k)
        i += k
    return out


def _check_interval(kd, approx, lo, hi, which):
    iv = kd.interval
    if abs(iv.lo - lo) > 1e-12 * max(1.0, abs(lo)) or abs(iv.hi - hi) > 1e-12 * max(1.0, abs(hi)):
        raise ValueError(f"{which} approximation interval [{iv.lo}, {iv.hi}] does not match "
                         f"[{lo}, {hi}]")
    if approx.basis is not kd.basis:
        raise ValueError(f"{which} approximation uses a different basis than its decomposition")
