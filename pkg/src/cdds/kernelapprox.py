"""Kernel decomposition and least-squares approximation with error Grams.

Every distributed kernel on an interval is written exactly as

    K(tau) = C ([phi(tau); f(tau)] kron I_nu)

with ``f`` a differentiation-closed basis and ``phi`` a vector of residual
functions.  The residual functions are then approximated in ``span(f)``,
``phi = Gamma f + eps``, and the error Gram ``E = int eps eps^T`` is kept so
the analysis can account for what the basis misses.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .basis import Basis
from .expr import Expr, KernelMatrix
from .matrixkit import min_eig, sym_sqrt
from .quadrature import Interval, Weight, integrate

__all__ = [
    "ResidualFamily",
    "KernelDecomposition",
    "ApproximationResult",
    "HierarchyStep",
    "DecompositionError",
    "decompose_kernels",
    "approximate",
    "least_squares_gamma",
    "custom_gamma",
    "hierarchy_step",
    "error_scaled_functions",
]

DEFAULT_TOL = 1e-13


class DecompositionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ResidualFamily:
    """Vector of scalar residual functions ``phi``; ``mu = 0`` is legal."""

    funcs: tuple
    labels: tuple

    @classmethod
    def from_exprs(cls, exprs: Sequence) -> "ResidualFamily":
        es = [e if isinstance(e, Expr) else Expr(str(e)) for e in exprs]
        return cls(tuple(es), tuple(e.text for e in es))

    @classmethod
    def empty(cls) -> "ResidualFamily":
        return cls((), ())

    @property
    def mu(self) -> int:
        return len(self.funcs)

    @property
    def omega_hint(self) -> float:
        return max([getattr(f, "omega_hint", 0.0) for f in self.funcs] + [0.0])

    def __call__(self, taus) -> np.ndarray:
        t = np.atleast_1d(np.asarray(taus, dtype=float))
        if not self.funcs:
            return np.zeros((t.size, 0))
        return np.stack([np.broadcast_to(f(t), t.shape) for f in self.funcs], axis=1)

    def extend(self, funcs, labels) -> "ResidualFamily":
        return ResidualFamily(self.funcs + tuple(funcs), self.labels + tuple(labels))


@dataclass(frozen=True, eq=False)
class KernelDecomposition:
    """Exact split of kernels on one interval over ``[phi; f]``.

    ``coeffs[name]`` has shape ``rows x (mu + dim) * nu``; its first
    ``mu * nu`` columns multiply ``phi kron I`` and the rest ``f kron I``.
    """

    basis: Basis
    residuals: ResidualFamily
    nu: int
    coeffs: dict
    fit_residual: float = 0.0

    @property
    def mu(self) -> int:
        return self.residuals.mu

    @property
    def interval(self) -> Interval:
        return self.basis.interval

    def coeff_on_residual(self, name: str) -> np.ndarray:
        return self.coeffs[name][:, : self.mu * self.nu]

    def coeff_on_basis(self, name: str) -> np.ndarray:
        return self.coeffs[name][:, self.mu * self.nu:]

    def joint_gram(self, tol: float = DEFAULT_TOL) -> np.ndarray:
        fam = self.residuals

        def h(t):
            return np.hstack([fam(t), self.basis(t)])

        return _gram_of(h, self.interval, self.mu + self.basis.dim, tol, self._omega())

    def _omega(self) -> float | None:
        w = max(self.residuals.omega_hint, self.basis.omega_max or 0.0)
        return w or None


@dataclass(frozen=True, eq=False)
class ApproximationResult:
    basis: Basis
    residuals: ResidualFamily
    gamma: np.ndarray
    error_gram: np.ndarray
    basis_gram: np.ndarray
    basis_gram_inv: np.ndarray
    orthogonality_residual: float
    least_squares: bool

    @property
    def mu(self) -> int:
        return self.residuals.mu

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def residual_norm(self) -> float:
        return float(np.trace(self.error_gram)) if self.mu else 0.0

    def eps(self, taus) -> np.ndarray:
        """Residual ``phi(tau) - Gamma f(tau)``, shape ``(len(taus), mu)``."""
        return self.residuals(taus) - self.basis(taus) @ self.gamma.T

    def error_gram_sqrt(self) -> np.ndarray:
        return sym_sqrt(self.error_gram)


def _omega_of(*objs) -> float | None:
    w = 0.0
    for o in objs:
        w = max(w, getattr(o, "omega_hint", 0.0) or getattr(o, "omega_max", 0.0) or 0.0)
    return w or None


def _gram_of(h: Callable, iv: Interval, dim: int, tol: float, omega) -> np.ndarray:
    if dim == 0:
        return np.zeros((0, 0))

    def outer(t):
        v = h(t)
        return v[:, :, None] * v[:, None, :]

    g = integrate(outer, iv, None, tol, omega_max=omega).value
    return 0.5 * (g + g.T)


def _cross(a: Callable, b: Callable, iv: Interval, da: int, db: int, tol: float, omega) -> np.ndarray:
    if da == 0 or db == 0:
        return np.zeros((da, db))

    def outer(t):
        return a(t)[:, :, None] * b(t)[:, None, :]

    return integrate(outer, iv, None, tol, omega_max=omega).value


# ---------------------------------------------------------------------------
# Approximation
# ---------------------------------------------------------------------------

def approximate(
    residuals: ResidualFamily,
    basis: Basis,
    gamma: np.ndarray | None = None,
    tol: float = DEFAULT_TOL,
) -> ApproximationResult:
    """Approximate ``phi`` in ``span(f)``; least squares unless ``gamma`` given."""
    mu, d = residuals.mu, basis.dim
    iv = basis.interval
    omega = _omega_of(residuals, basis)
    G = basis.gram(tol)
    F = np.linalg.inv(G)
    F = 0.5 * (F + F.T)
    cross = _cross(residuals, basis, iv, mu, d, tol, omega)  # int phi f^T
    ls = gamma is None
    if ls:
        gamma = cross @ F
    else:
        gamma = np.asarray(gamma, dtype=float).reshape(mu, d) if mu else np.zeros((0, d))
        if gamma.shape != (mu, d):
            raise ValueError(f"gamma must be {mu}x{d}, got {gamma.shape}")

    def eps(t):
        return residuals(t) - basis(t) @ gamma.T

    E = _gram_of(eps, iv, mu, tol, omega)
    ortho = 0.0
    if mu:
        ortho = float(np.abs(_cross(eps, basis, iv, mu, d, tol, omega)).max())
    return ApproximationResult(
        basis=basis, residuals=residuals, gamma=gamma, error_gram=E, basis_gram=G,
        basis_gram_inv=F, orthogonality_residual=ortho, least_squares=ls,
    )


def least_squares_gamma(k: KernelDecomposition, tol: float = DEFAULT_TOL,
                        check: str = "strict") -> ApproximationResult:
    """Least-squares coefficients ``Gamma = (int phi f^T) F`` and error Gram.

    ``check='warn'`` downgrades a near-dependent ``[phi; f]`` to a warning;
    this is meant for callers that never invert ``E`` (the scaled LMI path).

    Raises
    ------
    DecompositionError
        When ``[phi; f]`` is numerically linearly dependent and ``check`` is
        ``'strict'``.
    """
    try:
        _check_joint(k, tol)
    except DecompositionError as e:
        if check != "warn":
            raise
        warnings.warn(f"{e}; continuing with a near-singular error Gram", RuntimeWarning,
                      stacklevel=2)
    return approximate(k.residuals, k.basis, None, tol)


def custom_gamma(k: KernelDecomposition, gamma, tol: float = DEFAULT_TOL) -> ApproximationResult:
    """Same outputs as :func:`least_squares_gamma` for a user-supplied ``Gamma``."""
    return approximate(k.residuals, k.basis, gamma, tol)


def _check_joint(k: KernelDecomposition, tol: float) -> None:
    if k.mu == 0:
        return
    g = k.joint_gram(tol)
    w, v = np.linalg.eigh(g)
    if w[0] <= 1e-10 * np.trace(g):
        vec = v[:, 0]
        names = list(k.residuals.labels) + [f"f[{i}]" for i in range(k.basis.dim)]
        top = np.argsort(-np.abs(vec))[:3]
        desc = ", ".join(f"{vec[i]:+.3f}*{names[i]}" for i in top)
        raise DecompositionError(
            f"linearly dependent kernel/basis family on [{k.interval.lo}, {k.interval.hi}]: "
            f"min eigenvalue {w[0]:.3e}, direction {desc}")


@dataclass(frozen=True)
class HierarchyStep:
    E_d: np.ndarray
    E_next: np.ndarray
    min_eig_diff: float
    rank_one_residual: float
    a_next: np.ndarray
    norm_next: float


def hierarchy_step(
    residuals: ResidualFamily,
    basis: Basis,
    extended_basis: Basis,
    tol: float = DEFAULT_TOL,
    weight: Weight | None = None,
) -> HierarchyStep:
    """Compare error Grams before and after adding one orthogonal function.

    ``extended_basis`` must reproduce ``basis`` in its leading components and
    add one function orthogonal to all of them.  Returns ``E_d``,
    ``E_{d+1}`` and the residual of ``E_d - E_{d+1} = n a a^T`` where
    ``n = int w f_{d+1}^2`` and ``a = int w phi f_{d+1} / n``.
    """
    weight = weight or Weight.unit()
    d = basis.dim
    if extended_basis.dim != d + 1:
        raise ValueError("extended basis must add exactly one function")
    iv = basis.interval
    omega = _omega_of(residuals, extended_basis)
    G = _wgram(extended_basis, iv, d + 1, tol, omega, weight)
    off = np.abs(G[:d, d]).max() if d else 0.0
    if off > 1e-10 * np.trace(G):
        raise ValueError(f"orthogonality of the added function violated (max {off:.3e})")
    t_probe = np.linspace(iv.lo, iv.hi, 7)
    if np.abs(extended_basis(t_probe)[:, :d] - basis(t_probe)).max() > 1e-10:
        raise ValueError("extended basis does not extend the given basis")
    E_d = _weighted_error_gram(residuals, basis, iv, tol, omega, weight)
    E_n = _weighted_error_gram(residuals, extended_basis, iv, tol, omega, weight)
    fn = lambda t: extended_basis(t)[:, d:]
    norm = float(G[d, d])
    a = _wcross(residuals, fn, iv, residuals.mu, 1, tol, omega, weight)[:, 0] / norm
    diff = E_d - E_n
    resid = float(np.abs(diff - norm * np.outer(a, a)).max()) if residuals.mu else 0.0
    return HierarchyStep(E_d=E_d, E_next=E_n, min_eig_diff=min_eig(diff),
                         rank_one_residual=resid, a_next=a, norm_next=norm)


def _wgram(h, iv, dim, tol, omega, weight):
    def outer(t):
        v = h(t)
        return v[:, :, None] * v[:, None, :]

    g = integrate(outer, iv, weight, tol, omega_max=omega).value
    return 0.5 * (g + g.T)


def _wcross(a, b, iv, da, db, tol, omega, weight):
    if da == 0 or db == 0:
        return np.zeros((da, db))

    def outer(t):
        return a(t)[:, :, None] * b(t)[:, None, :]

    return integrate(outer, iv, weight, tol, omega_max=omega).value


def _weighted_error_gram(residuals, basis, iv, tol, omega, weight):
    mu = residuals.mu
    if mu == 0:
        return np.zeros((0, 0))
    G = _wgram(basis, iv, basis.dim, tol, omega, weight)
    C = _wcross(residuals, basis, iv, mu, basis.dim, tol, omega, weight)
    gamma = np.linalg.solve(G, C.T).T

    def eps(t):
        return residuals(t) - basis(t) @ gamma.T

    return _wgram(eps, iv, mu, tol, omega, weight)


def error_scaled_functions(a: ApproximationResult, cutoff: float = 1e-12) -> Callable:
    """Return ``tau -> E^{-1} eps(tau)`` (pseudo-inverse below ``cutoff * trace``)."""
    if a.mu == 0:
        return lambda t: np.zeros((np.atleast_1d(t).size, 0))
    E = a.error_gram
    tr = float(np.trace(E))
    w, v = np.linalg.eigh(E)
    keep = w > cutoff * tr
    if not keep.all():
        warnings.warn(
            f"error Gram is nearly singular (min eigenvalue {w[0]:.3e}); using a pseudo-inverse",
            RuntimeWarning, stacklevel=2)
    inv = (v[:, keep] / w[keep]) @ v[:, keep].T

    def fn(t):
        return a.eps(t) @ inv.T

    return fn


# ---------------------------------------------------------------------------
# Decomposition of kernel matrices
# ---------------------------------------------------------------------------

def decompose_kernels(
    kernels: dict,
    basis: Basis,
    nu: int,
    residuals: Sequence | ResidualFamily | None = None,
    auto: bool = True,
    tol: float = DEFAULT_TOL,
    rel_tol: float = 1e-9,
) -> KernelDecomposition:
    """Split kernel matrices on one interval over ``[phi; f]``.

    Parameters
    ----------
    kernels : dict
        ``name -> KernelMatrix`` with ``nu`` columns each.
    basis : Basis
    nu : int
    residuals : sequence of expressions or ResidualFamily, optional
        User residual functions.  They are kept even when no kernel entry
        needs them.
    auto : bool
        Append kernel entries that the current span cannot represent.
    rel_tol : float
        Relative L2 threshold for "representable".
    """
    if isinstance(residuals, ResidualFamily):
        fam = residuals
    else:
        fam = ResidualFamily.from_exprs(residuals or [])
    iv = basis.interval
    for name, K in kernels.items():
        if K.cols != nu:
            raise ValueError(f"kernel {name} has {K.cols} columns, expected {nu}")

    entries = []
    seen = {}
    for name, K in kernels.items():
        for i, row in enumerate(K.entries):
            for j, e in enumerate(row):
                if not e.is_zero:
                    entries.append((name, i, j, e))
                    seen.setdefault(e.text, e)

    omega = _omega_of(basis, fam, *[e for *_, e in entries])
    solver = _SpanSolver(basis, fam, tol, omega)
    coef_of = {}
    worst = 0.0
    for text, e in seen.items():
        c, rel = solver.represent(e)
        if rel > rel_tol:
            if not auto:
                raise DecompositionError(
                    f"kernel entry {text!r} is not representable over the basis and residuals "
                    f"(relative misfit {rel:.3e})")
            fam = fam.extend([e], [text])
            solver = _SpanSolver(basis, fam, tol, omega)
            c, rel = solver.represent(e)
        worst = max(worst, rel)
        coef_of[text] = c
    # coefficients may have been computed before the family grew
    for text, e in seen.items():
        if coef_of[text].size != fam.mu + basis.dim:
            coef_of[text], _ = solver.represent(e)

    mu, d = fam.mu, basis.dim
    coeffs = {}
    for name, K in kernels.items():
        C = np.zeros((K.rows, (mu + d) * nu))
        for i, row in enumerate(K.entries):
            for j, e in enumerate(row):
                if e.is_zero:
                    continue
                c = coef_of[e.text]
                # column k*nu + j multiplies h_k(tau) y_j
                C[i, np.arange(mu + d) * nu + j] = c
        coeffs[name] = C
    return KernelDecomposition(basis=basis, residuals=fam, nu=nu, coeffs=coeffs, fit_residual=worst)


class _SpanSolver:
    """Represents scalar functions over ``[phi; f]`` via ``f`` then ``eps``."""

    def __init__(self, basis: Basis, fam: ResidualFamily, tol: float, omega):
        self.basis = basis
        self.fam = fam
        self.tol = tol
        self.omega = omega
        iv = basis.interval
        self.F = np.linalg.inv(basis.gram(tol))
        mu, d = fam.mu, basis.dim
        C = _cross(fam, basis, iv, mu, d, tol, omega)
        self.gamma = C @ self.F

        def eps(t):
            return fam(t) - basis(t) @ self.gamma.T

        self.eps = eps
        self.E = _gram_of(eps, iv, mu, tol, omega)

    def represent(self, e) -> tuple[np.ndarray, float]:
        iv = self.basis.interval
        mu, d = self.fam.mu, self.basis.dim
        k = lambda t: np.broadcast_to(e(t), np.shape(t))[:, None]
        b = (_cross(k, self.basis, iv, 1, d, self.tol, self.omega) @ self.F)[0]

        def kperp(t):
            return k(t)[:, 0] - self.basis(t) @ b

        a = np.zeros(mu)
        if mu:
            rhs = _cross(lambda t: kperp(t)[:, None], self.eps, iv, 1, mu, self.tol, self.omega)[0]
            a = np.linalg.lstsq(self.E, rhs, rcond=1e-14)[0]
        coef_f = b - self.gamma.T @ a
        coef = np.concatenate([a, coef_f])

        def misfit(t):
            return (kperp(t) - (self.eps(t) @ a if mu else 0.0))[:, None] ** 2

        num = integrate(misfit, iv, None, self.tol, omega_max=self.omega).value[0]
        den = integrate(lambda t: k(t) ** 2, iv, None, self.tol, omega_max=self.omega).value[0]
        rel = float(np.sqrt(max(num, 0.0) / den)) if den > 0 else 0.0
        return coef, rel
