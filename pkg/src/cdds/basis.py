"""Differentiation-closed function families and their companion matrices.

A :class:`Basis` is a vector of functions ``f`` on an interval with
``f'(tau) = M f(tau)`` for a constant companion matrix ``M``.  A
:class:`DerivedBasis` is a second family tied to a base one through a
relation matrix: either ``phi' = R f`` (unit weight) or, for the weighted
polynomial families, ``d/dtau[(tau + c) g] = N f``.

Shipped families: shifted Legendre polynomials, trigonometric families
``(1, sin(k w tau), cos(k w tau))`` and exponentials ``exp(a_i tau)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .quadrature import Interval, Weight, gram as _gram

__all__ = [
    "Basis",
    "DerivedBasis",
    "NoClosureError",
    "legendre_basis",
    "trig_basis",
    "exp_basis",
    "weighted_poly_basis",
    "derived_unit_basis",
    "subset_basis",
    "boundary",
    "closure_residual",
    "parse_basis_spec",
]


class NoClosureError(ValueError):
    """Requested relation does not exist for the given base family."""


@dataclass(frozen=True, eq=False)
class Basis:
    """Differentiation-closed family on ``interval``.

    ``eval(taus)`` returns an array of shape ``(len(taus), dim)``.
    """

    dim: int
    interval: Interval
    eval: Callable[[np.ndarray], np.ndarray]
    companion: np.ndarray
    label: str
    kind: str = "custom"
    omega_max: float | None = None
    params: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    def __call__(self, taus) -> np.ndarray:
        return _eval2d(self.eval, taus, self.dim)

    @property
    def is_polynomial(self) -> bool:
        return self.kind == "legendre"

    def gram(self, tol: float = 1e-13) -> np.ndarray:
        """Unit-weight Gram matrix (the inverse of the F matrix)."""
        key = ("gram", tol)
        if key not in self._cache:
            if self.kind == "legendre":
                L = self.interval.length
                g = np.diag([L / (2 * i + 1) for i in range(self.dim)])
            elif self.kind == "exp":
                g = _exp_gram(np.asarray(self.params["rates"]), self.interval)
            else:
                g = _gram(self, self.interval, Weight.unit(), tol,
                          omega_max=self.omega_max).matrix
            self._cache[key] = g
        return self._cache[key]


@dataclass(frozen=True, eq=False)
class DerivedBasis:
    """Family tied to ``base`` by ``relation`` (shape ``dim x base.dim``).

    For ``weight.kind == 'unit'`` the relation reads ``phi' = relation @ f``.
    For an affine weight ``tau + c`` it reads
    ``d/dtau[(tau + c) g] = relation @ f``; the companion form
    ``(tau + c) g' = printed_relation @ f`` is kept alongside.
    """

    base: Basis
    dim: int
    eval: Callable[[np.ndarray], np.ndarray]
    relation: np.ndarray
    weight: Weight
    label: str
    printed_relation: np.ndarray | None = None
    orthogonal: bool = False
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def interval(self) -> Interval:
        return self.base.interval

    def __call__(self, taus) -> np.ndarray:
        return _eval2d(self.eval, taus, self.dim)

    def gram(self, tol: float = 1e-13) -> np.ndarray:
        """Gram matrix under this family's own weight."""
        key = ("gram", tol)
        if key not in self._cache:
            if self.dim == 0:
                g = np.zeros((0, 0))
            else:
                g = _gram(self, self.interval, self.weight, tol,
                          omega_max=self.base.omega_max).matrix
            self._cache[key] = g
        return self._cache[key]


def _eval2d(fn, taus, dim) -> np.ndarray:
    t = np.atleast_1d(np.asarray(taus, dtype=float))
    out = np.asarray(fn(t), dtype=float)
    return out.reshape(t.size, dim)


# ---------------------------------------------------------------------------
# Legendre
# ---------------------------------------------------------------------------

def _legendre_values(x: np.ndarray, n: int) -> np.ndarray:
    """P_0..P_{n-1} at ``x`` (standard Legendre on [-1, 1]); shape (len(x), n)."""
    out = np.empty((x.size, n))
    if n == 0:
        return out
    out[:, 0] = 1.0
    if n > 1:
        out[:, 1] = x
    for k in range(1, n - 1):
        out[:, k + 1] = ((2 * k + 1) * x * out[:, k] - k * out[:, k - 1]) / (k + 1)
    return out


def _legendre_deriv_exact(rows: int, cols: int) -> list[list[Fraction]]:
    """d/dx P_i = sum_{k = i-1, i-3, ...} (2k+1) P_k, as an exact table."""
    tab = [[Fraction(0)] * cols for _ in range(rows)]
    for i in range(rows):
        for k in range(i - 1, -1, -2):
            if k >= cols:
                raise NoClosureError(f"derivative of P_{i} needs P_{k}, beyond {cols} columns")
            tab[i][k] = Fraction(2 * k + 1)
    return tab


def _legendre_eval_fn(iv: Interval, n: int):
    lo, hi = iv.lo, iv.hi
    L = iv.length

    def ev(t):
        s = (np.asarray(t, dtype=float) - hi) / L
        return _legendre_values(2.0 * s + 1.0, n)

    return ev


def legendre_basis(degree: int, iv: Interval) -> Basis:
    """Shifted Legendre polynomials of degree ``0..degree`` on ``iv``.

    With ``s = (tau - hi) / (hi - lo)`` in ``[-1, 0]`` the functions are
    ``P_i(2 s + 1)``, so they equal 1 at the right end and ``(-1)^i`` at the
    left end.
    """
    if degree < 0:
        raise ValueError("degree must be >= 0")
    n = degree + 1
    exact = _legendre_deriv_exact(n, n)
    scale = 2.0 / iv.length
    comp = np.array([[float(v) * scale for v in row] for row in exact]).reshape(n, n)
    return Basis(
        dim=n, interval=iv, eval=_legendre_eval_fn(iv, n), companion=comp,
        label=f"legendre:{degree}", kind="legendre",
        params={"degree": degree, "exact_companion": exact},
    )


# ---------------------------------------------------------------------------
# Trigonometric and exponential
# ---------------------------------------------------------------------------

def _trig_companion(order: int, freq: float) -> np.ndarray:
    k = np.arange(1, order + 1) * freq
    m = np.zeros((2 * order + 1, 2 * order + 1))
    m[1:order + 1, order + 1:] = np.diag(k)
    m[order + 1:, 1:order + 1] = -np.diag(k)
    return m


def trig_basis(order: int, freq: float, iv: Interval) -> Basis:
    """``(1, sin(w t)..sin(K w t), cos(w t)..cos(K w t))`` with ``K = order``."""
    if order < 1:
        raise ValueError("order must be >= 1")
    if freq == 0:
        raise ValueError("freq must be nonzero")
    ks = np.arange(1, order + 1) * float(freq)

    def ev(t):
        t = np.asarray(t, dtype=float)[:, None]
        return np.hstack([np.ones_like(t), np.sin(ks * t), np.cos(ks * t)])

    return Basis(
        dim=2 * order + 1, interval=iv, eval=ev, companion=_trig_companion(order, freq),
        label=f"trig:{order}@{freq:g}", kind="trig", omega_max=float(abs(ks[-1])),
        params={"order": order, "freq": float(freq)},
    )


def exp_basis(rates: Sequence[float], iv: Interval) -> Basis:
    """``exp(a_i tau)`` for distinct rates ``a_i``."""
    a = np.asarray(rates, dtype=float).ravel()
    if a.size == 0:
        raise ValueError("need at least one rate")
    if np.unique(a).size != a.size:
        raise ValueError("exponential rates must be distinct")

    def ev(t):
        return np.exp(np.asarray(t, dtype=float)[:, None] * a[None, :])

    return Basis(
        dim=a.size, interval=iv, eval=ev, companion=np.diag(a),
        label="exp:" + ",".join(f"{v:g}" for v in a), kind="exp",
        params={"rates": tuple(a.tolist())},
    )


def _exp_gram(a: np.ndarray, iv: Interval) -> np.ndarray:
    s = a[:, None] + a[None, :]
    lo, hi = iv.lo, iv.hi
    small = np.abs(s) * iv.length < 1e-8
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(small, iv.length * np.exp(0.5 * s * (lo + hi)),
                     (np.exp(s * hi) - np.exp(s * lo)) / np.where(small, 1.0, s))
    return g


# ---------------------------------------------------------------------------
# Derived families
# ---------------------------------------------------------------------------

def subset_basis(base: Basis, indices: Sequence[int], label: str | None = None) -> DerivedBasis:
    """Unit-weight derived family made of selected components of ``base``."""
    idx = np.asarray(list(indices), dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= base.dim):
        raise ValueError("subset index out of range")

    def ev(t):
        return base(t)[:, idx]

    return DerivedBasis(
        base=base, dim=idx.size, eval=ev, relation=base.companion[idx, :].copy(),
        weight=Weight.unit(), label=label or f"{base.label}[{','.join(map(str, idx))}]",
        orthogonal=base.kind == "legendre",
    )


def derived_unit_basis(base: Basis, dim: int | None = None) -> DerivedBasis:
    """Unit-weight derived family satisfying ``phi' = R f``.

    ``dim=None`` gives ``phi = f`` with ``R`` the companion matrix.  Smaller
    dimensions take leading Legendre polynomials, a lower-order trig family
    or the first exponentials.  Legendre bases also admit ``dim = base.dim
    + 1``, because the derivative of the next polynomial stays in the span.
    """
    if dim is None or dim == base.dim:
        return subset_basis(base, range(base.dim), label=base.label)
    if dim < 0:
        raise ValueError("dim must be >= 0")
    if base.kind == "legendre":
        if dim > base.dim + 1:
            raise NoClosureError(
                f"Legendre family of dimension {dim} is not closed over {base.label}")
        exact = _legendre_deriv_exact(dim, base.dim)
        scale = 2.0 / base.interval.length
        rel = np.array([[float(v) * scale for v in row] for row in exact]).reshape(dim, base.dim)
        return DerivedBasis(
            base=base, dim=dim, eval=_legendre_eval_fn(base.interval, dim), relation=rel,
            weight=Weight.unit(), label=f"legendre:{dim - 1}", orthogonal=True,
        )
    if dim > base.dim:
        raise NoClosureError(f"no closed family of dimension {dim} over {base.label}")
    if base.kind == "trig":
        order = base.params["order"]
        if dim % 2 == 0:
            raise NoClosureError("trig sub-families have odd dimension 2k+1")
        k = (dim - 1) // 2
        idx = [0] + list(range(1, k + 1)) + list(range(order + 1, order + k + 1))
        return subset_basis(base, idx, label=f"trig:{k}@{base.params['freq']:g}")
    return subset_basis(base, range(dim))


def _poly_mul_lin(p: list[Fraction], a: Fraction) -> list[Fraction]:
    """(s + a) * p(s), coefficients lowest degree first."""
    out = [Fraction(0)] * (len(p) + 1)
    for j, c in enumerate(p):
        out[j] += a * c
        out[j + 1] += c
    return out


def _poly_deriv(p: list[Fraction]) -> list[Fraction]:
    return [j * p[j] for j in range(1, len(p))] or [Fraction(0)]


def _shifted_legendre_monomials(n: int) -> list[list[Fraction]]:
    """Coefficients in ``s`` of ``P_k(2 s + 1)``, k < n (lowest degree first)."""
    rows: list[list[Fraction]] = []
    x = [Fraction(1), Fraction(2)]  # 2s + 1
    for k in range(n):
        if k == 0:
            rows.append([Fraction(1)])
        elif k == 1:
            rows.append(x[:])
        else:
            a = _poly_mul_x(rows[k - 1], x)
            b = rows[k - 2]
            new = [Fraction(0)] * (k + 1)
            for j, c in enumerate(a):
                new[j] += Fraction(2 * k - 1, k) * c
            for j, c in enumerate(b):
                new[j] -= Fraction(k - 1, k) * c
            rows.append(new)
    return rows


def _poly_mul_x(p, x):
    out = [Fraction(0)] * (len(p) + len(x) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(x):
            out[i + j] += a * b
    return out


def _to_legendre(p: list[Fraction], n: int, leg: list[list[Fraction]]) -> list[Fraction]:
    """Expand a polynomial in ``s`` over ``P_0(2s+1)..P_{n-1}(2s+1)`` exactly."""
    p = list(p) + [Fraction(0)] * max(0, n - len(p))
    if any(c != 0 for c in p[n:]):
        raise NoClosureError("polynomial degree exceeds the base family")
    p = p[:n]
    coef = [Fraction(0)] * n
    for k in range(n - 1, -1, -1):
        lead = leg[k][k]
        c = p[k] / lead
        coef[k] = c
        for j in range(k + 1):
            p[j] -= c * leg[k][j]
    return coef


def weighted_poly_basis(degree: int, iv: Interval, offset: float,
                        base: Basis | None = None) -> DerivedBasis:
    """Polynomials orthogonal under ``tau + offset`` on ``iv``.

    Built by exact rational Gram-Schmidt in ``s = (tau - hi)/(hi - lo)``.
    ``relation`` satisfies ``d/dtau[(tau + offset) g] = relation @ f`` and
    ``printed_relation`` satisfies ``(tau + offset) g' = printed_relation @ f``,
    both as exact polynomial identities, where ``f`` is the Legendre base.
    """
    if base is None:
        base = legendre_basis(degree, iv)
    if base.kind != "legendre":
        raise NoClosureError(f"no weighted polynomial relation over non-polynomial {base.label}")
    if base.interval != iv:
        raise ValueError("base interval does not match")
    if degree < 0:
        raise ValueError("degree must be >= 0")
    p = degree + 1
    if p > base.dim:
        raise NoClosureError(f"weighted family of dimension {p} exceeds the base dimension {base.dim}")
    Weight.affine(offset).check(iv)
    L = iv.length
    a = Fraction((iv.hi + offset) / L).limit_denominator(10**9)
    # moments of (s + a) on [-1, 0]
    mom = [Fraction((-1) ** k, k + 1) for k in range(2 * p + 2)]
    wm = [mom[k + 1] + a * mom[k] for k in range(2 * p + 1)]

    def inner(u, v):
        return sum(ui * vj * wm[i + j] for i, ui in enumerate(u) for j, vj in enumerate(v))

    polys: list[list[Fraction]] = []
    for j in range(p):
        q = [Fraction(0)] * j + [Fraction(1)]
        for r in polys:
            c = inner(q, r) / inner(r, r)
            q = [qi - c * (r[i] if i < len(r) else 0) for i, qi in enumerate(q)]
        polys.append(q)

    leg = _shifted_legendre_monomials(base.dim)
    rel, printed = [], []
    for q in polys:
        # d/dtau = (1/L) d/ds and tau + offset = L (s + a): the L factors cancel
        rel.append(_to_legendre(_poly_deriv(_poly_mul_lin(q, a)), base.dim, leg))
        printed.append(_to_legendre(_poly_mul_lin(_poly_deriv(q), a), base.dim, leg))
    hi = iv.hi
    coeffs = np.array([[float(c) for c in q] + [0.0] * (p - len(q)) for q in polys]).reshape(p, p)

    def ev(t):
        s = (np.asarray(t, dtype=float) - hi) / L
        V = np.vander(s, p, increasing=True)
        return V @ coeffs.T

    exact_gram = [L * L * inner(q, q) for q in polys]
    return DerivedBasis(
        base=base, dim=p, eval=ev,
        relation=np.array([[float(c) for c in r] for r in rel]).reshape(p, base.dim),
        weight=Weight.affine(offset), label=f"wpoly:{degree}",
        printed_relation=np.array([[float(c) for c in r] for r in printed]).reshape(p, base.dim),
        orthogonal=True,
        _cache={"exact": {"polys": polys, "a": a, "relation": rel, "printed": printed,
                          "gram_diag": exact_gram}},
    )


# ---------------------------------------------------------------------------
# Evaluation helpers
# ---------------------------------------------------------------------------

def boundary(b: Basis | DerivedBasis, tau: float) -> np.ndarray:
    """Evaluate ``b`` at a point of its closed interval."""
    iv = b.interval
    if not iv.contains(tau, slack=1e-12):
        raise ValueError(f"tau = {tau} outside [{iv.lo}, {iv.hi}]")
    tau = min(max(tau, iv.lo), iv.hi)
    return b(np.array([tau]))[0]


def closure_residual(b: Basis, npts: int = 101) -> float:
    """Max over a grid of ``|f'(tau) - M f(tau)|`` using central differences.

    The difference step is ``1e-6`` of the interval length; the residual is
    divided by ``1 + ||M||``.
    """
    iv = b.interval
    h = 1e-6 * iv.length
    t = np.linspace(iv.lo + h, iv.hi - h, npts)
    d = (b(t + h) - b(t - h)) / (2 * h)
    r = d - b(t) @ b.companion.T
    return float(np.abs(r).max() / (1.0 + np.linalg.norm(b.companion, 2)))


_SPEC = re.compile(
    r"^\s*(?:(legendre):(\d+)|(trig):(\d+)@([-+0-9.eE]+)|(exp):([-+0-9.eE,\s]+))\s*$"
)


def parse_basis_spec(text: str, iv: Interval) -> Basis:
    """Parse ``legendre:<deg>``, ``trig:<order>@<freq>`` or ``exp:<a1,a2,...>``."""
    m = _SPEC.match(text)
    if not m:
        raise ValueError(
            f"bad basis spec {text!r}; expected legendre:<d>, trig:<k>@<w> or exp:<a1,...>")
    if m.group(1):
        return legendre_basis(int(m.group(2)), iv)
    if m.group(3):
        return trig_basis(int(m.group(4)), float(m.group(5)), iv)
    rates = [float(v) for v in m.group(7).split(",") if v.strip()]
    return exp_basis(rates, iv)
