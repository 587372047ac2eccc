"""Dense real matrix helpers shared by every other module.

Matrices are plain ``numpy`` arrays.  Zero-sized operands are legal
everywhere and follow the usual empty-matrix conventions (a 0 x k block
contributes no rows, a k x 0 block contributes no columns).
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "as_mat",
    "kron",
    "dsum",
    "sy",
    "congruence",
    "svec",
    "smat",
    "svec_dim",
    "min_eig",
    "signature",
    "sym_sqrt",
    "hcat",
]


def as_mat(x, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Coerce ``x`` to a 2-D float array, reshaping empties to ``rows x cols``."""
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(1, -1) if a.size else a.reshape(0 if rows is None else rows, 0)
    if a.size == 0 and rows is not None and cols is not None:
        a = np.zeros((rows, cols))
    if rows is not None and a.shape[0] != rows:
        raise ValueError(f"expected {rows} rows, got shape {a.shape}")
    if cols is not None and a.shape[1] != cols:
        raise ValueError(f"expected {cols} columns, got shape {a.shape}")
    return a


def kron(x, y) -> np.ndarray:
    """Kronecker product; empty operands give an empty product of matching shape."""
    x = as_mat(x)
    y = as_mat(y)
    if x.size == 0 or y.size == 0:
        return np.zeros((x.shape[0] * y.shape[0], x.shape[1] * y.shape[1]))
    return np.kron(x, y)


def dsum(*blocks) -> np.ndarray:
    """Block-diagonal (direct) sum.

    Accepts either several matrices or a single sequence of them.
    ``dsum()`` and ``dsum([])`` give the 0 x 0 matrix.
    """
    if len(blocks) == 1 and isinstance(blocks[0], (list, tuple)):
        blocks = tuple(blocks[0])
    mats = [as_mat(b) for b in blocks]
    rows = sum(m.shape[0] for m in mats)
    cols = sum(m.shape[1] for m in mats)
    out = np.zeros((rows, cols))
    i = j = 0
    for m in mats:
        out[i:i + m.shape[0], j:j + m.shape[1]] = m
        i += m.shape[0]
        j += m.shape[1]
    return out


def sy(x) -> np.ndarray:
    """Return ``X + X^T``."""
    x = as_mat(x)
    if x.shape[0] != x.shape[1]:
        raise ValueError(f"sy() needs a square matrix, got {x.shape}")
    return x + x.T


def congruence(y, x) -> np.ndarray:
    """Return ``X^T Y X`` (symmetrised)."""
    y = as_mat(y)
    x = as_mat(x)
    if y.shape[0] != y.shape[1]:
        raise ValueError(f"congruence() needs a square Y, got {y.shape}")
    if y.shape[0] != x.shape[0]:
        raise ValueError(f"dimension mismatch: Y is {y.shape}, X is {x.shape}")
    out = x.T @ y @ x
    return 0.5 * (out + out.T)


def svec_dim(m: int) -> int:
    return m * (m + 1) // 2


_SQRT2 = np.sqrt(2.0)


def _triu(m: int):
    return np.triu_indices(m)


def svec(s) -> np.ndarray:
    """Scaled upper-triangle vectorisation (row-major, off-diagonals times sqrt 2).

    ``svec(A) @ svec(B) == trace(A @ B)`` for symmetric ``A``, ``B``.
    """
    s = as_mat(s)
    m = s.shape[0]
    if s.shape != (m, m):
        raise ValueError(f"svec() needs a square matrix, got {s.shape}")
    iu, ju = _triu(m)
    v = 0.5 * (s[iu, ju] + s[ju, iu])
    v[iu != ju] *= _SQRT2
    return v


def smat(v) -> np.ndarray:
    """Inverse of :func:`svec`."""
    v = np.asarray(v, dtype=float).ravel()
    k = v.size
    m = int(round((np.sqrt(8 * k + 1) - 1) / 2))
    if svec_dim(m) != k:
        raise ValueError(f"length {k} is not a triangular number")
    iu, ju = _triu(m)
    vals = v.copy()
    vals[iu != ju] /= _SQRT2
    out = np.zeros((m, m))
    out[iu, ju] = vals
    out[ju, iu] = vals
    return out


def min_eig(s) -> float:
    """Smallest eigenvalue of the symmetric part of ``s`` (``inf`` for 0 x 0)."""
    s = as_mat(s)
    if not np.all(np.isfinite(s)):
        raise ValueError("min_eig() got non-finite entries")
    if s.size == 0:
        return float("inf")
    return float(np.linalg.eigvalsh(0.5 * (s + s.T))[0])


def signature(s, tol: float | None = None) -> tuple[int, int, int]:
    """Counts of (positive, negative, zero) eigenvalues.

    ``tol`` defaults to ``1e-9 * max|s_ij|``.
    """
    s = as_mat(s)
    if s.size == 0:
        return (0, 0, 0)
    ev = np.linalg.eigvalsh(0.5 * (s + s.T))
    if tol is None:
        tol = 1e-9 * float(np.max(np.abs(s)))
    return (int(np.sum(ev > tol)), int(np.sum(ev < -tol)), int(np.sum(np.abs(ev) <= tol)))


def sym_sqrt(s, inverse: bool = False, cutoff: float = 0.0) -> np.ndarray:
    """Symmetric square root (or inverse square root) via ``eigh``.

    Eigenvalues at or below ``cutoff`` are treated as zero; for the inverse
    they are dropped (pseudo-inverse square root).
    """
    s = as_mat(s)
    if s.size == 0:
        return np.zeros_like(s)
    w, v = np.linalg.eigh(0.5 * (s + s.T))
    keep = w > cutoff
    root = np.zeros_like(w)
    if inverse:
        root[keep] = 1.0 / np.sqrt(w[keep])
    else:
        root[keep] = np.sqrt(w[keep])
    return (v * root) @ v.T


def hcat(parts: Iterable, rows: int) -> np.ndarray:
    """Horizontal concatenation; every part is coerced to ``rows`` rows."""
    mats = []
    for p in parts:
        a = np.asarray(p, dtype=float)
        if a.size == 0:
            a = np.zeros((rows, a.shape[1] if a.ndim == 2 else 0))
        mats.append(as_mat(a, rows=rows))
    return np.hstack(mats) if mats else np.zeros((rows, 0))
