"""Per-interval data needed by the LMI assembly."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..basis import (Basis, DerivedBasis, NoClosureError, derived_unit_basis,
                     weighted_poly_basis)
from ..cddsmodel import CddsModel
from ..kernelapprox import (ApproximationResult, KernelDecomposition, custom_gamma,
                            decompose_kernels, least_squares_gamma)
from ..quadrature import Interval

__all__ = ["Channel", "prepare_channel", "prepare_channels"]


@dataclass(frozen=True, eq=False)
class Channel:
    """Basis ``f``, unit-weight family ``phi``, optional weighted family ``g``,
    kernel decomposition and approximation on one delay interval."""

    basis: Basis
    decomposition: KernelDecomposition
    approx: ApproximationResult
    phi: DerivedBasis
    g: DerivedBasis | None

    @property
    def interval(self) -> Interval:
        return self.basis.interval

    def Phi(self) -> np.ndarray:
        """Inverse Gram of ``phi``."""
        G = self.phi.gram()
        return np.linalg.inv(G) if G.size else G

    def Ginv(self) -> np.ndarray | None:
        if self.g is None:
            return None
        G = self.g.gram()
        return np.linalg.inv(G) if G.size else G


def prepare_channel(
    basis: Basis,
    kernels: dict,
    nu: int,
    residuals=(),
    phi_dim: int | None = None,
    g_dim: int | None = None,
    weight_offset: float | None = None,
    gamma: np.ndarray | None = None,
    tol: float = 1e-13,
    check: str = "strict",
) -> Channel:
    """Decompose ``kernels`` over ``basis`` and attach the auxiliary families.

    ``g_dim=None`` picks the largest weighted polynomial family available
    (polynomial bases only); non-polynomial bases get ``g = None``.
    ``check`` is passed to :func:`least_squares_gamma`.
    """
    kd = decompose_kernels(kernels, basis, nu, residuals=list(residuals), tol=tol)
    if gamma is None:
        approx = least_squares_gamma(kd, tol, check=check)
    else:
        approx = custom_gamma(kd, gamma, tol)
    phi = derived_unit_basis(basis, phi_dim)
    g = None
    if weight_offset is not None and basis.is_polynomial and g_dim != 0:
        p = basis.dim if g_dim is None else g_dim
        try:
            g = weighted_poly_basis(p - 1, basis.interval, weight_offset, basis)
        except NoClosureError:
            g = None
    return Channel(basis=basis, decomposition=kd, approx=approx, phi=phi, g=g)


def prepare_channels(mdl: CddsModel, basis1: Basis, basis2: Basis | None = None,
                     tol: float = 1e-13, **kw):
    """Channels for both intervals of ``mdl`` (second is None for single delay)."""
    k1 = {"A4": mdl.kernels["A4"], "C4": mdl.kernels["C4"]}
    ch1 = prepare_channel(basis1, k1, mdl.nu, mdl.residuals1, tol=tol,
                          weight_offset=mdl.r1, **kw)
    if mdl.single_delay:
        return ch1, None
    if basis2 is None:
        raise ValueError("two-delay model needs a second basis")
    k2 = {"A5": mdl.kernels["A5"], "C5": mdl.kernels["C5"]}
    ch2 = prepare_channel(basis2, k2, mdl.nu, mdl.residuals2, tol=tol,
                          weight_offset=mdl.r2, **kw)
    return ch1, ch2
