"""Quadratic supply rates.

    s(z, w) = z^T (Jt^T J1^{-1} Jt) z + 2 z^T J2 w + w^T J3 w

``J1`` and ``J3`` may depend affinely on a scalar ``gamma``:
``J1(gamma) = J1 + gamma * J1_gamma`` and likewise for ``J3``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SupplyRate", "supply_preset"]


@dataclass(frozen=True, eq=False)
class SupplyRate:
    J1: np.ndarray
    Jtil: np.ndarray
    J2: np.ndarray
    J3: np.ndarray
    J1_gamma: np.ndarray | None = None
    J3_gamma: np.ndarray | None = None
    objective_var: str | None = None
    kind: str = "custom"

    def __post_init__(self):
        m = self.J1.shape[0]
        q = self.J3.shape[0]
        if self.J1.shape != (m, m) or self.Jtil.shape != (m, m):
            raise ValueError("J1 and Jtil must be m x m")
        if self.J2.shape != (m, q) or self.J3.shape != (q, q):
            raise ValueError("J2 must be m x q and J3 q x q")
        for nm in ("J3", "J3_gamma"):
            X = getattr(self, nm)
            if X is not None and not np.allclose(X, X.T, rtol=0, atol=1e-12 * max(1.0, np.abs(X).max(initial=0.0))):
                raise ValueError(f"{nm} must be symmetric")
        self.check()

    @property
    def m(self) -> int:
        return self.J1.shape[0]

    @property
    def q(self) -> int:
        return self.J3.shape[0]

    def at(self, gamma: float | None) -> tuple[np.ndarray, np.ndarray]:
        """``(J1, J3)`` at a given ``gamma`` (constant parts when ``gamma`` is None)."""
        J1, J3 = self.J1, self.J3
        if gamma is not None:
            if self.J1_gamma is not None:
                J1 = J1 + gamma * self.J1_gamma
            if self.J3_gamma is not None:
                J3 = J3 + gamma * self.J3_gamma
        return J1, J3

    def check(self, gamma: float = 1.0) -> None:
        """Require ``J1^{-1} < 0`` and ``Jt^T J1^{-1} Jt <= 0``."""
        if self.m == 0:
            return
        J1, _ = self.at(gamma if self.objective_var else None)
        ev = np.linalg.eigvalsh(0.5 * (J1 + J1.T))
        if not np.all(ev < 0):
            raise ValueError("supply rate needs J1 negative definite")
        Ji = np.linalg.inv(J1)
        W = self.Jtil.T @ Ji @ self.Jtil
        if np.linalg.eigvalsh(0.5 * (W + W.T))[-1] > 1e-12 * max(1.0, np.abs(W).max()):
            raise ValueError("supply rate needs Jt^T J1^{-1} Jt <= 0")

    def matrix(self, gamma: float | None = None) -> np.ndarray:
        """Block form ``[[Jt^T J1^{-1} Jt, J2], [J2^T, J3]]`` of the supply rate."""
        J1, J3 = self.at(gamma)
        W = self.Jtil.T @ np.linalg.inv(J1) @ self.Jtil if self.m else np.zeros((0, 0))
        return np.block([[W, self.J2], [self.J2.T, J3]])


def supply_preset(kind: str, m: int, q: int, gamma: float | None = None,
                  eps: float = 1e-6) -> SupplyRate:
    """Named supply rates.

    ``l2gain``: ``J1 = -gamma I``, ``Jt = I``, ``J2 = 0``, ``J3 = gamma I``;
    with ``gamma=None`` the value is a decision variable to be minimised.
    ``passivity``: ``J1 = -eps I``, ``Jt = 0``, ``J2 = I``, ``J3 = 0`` (needs
    ``m == q``).  ``none``: stability only, ``m`` and ``q`` ignored.
    """
    if kind == "l2gain":
        if gamma is None:
            return SupplyRate(np.zeros((m, m)), np.eye(m), np.zeros((m, q)), np.zeros((q, q)),
                              J1_gamma=-np.eye(m), J3_gamma=np.eye(q), objective_var="gamma",
                              kind=kind)
        if not gamma > 0:
            raise ValueError("gamma must be positive")
        return SupplyRate(-gamma * np.eye(m), np.eye(m), np.zeros((m, q)), gamma * np.eye(q),
                          kind=kind)
    if kind == "passivity":
        if m != q:
            raise ValueError(f"passivity needs m == q (got m={m}, q={q})")
        return SupplyRate(-eps * np.eye(m), np.zeros((m, m)), np.eye(m), np.zeros((q, q)),
                          kind=kind)
    if kind == "none":
        return SupplyRate(np.zeros((0, 0)), np.zeros((0, 0)), np.zeros((0, 0)), np.zeros((0, 0)),
                          kind=kind)
    raise ValueError(f"unknown supply preset {kind!r}")
