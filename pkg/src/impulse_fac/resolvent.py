"""The regularized inverse (alpha (I - pi_D) + W)^{-1} for a PSD Gramian W.

``solve_direct`` factors the combined operator once.  ``solve_factorized``
uses the product form

    (alpha (I - pi_D) + W)^{-1} = (I - alpha (alpha I + W)^{-1} pi_D)^{-1} (alpha I + W)^{-1}

with the outer inverse reduced to a d x d system in subspace coordinates:
writing T = alpha (alpha I + W)^{-1} and pi_D = V V^T, solving
(I - T V V^T) x = y gives x = y + T V c with (I_d - V^T T V) c = V^T y.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptySubspace, SingularOperator
from .linalg import (
    ProjectionSubspace,
    is_symmetric,
    ldl_factor,
    ldl_solve,
    smallest_eigenvalue_sym,
    solve_sym,
    spectral_norm,
)

DELTA_TOL = 1e-12


@dataclass(frozen=True)
class ResolventContext:
    total: np.ndarray
    subspace: ProjectionSubspace
    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not is_symmetric(self.total):
            raise ValueError("total must be symmetric")
        if self.subspace.n != self.total.shape[0]:
            raise DimensionMismatch("subspace and Gramian dimensions differ")

    def operator(self) -> np.ndarray:
        return self.alpha * self.subspace.complement_matrix() + self.total

    def solve(self, rhs) -> np.ndarray:
        return solve_direct(self.total, self.subspace, self.alpha, rhs)


def delta(total, P: ProjectionSubspace) -> float:
    """Smallest eigenvalue of W compressed to D."""
    if P.dim == 0:
        raise EmptySubspace("delta is undefined on the zero subspace")
    return smallest_eigenvalue_sym(P.basis.T @ np.asarray(total) @ P.basis)


def _check(total, P, alpha, rhs=None):
    total = np.asarray(total, dtype=float)
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if total.shape != (P.n, P.n):
        raise DimensionMismatch(f"Gramian shape {total.shape} vs subspace dimension {P.n}")
    if rhs is not None and np.asarray(rhs).shape[0] != P.n:
        raise DimensionMismatch(f"right-hand side length {np.asarray(rhs).shape[0]}, expected {P.n}")
    return total


def _guard_delta(total, P):
    # zero margin on D means the operator is singular there; never regularize silently
    if P.dim and delta(total, P) <= DELTA_TOL * max(1.0, float(np.max(np.abs(total)))):
        raise SingularOperator("Gramian is not positive on the target subspace (delta ~ 0)")


def solve_direct(total, P: ProjectionSubspace, alpha: float, rhs) -> np.ndarray:
    total = _check(total, P, alpha, rhs)
    _guard_delta(total, P)
    A = alpha * (np.eye(P.n) - P.matrix()) + total
    return solve_sym(0.5 * (A + A.T), np.asarray(rhs, dtype=float))


def solve_factorized(total, P: ProjectionSubspace, alpha: float, rhs) -> np.ndarray:
    total = _check(total, P, alpha, rhs)
    _guard_delta(total, P)
    inner = ldl_factor(alpha * np.eye(P.n) + total)
    y = ldl_solve(inner, np.asarray(rhs, dtype=float))
    if P.dim == 0:
        return y
    TV = alpha * ldl_solve(inner, P.basis)
    small = np.eye(P.dim) - P.basis.T @ TV
    try:
        c = np.linalg.solve(small, P.basis.T @ y)
    except np.linalg.LinAlgError as exc:
        raise SingularOperator("subspace correction system is singular") from exc
    return y + TV @ c


def shifted_projection(total, P: ProjectionSubspace, alpha: float) -> np.ndarray:
    """The matrix alpha (alpha I + W)^{-1} pi_D."""
    total = _check(total, P, alpha)
    if P.dim == 0:
        return np.zeros_like(total)
    return alpha * solve_sym(alpha * np.eye(P.n) + total, P.matrix())


def contraction_norm(total, P: ProjectionSubspace, alpha: float) -> float:
    """Spectral norm of alpha (alpha I + W)^{-1} pi_D."""
    if P.dim == 0:
        return 0.0
    total = _check(total, P, alpha)
    TV = alpha * solve_sym(alpha * np.eye(P.n) + total, P.basis)
    # ||T V V^T|| = ||T V|| for orthonormal V
    return spectral_norm(TV)


def resolvent_norm_bound(total, P: ProjectionSubspace, alpha: float) -> float:
    """1 / min(alpha, delta), the operator-norm bound on the regularized inverse.

    Guaranteed only when the Gramian commutes with pi_D (docs/errata.md).
    """
    if P.dim == 0:
        return 1.0 / alpha
    return 1.0 / min(alpha, delta(total, P))
