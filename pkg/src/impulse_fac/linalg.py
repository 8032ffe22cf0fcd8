"""Dense real linear algebra: projections, symmetric solves, extremal eigenvalues.

Vectors and operators are plain ``numpy`` arrays (1-D and 2-D float64).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionMismatch, EmptySubspace, NotSymmetric, SingularOperator

SYMMETRY_TOL = 1e-12
PIVOT_TOL = 1e-14


def as_vector(v, n: int | None = None, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise DimensionMismatch(f"{name} has length {arr.shape[0]}, expected {n}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def as_matrix(a, shape: tuple[int | None, int | None] = (None, None), name: str = "matrix") -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionMismatch(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    for got, want in zip(arr.shape, shape):
        if want is not None and got != want:
            raise DimensionMismatch(f"{name} has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def maxabs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def is_symmetric(a: np.ndarray, tol: float = SYMMETRY_TOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return maxabs(a - a.T) <= tol * max(maxabs(a), np.finfo(float).tiny)


def _require_symmetric(a) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if not is_symmetric(arr):
        raise NotSymmetric(f"operator of shape {arr.shape} is not symmetric")
    return arr


@dataclass(frozen=True)
class ProjectionSubspace:
    """Orthogonal projection onto ``span(basis)``; ``basis`` is ``n x d``."""

    basis: np.ndarray

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def empty(cls, n: int) -> "ProjectionSubspace":
        return cls(np.zeros((n, 0)))

    @classmethod
    def full(cls, n: int) -> "ProjectionSubspace":
        return cls(np.eye(n))

    def matrix(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def complement_matrix(self) -> np.ndarray:
        return np.eye(self.n) - self.matrix()


def orthonormalize(spanning: Sequence, tol: float = 1e-10, n: int | None = None) -> ProjectionSubspace:
    """Orthonormal basis for the span of ``spanning`` (modified Gram-Schmidt, two passes).

    A vector whose residual after deflation is at most ``tol`` times its own
    norm is treated as dependent and dropped.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    vectors = [np.asarray(v, dtype=float) for v in spanning]
    if not vectors:
        if n is None:
            raise EmptySubspace("empty spanning list needs an explicit dimension n")
        return ProjectionSubspace.empty(n)
    n = vectors[0].shape[0] if n is None else n
    for v in vectors:
        if v.ndim != 1 or v.shape[0] != n:
            raise DimensionMismatch(f"spanning vector of shape {v.shape}, expected ({n},)")

    columns: list[np.ndarray] = []
    for v in vectors:
        scale = np.linalg.norm(v)
        w = v.copy()
        for _ in range(2):
            for q in columns:
                w -= (q @ w) * q
        r = np.linalg.norm(w)
        if scale == 0.0 or r <= tol * scale:
            continue
        columns.append(w / r)
    if not columns:
        raise EmptySubspace("all spanning vectors vanished after deflation")
    return ProjectionSubspace(np.column_stack(columns))


def project(P: ProjectionSubspace, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape[0] != P.n:
        raise DimensionMismatch(f"vector length {v.shape[0]} does not match subspace ambient dimension {P.n}")
    if P.dim == 0:
        return np.zeros_like(v)
    return P.basis @ (P.basis.T @ v)


def smallest_eigenvalue_sym(a) -> float:
    a = _require_symmetric(a)
    return float(np.linalg.eigvalsh(0.5 * (a + a.T))[0])


def ldl_factor(a) -> tuple[np.ndarray, np.ndarray]:
    """Unpivoted ``A = L diag(d) L^T`` with unit lower-triangular ``L``.

    Raises SingularOperator when a pivot drops below ``PIVOT_TOL * maxabs(A)``.
    """
    a = _require_symmetric(a)
    n = a.shape[0]
    threshold = PIVOT_TOL * maxabs(a)
    L = np.eye(n)
    d = np.zeros(n)
    for k in range(n):
        lk = L[k, :k]
        d[k] = a[k, k] - np.dot(lk * d[:k], lk)
        if abs(d[k]) <= threshold:
            raise SingularOperator(f"pivot {d[k]:.3e} at index {k} below threshold {threshold:.3e}")
        if k + 1 < n:
            L[k + 1:, k] = (a[k + 1:, k] - L[k + 1:, :k] @ (d[:k] * lk)) / d[k]
    return L, d


def ldl_solve(factors: tuple[np.ndarray, np.ndarray], b) -> np.ndarray:
    L, d = factors
    b = np.asarray(b, dtype=float)
    if b.shape[0] != L.shape[0]:
        raise DimensionMismatch(f"right-hand side length {b.shape[0]}, expected {L.shape[0]}")
    y = solve_triangular(L, b, lower=True, unit_diagonal=True)
    y = y / (d if y.ndim == 1 else d[:, None])
    return solve_triangular(L.T, y, lower=False, unit_diagonal=True)


def solve_sym(a, b) -> np.ndarray:
    """Solve ``A x = b`` for symmetric nonsingular ``A`` via LDL^T."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or b.shape[0] != a.shape[0]:
        raise DimensionMismatch(f"operator {a.shape} incompatible with right-hand side {b.shape}")
    return ldl_solve(ldl_factor(a), b)


def spectral_norm(a) -> float:
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))
