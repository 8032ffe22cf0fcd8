"""Evolution operators S(t) for the two supported backends.

``SpectralSemigroup`` is diagonal in the state coordinates,
S(t) = diag(exp(-lambda_n t)), and therefore self-adjoint.
``DenseSemigroup`` is exp(t G) for an arbitrary square generator G.

Both expose batched helpers (``apply_many``, ``weighted_gramian``) because
Gramian assembly and trajectory propagation evaluate S at every quadrature
node; the spectral path never materialises an N x N matrix per node.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import DimensionMismatch, NegativeTime

# quadrature nodes can land a hair below zero after subtraction
TIME_CLAMP = 1e-12


def _check_time(t: float) -> float:
    t = float(t)
    if t < 0.0:
        if t >= -TIME_CLAMP:
            return 0.0
        raise NegativeTime(f"semigroup evaluated at negative time {t!r}")
    return t


def _check_times(ts) -> np.ndarray:
    ts = np.asarray(ts, dtype=float)
    if np.any(ts < -TIME_CLAMP):
        raise NegativeTime(f"semigroup evaluated at negative time {ts.min()!r}")
    return np.maximum(ts, 0.0)


class Semigroup:
    n: int

    def apply(self, t: float, v) -> np.ndarray:
        raise NotImplementedError

    def apply_adjoint(self, t: float, v) -> np.ndarray:
        raise NotImplementedError

    def operator_matrix(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def apply_many(self, ts, V, adjoint: bool = False) -> np.ndarray:
        """Row k of the result is S(ts[k]) V[k] (or S*(ts[k]) V[k])."""
        raise NotImplementedError

    def weighted_gramian(self, ts, weights, Q) -> np.ndarray:
        """Sum over k of weights[k] * S(ts[k]) Q S*(ts[k])."""
        raise NotImplementedError

    def _check_vector(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.n:
            raise DimensionMismatch(f"vector of length {v.shape[0]} for a semigroup of dimension {self.n}")
        return v


@dataclass(frozen=True)
class SpectralSemigroup(Semigroup):
    decay_rates: np.ndarray

    def __post_init__(self):
        rates = np.asarray(self.decay_rates, dtype=float).reshape(-1)
        if rates.size < 1 or not np.all(np.isfinite(rates)):
            raise ValueError("decay_rates must be a non-empty list of finite reals")
        object.__setattr__(self, "decay_rates", rates)

    @property
    def n(self) -> int:
        return self.decay_rates.shape[0]

    def multipliers(self, t: float) -> np.ndarray:
        return np.exp(-self.decay_rates * _check_time(t))

    def apply(self, t, v):
        return self.multipliers(t) * self._check_vector(v)

    def apply_adjoint(self, t, v):
        return self.apply(t, v)

    def operator_matrix(self, t):
        return np.diag(self.multipliers(t))

    def apply_many(self, ts, V, adjoint=False):
        ts = _check_times(ts)
        return np.exp(-np.outer(ts, self.decay_rates)) * V

    def weighted_gramian(self, ts, weights, Q):
        ts = _check_times(ts)
        E = np.exp(-np.outer(ts, self.decay_rates))
        return (E.T @ (np.asarray(weights)[:, None] * E)) * Q


@dataclass(frozen=True)
class DenseSemigroup(Semigroup):
    generator: np.ndarray
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        g = np.asarray(self.generator, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 1:
            raise DimensionMismatch(f"generator must be square, got shape {g.shape}")
        if not np.all(np.isfinite(g)):
            raise ValueError("generator has non-finite entries")
        object.__setattr__(self, "generator", g)

    @property
    def n(self) -> int:
        return self.generator.shape[0]

    def operator_matrix(self, t):
        t = _check_time(t)
        mat = self._cache.get(t)
        if mat is None:
            mat = np.eye(self.n) if t == 0.0 else expm(t * self.generator)
            if len(self._cache) < 16384:
                self._cache[t] = mat
        return mat

    def apply(self, t, v):
        return self.operator_matrix(t) @ self._check_vector(v)

    def apply_adjoint(self, t, v):
        return self.operator_matrix(t).T @ self._check_vector(v)

    def _stack(self, ts) -> np.ndarray:
        ts = _check_times(ts)
        return np.stack([self.operator_matrix(t) for t in ts]) if ts.size else np.zeros((0, self.n, self.n))

    def apply_many(self, ts, V, adjoint=False):
        mats = self._stack(ts)
        if adjoint:
            return np.einsum("kji,kj->ki", mats, V)
        return np.einsum("kij,kj->ki", mats, V)

    def weighted_gramian(self, ts, weights, Q):
        mats = self._stack(ts)
        return np.einsum("k,kij,jl,kml->im", np.asarray(weights), mats, Q, mats, optimize=True)


def max_operator_norm(S: Semigroup, ts) -> float:
    """max over ``ts`` of the operator 2-norm of S(t)."""
    ts = _check_times(ts)
    if isinstance(S, SpectralSemigroup):
        return float(np.max(np.exp(-np.outer(ts, S.decay_rates)))) if ts.size else 0.0
    return max(float(np.linalg.norm(S.operator_matrix(t), 2)) for t in ts)
