"""Controllability Gramian blocks, transport factors and the input-to-state map.

With C_p = S(b - t_p) and C_{i-1} = C_i (I + B_i) S(t_i - t_{i-1}):

* free map          F   = C_0
* distributed left  L_i = C_i (I + B_i),  i = 1..p  (L_{p+1} = I on the tail)
* impulse left      K_k = C_k D_k,        k = 1..p

and with G_i = int_{t_{i-1}}^{t_i} S(t_i - s) Omega Omega^T S^T(t_i - s) ds the
blocks are

    Gamma       = G_{p+1}
    GammaTilde  = K_p K_p^T
    Theta       = sum_{i<=p} L_i G_i L_i^T
    ThetaTilde  = sum_{k<p} K_k K_k^T

Theta uses S^T(t_i - s) inside the interval integral; indexing it by the
impulse time instead would not give a PSD block.  See docs/errata.md.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange, NodeMismatch, UnsupportedBackend
from .quadrature import QuadratureRule, TimeGrid
from .semigroup import SpectralSemigroup
from .system import ControlLaw, ImpulsiveSystem, interval_integral


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class GramianBundle:
    gamma: np.ndarray
    gamma_tilde: np.ndarray
    theta: np.ndarray
    theta_tilde: np.ndarray
    total: np.ndarray
    left_factors: tuple[np.ndarray, ...]
    impulse_factors: tuple[np.ndarray, ...]
    free_map: np.ndarray
    interval_blocks: tuple[np.ndarray, ...]
    grid: TimeGrid | None = None

    @property
    def blocks(self) -> dict[str, np.ndarray]:
        return {
            "gamma": self.gamma,
            "gamma_tilde": self.gamma_tilde,
            "theta": self.theta,
            "theta_tilde": self.theta_tilde,
        }

    def left_factor(self, i: int) -> np.ndarray:
        """L_i for 1 <= i <= p+1 (identity on the tail interval)."""
        p = len(self.left_factors)
        if not 1 <= i <= p + 1:
            raise IndexOutOfRange(f"interval index {i} outside 1..{p + 1}")
        return self.left_factors[i - 1] if i <= p else np.eye(self.total.shape[0])


def _carry_factors(system: ImpulsiveSystem) -> list[np.ndarray]:
    """[C_0, C_1, ..., C_p]."""
    t = system.breakpoints
    p = system.p
    C = [None] * (p + 1)
    C[p] = system.semigroup.operator_matrix(t[p + 1] - t[p])
    for i in range(p, 0, -1):
        C[i - 1] = C[i] @ system.transition(i)
    return C


def free_final_map(system: ImpulsiveSystem) -> np.ndarray:
    """Terminal state map z0 -> z(b) with all controls and mu set to zero.

    An ordered product of jump-and-flow factors, not a sum; see docs/errata.md.
    """
    return _carry_factors(system)[0]


def distributed_left_factor(system: ImpulsiveSystem, i: int) -> np.ndarray:
    p = system.p
    if not 1 <= i <= p + 1:
        raise IndexOutOfRange(f"interval index {i} outside 1..{p + 1}")
    if i == p + 1:
        return np.eye(system.n)
    return _carry_factors(system)[i] @ system.jump_factor(i)


def impulse_left_factor(system: ImpulsiveSystem, k: int) -> np.ndarray:
    if not 1 <= k <= system.p:
        raise IndexOutOfRange(f"impulse index {k} outside 1..{system.p}")
    return _carry_factors(system)[k] @ system.impulse_maps[k - 1]


def _bundle(system: ImpulsiveSystem, G: list[np.ndarray], grid: TimeGrid | None) -> GramianBundle:
    n, p = system.n, system.p
    C = _carry_factors(system)
    L = tuple(C[i] @ system.jump_factor(i) for i in range(1, p + 1))
    K = tuple(C[k] @ system.impulse_maps[k - 1] for k in range(1, p + 1))
    zero = np.zeros((n, n))
    gamma = _sym(G[p])
    theta = _sym(sum((L[i] @ G[i] @ L[i].T for i in range(p)), zero))
    gamma_tilde = _sym(K[p - 1] @ K[p - 1].T) if p else zero.copy()
    theta_tilde = _sym(sum((K[k] @ K[k].T for k in range(p - 1)), zero))
    total = gamma + gamma_tilde + theta + theta_tilde
    return GramianBundle(gamma, gamma_tilde, theta, theta_tilde, total, L, K, C[0], tuple(G), grid)


def assemble(system: ImpulsiveSystem, quad: QuadratureRule) -> GramianBundle:
    """Gramian blocks with interval integrals evaluated on the shared grid."""
    grid = system.grid(quad)
    Q = system.control_map @ system.control_map.T
    G = []
    for iv in grid.intervals:
        G.append(_sym(system.semigroup.weighted_gramian(iv.end - iv.nodes, iv.weights, Q)))
    return _bundle(system, G, grid)


def _exp_integral(rate_sum: np.ndarray, length: float) -> np.ndarray:
    """int_0^length exp(-c s) ds elementwise, with the c = 0 limit equal to length."""
    x = rate_sum * length
    out = np.full_like(x, length)
    nz = x != 0.0
    out[nz] = -np.expm1(-x[nz]) / rate_sum[nz]
    return out


def closed_form_bundle(system: ImpulsiveSystem) -> GramianBundle:
    """Exact Gramian blocks for a spectral (diagonal) semigroup, no quadrature."""
    S = system.semigroup
    if not isinstance(S, SpectralSemigroup):
        raise UnsupportedBackend("closed-form Gramians need a spectral semigroup")
    lam = S.decay_rates
    rate_sum = lam[:, None] + lam[None, :]
    Q = system.control_map @ system.control_map.T
    t = system.breakpoints
    G = [_sym(_exp_integral(rate_sum, t[i] - t[i - 1]) * Q) for i in range(1, t.shape[0])]
    return _bundle(system, G, None)


def _require_grid(bundle: GramianBundle, system: ImpulsiveSystem, quad: QuadratureRule) -> TimeGrid:
    grid = system.grid(quad)
    if bundle.grid is not None and not bundle.grid.same_as(grid):
        raise NodeMismatch("bundle was assembled on a different quadrature grid")
    return grid


def apply_M(system: ImpulsiveSystem, u_samples, v_list, quad: QuadratureRule, bundle: GramianBundle | None = None) -> np.ndarray:
    """Terminal state produced by (u, v) from z0 = 0 with mu = 0."""
    bundle = bundle or assemble(system, quad)
    grid = _require_grid(bundle, system, quad)
    u = np.asarray(u_samples, dtype=float)
    if u.shape != (grid.size, system.m):
        raise DimensionMismatch(f"u_samples has shape {u.shape}, expected {(grid.size, system.m)}")
    if len(v_list) != system.p:
        raise DimensionMismatch(f"{len(v_list)} impulse controls for {system.p} impulses")
    forcing = u @ system.control_map.T
    z = np.zeros(system.n)
    for i in range(1, system.p + 2):
        z = z + bundle.left_factor(i) @ interval_integral(system, grid, i, forcing)
    for K, v in zip(bundle.impulse_factors, v_list):
        z = z + K @ np.asarray(v, dtype=float)
    return z


def apply_M_star(system: ImpulsiveSystem, phi, quad: QuadratureRule, bundle: GramianBundle | None = None):
    """Adjoint of ``apply_M`` for the quadrature-weighted inner product.

    Returns ``(u_samples, v_list)`` with u(s) = Omega^T S^T(t_i - s) L_i^T phi on
    interval i and v_k = K_k^T phi.  L_i^T carries the (I + B_j)^T factors and
    K_k^T the product over j = k+1..p; see docs/errata.md.
    """
    bundle = bundle or assemble(system, quad)
    grid = _require_grid(bundle, system, quad)
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (system.n,):
        raise DimensionMismatch(f"phi has shape {phi.shape}, expected ({system.n},)")
    u = np.empty((grid.size, system.m))
    for i, iv in enumerate(grid.intervals, start=1):
        carried = bundle.left_factor(i).T @ phi
        rows = np.broadcast_to(carried, (iv.size, system.n))
        u[grid.slice(i)] = system.semigroup.apply_many(iv.end - iv.nodes, rows, adjoint=True) @ system.control_map
    v = [K.T @ phi for K in bundle.impulse_factors]
    return u, v


def adjoint_control_rule(system: ImpulsiveSystem, bundle: GramianBundle, phi):
    """u(s) = Omega^T S^T(t_i - s) L_i^T phi evaluated at arbitrary times s."""
    t = system.breakpoints
    carried = [bundle.left_factor(i).T @ phi for i in range(1, system.p + 2)]

    def rule(s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        idx = np.clip(np.searchsorted(t, s, side="left"), 1, system.p + 1)
        rows = np.array([carried[i - 1] for i in idx])
        return system.semigroup.apply_many(t[idx] - s, rows, adjoint=True) @ system.control_map

    return rule


def control_law_from_phi(system: ImpulsiveSystem, bundle: GramianBundle, phi, quad: QuadratureRule) -> ControlLaw:
    u, v = apply_M_star(system, phi, quad, bundle)
    return ControlLaw(u, tuple(v), adjoint_control_rule(system, bundle, phi))


def materialize_MMstar(system: ImpulsiveSystem, quad: QuadratureRule, bundle: GramianBundle | None = None) -> np.ndarray:
    """Matrix of M M^* built column by column from the two maps."""
    bundle = bundle or assemble(system, quad)
    cols = []
    for j in range(system.n):
        e = np.zeros(system.n)
        e[j] = 1.0
        u, v = apply_M_star(system, e, quad, bundle)
        cols.append(apply_M(system, u, v, quad, bundle))
    return np.column_stack(cols)
