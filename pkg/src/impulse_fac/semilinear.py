"""Semilinear synthesis: the fixed-point map G_alpha and its Picard iteration.

For a frozen trajectory z, G_alpha(z) is the mild solution driven by the
controls synthesized from sigma_alpha(z) (target minus free evolution minus
the transported mu-integrals), with mu evaluated along z.  A fixed point is
a mild solution of the semilinear system under its own synthesized control.
Both the distributed and the impulse controls are synthesized from
Psi_alpha; without the impulse part the terminal identity does not close
(docs/errata.md).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import NoConvergence, NodeMismatch, UnsupportedGrowthKind
from .gramian import GramianBundle
from .linalg import ProjectionSubspace, project, spectral_norm
from .quadrature import QuadratureRule
from .resolvent import contraction_norm, solve_direct
from .semigroup import max_operator_norm
from .synthesis import SynthesisResult, synthesize_from_sigma
from .system import (
    ControlLaw,
    ImpulsiveSystem,
    Nonlinearity,
    Trajectory,
    interval_integral,
    pc_distance,
    pc_norm,
    propagate,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PicardConfig:
    tol: float = 1e-10
    max_iter: int = 50
    damping: float = 1.0

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")


@dataclass(frozen=True)
class PicardOutcome:
    trajectory: Trajectory
    result: SynthesisResult
    iterations: int
    history: list[float] = field(default_factory=list)


def sigma_semilinear(system: ImpulsiveSystem, bundle: GramianBundle, h, traj: Trajectory, mu: Nonlinearity, quad: QuadratureRule) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    sigma = h - bundle.free_map @ system.z0
    if mu.is_zero:
        return sigma
    grid = system.grid(quad)
    if not traj.grid.same_as(grid):
        raise NodeMismatch("trajectory was sampled on a different grid")
    forcing = mu.evaluate_many(grid.nodes, traj.node_states())
    for i in range(1, system.p + 2):
        sigma = sigma - bundle.left_factor(i) @ interval_integral(system, grid, i, forcing)
    return sigma


def fixed_point_map(
    system: ImpulsiveSystem,
    bundle: GramianBundle,
    P: ProjectionSubspace,
    alpha: float,
    h,
    z: Trajectory,
    mu: Nonlinearity,
    quad: QuadratureRule,
) -> tuple[Trajectory, SynthesisResult]:
    sigma = sigma_semilinear(system, bundle, h, z, mu, quad)
    result = synthesize_from_sigma(system, bundle, P, alpha, h, sigma, quad)
    out = propagate(system, result.control, quad, mu, None if mu.is_zero else z)
    return out, result


def free_evolution(system: ImpulsiveSystem, quad: QuadratureRule) -> Trajectory:
    """Zero controls and mu switched off; the starting iterate."""
    return propagate(system, ControlLaw.zero(system, system.grid(quad)), quad)


def picard_solve(
    system: ImpulsiveSystem,
    bundle: GramianBundle,
    P: ProjectionSubspace,
    alpha: float,
    h,
    mu: Nonlinearity,
    quad: QuadratureRule,
    cfg: PicardConfig = PicardConfig(),
) -> PicardOutcome:
    """Iterate z <- theta G(z) + (1 - theta) z until successive PC distance < tol.

    The returned trajectory is the last undamped image G(z_n), so the
    terminal projection identity holds exactly for it.  Raises NoConvergence
    (carrying the history and last image) after ``max_iter`` applications.
    """
    z = free_evolution(system, quad)
    if mu.is_zero:
        out, result = fixed_point_map(system, bundle, P, alpha, h, z, mu, quad)
        return PicardOutcome(out, result, 1, [0.0])
    history: list[float] = []
    out = result = None
    for it in range(1, int(cfg.max_iter) + 1):
        out, result = fixed_point_map(system, bundle, P, alpha, h, z, mu, quad)
        step = pc_distance(out, z)
        history.append(step)
        log.debug("picard alpha=%g iter=%d delta=%.3e", alpha, it, step)
        if not np.isfinite(step):
            break
        if step < cfg.tol:
            return PicardOutcome(out, result, it, history)
        z = out if cfg.damping == 1.0 else out.combine(z, cfg.damping, 1.0 - cfg.damping)
    raise NoConvergence(int(cfg.max_iter), history[-1] if history else float("nan"), history, out, result)


def terminal_identity_defect(system, bundle, P, alpha, h, traj: Trajectory, mu, quad) -> float:
    """||z(b) - h + alpha (I - pi_D)(alpha (I - pi_D) + W)^{-1} sigma_alpha(z)||."""
    sigma = sigma_semilinear(system, bundle, h, traj, mu, quad)
    phi = solve_direct(bundle.total, P, alpha, sigma)
    return float(np.linalg.norm(traj.final - np.asarray(h, dtype=float) + alpha * (phi - project(P, phi))))


@dataclass(frozen=True)
class ConstantsReport:
    M_S: float
    M_B: float
    M_D: float
    M_Omega: float
    M_tilde: float
    delta: float
    M_1: float
    M_2: float
    M_3: float
    M_4: float
    g_norm: float
    d_coef: float
    f5_lhs: float
    satisfied: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def constants_report(
    system: ImpulsiveSystem,
    bundle: GramianBundle,
    P: ProjectionSubspace,
    alpha: float,
    mu: Nonlinearity,
    quad: QuadratureRule,
    h=None,
    impulse_bound: float = 0.0,
) -> ConstantsReport:
    """Operator-norm constants of the existence argument and the smallness condition.

    Norms are measured on the actual system (M_S over the shared time grid).
    The condition is evaluated with k = p.  For bounded mu the growth rate d
    is zero and the condition holds trivially.
    """
    grid = system.grid(quad)
    t = system.breakpoints
    times = np.unique(np.concatenate([[0.0], grid.nodes, t - t[0], np.diff(t), t[-1] - grid.nodes]))
    M_S = max_operator_norm(system.semigroup, times)
    M_B = max((spectral_norm(B) for B in system.jumps), default=0.0)
    M_D = max((spectral_norm(D) for D in system.impulse_maps), default=0.0)
    M_Om = spectral_norm(system.control_map)
    p, b = system.p, system.horizon
    M_tilde = M_Om * sum(M_S ** k for k in range(1, p + 2))
    dlt = contraction_norm(bundle.total, P, alpha)

    if mu.kind == "zero":
        g_norm, d = 0.0, 0.0
    elif mu.kind == "bounded":
        g_norm, d = mu.bound, 0.0
    else:
        g_norm, d = mu.g_bound, mu.d_coef
    h_norm = 0.0 if h is None else float(np.linalg.norm(h))
    z0_norm = float(np.linalg.norm(system.z0))
    M_V = impulse_bound
    k = p
    scale = 1.0 / (alpha * (1.0 - dlt))

    M_1 = h_norm + p * M_S ** 2 * (1 + M_B) * z0_norm
    M_2 = sum((1 + M_B) ** j * M_S ** (j + 1) for j in range(0, p + 1)) * b * g_norm
    chain = sum((1 + M_B) ** m * M_S ** (m + 1) for m in range(1, k + 1))
    M_3 = (
        (1 + M_B) ** k * M_S ** (k + 1) * z0_norm
        + chain * M_Om * b * M_tilde * M_1 * scale
        + sum((1 + M_B) ** m * M_S ** 2 * M_D * M_V for m in range(1, k))
        + M_S * M_D * M_V
        + M_tilde * M_1 * b * scale
    )
    M_4 = (
        chain * M_Om * b * M_tilde * M_2 * scale
        + M_tilde * M_2 * b * scale
        + chain * b * g_norm
        + M_S * b * g_norm
    )
    f5 = d * M_4
    return ConstantsReport(M_S, M_B, M_D, M_Om, M_tilde, dlt, M_1, M_2, M_3, M_4, g_norm, d, f5, bool(f5 < 1.0))


def l2_growth_check(traj: Trajectory, mu: Nonlinearity, g_bound: float, d_coef: float, interval=None) -> tuple[float, float]:
    """(int ||mu(t, z(t))||^2 dt, d^2 C_g^2 (r2 - r1) r^2) over [r1, r2], r = PC norm of z.

    The bound keeps the r^2 factor of the underlying estimate (docs/errata.md).  [r1, r2]
    must be a union of grid intervals (defaults to the whole horizon).
    """
    if mu.kind != "linear_growth" and not mu.is_zero:
        raise UnsupportedGrowthKind(f"L2 growth check needs linear-growth mu, got {mu.kind!r}")
    grid = traj.grid
    bp = grid.breakpoints
    r1, r2 = (bp[0], bp[-1]) if interval is None else (float(interval[0]), float(interval[1]))
    ends = [np.isclose(bp, r).any() for r in (r1, r2)]
    if not all(ends) or r2 <= r1:
        raise ValueError(f"interval [{r1}, {r2}] is not aligned with the impulse schedule {bp.tolist()}")
    mask = (grid.nodes > r1) & (grid.nodes < r2)
    values = mu.evaluate_many(grid.nodes[mask], traj.node_states()[mask])
    integral = float(np.dot(grid.weights[mask], np.sum(values * values, axis=1)))
    r = pc_norm(traj)
    return integral, d_coef ** 2 * g_bound ** 2 * (r2 - r1) * r ** 2
