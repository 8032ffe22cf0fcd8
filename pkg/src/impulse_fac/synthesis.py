"""Linear finite-approximate control synthesis.

Sign convention: ``phi = (alpha (I - pi_D) + W)^{-1} sigma`` with
``sigma = h - F z0``, i.e. the negative of the minimizer written with the
opposite sign in the derivation.  The controls are (u, v) = M^* phi and the
terminal residual is z(b) - h = -alpha (I - pi_D) phi.  See docs/errata.md.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .gramian import GramianBundle, control_law_from_phi
from .linalg import ProjectionSubspace, project
from .quadrature import QuadratureRule
from .resolvent import solve_direct
from .system import ControlLaw, ImpulsiveSystem, Trajectory, propagate


@dataclass(frozen=True)
class SynthesisResult:
    alpha: float
    phi: np.ndarray
    control: ControlLaw
    sigma: np.ndarray
    predicted_residual: np.ndarray
    target: np.ndarray
    subspace: ProjectionSubspace


def sigma_linear(system: ImpulsiveSystem, bundle: GramianBundle, h) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if h.shape != (system.n,):
        raise DimensionMismatch(f"target has shape {h.shape}, expected ({system.n},)")
    return h - bundle.free_map @ system.z0


def synthesize_from_sigma(system, bundle, P, alpha, h, sigma, quad) -> SynthesisResult:
    phi = solve_direct(bundle.total, P, alpha, sigma)
    control = control_law_from_phi(system, bundle, phi, quad)
    residual = -alpha * (phi - project(P, phi))
    return SynthesisResult(alpha, phi, control, sigma, residual, np.asarray(h, dtype=float), P)


def synthesize(
    system: ImpulsiveSystem,
    bundle: GramianBundle,
    P: ProjectionSubspace,
    alpha: float,
    h,
    quad: QuadratureRule,
) -> SynthesisResult:
    return synthesize_from_sigma(system, bundle, P, alpha, h, sigma_linear(system, bundle, h), quad)


def cost_and_gradient(bundle: GramianBundle, P: ProjectionSubspace, alpha: float, phi, sigma) -> tuple[float, np.ndarray]:
    """J(phi) = 1/2 <W phi, phi> + alpha/2 <(I - pi_D) phi, phi> - <phi, sigma> and its gradient."""
    phi = np.asarray(phi, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    n = bundle.total.shape[0]
    if phi.shape != (n,) or sigma.shape != (n,):
        raise DimensionMismatch(f"phi {phi.shape} / sigma {sigma.shape} do not match dimension {n}")
    W_phi = bundle.total @ phi
    comp = phi - project(P, phi)
    J = 0.5 * phi @ W_phi + 0.5 * alpha * phi @ comp - phi @ sigma
    return float(J), W_phi + alpha * comp - sigma


def verify_residual(
    system: ImpulsiveSystem,
    result: SynthesisResult,
    quad: QuadratureRule,
    trajectory: Trajectory | None = None,
) -> tuple[float, float]:
    """(||z(b) - h - predicted||, ||pi_D (z(b) - h)||) from a simulated run."""
    traj = trajectory or propagate(system, result.control, quad)
    miss = traj.final - result.target
    return (
        float(np.linalg.norm(miss - result.predicted_residual)),
        float(np.linalg.norm(project(result.subspace, miss))),
    )
