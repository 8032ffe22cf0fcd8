"""Finite-approximate control synthesis for impulsive evolution systems.

Build a system (:mod:`.system`, :mod:`.heat`), assemble its controllability
Gramian (:mod:`.gramian`), solve the regularized resolvent
(:mod:`.resolvent`), synthesize controls (:mod:`.synthesis`) and iterate the
semilinear fixed-point map (:mod:`.semilinear`).
"""
from .errors import *  # noqa: F401,F403
from .gramian import GramianBundle, apply_M, apply_M_star, assemble, closed_form_bundle, materialize_MMstar
from .heat import HeatConfig, SweepRow, alpha_sweep, build_heat, build_subspace, build_target, heat_quadrature, sweep_csv
from .linalg import ProjectionSubspace, orthonormalize, project
from .quadrature import QuadratureRule, TimeGrid
from .resolvent import contraction_norm, delta, solve_direct, solve_factorized
from .semigroup import DenseSemigroup, SpectralSemigroup
from .semilinear import PicardConfig, constants_report, fixed_point_map, l2_growth_check, picard_solve
from .synthesis import SynthesisResult, cost_and_gradient, sigma_linear, synthesize, verify_residual
from .system import (
    ControlLaw,
    ImpulseSchedule,
    ImpulsiveSystem,
    Nonlinearity,
    Trajectory,
    linear_nonlinearity,
    pc_norm,
    propagate,
    right_limit_unrolled,
    saturating_nonlinearity,
    zero_nonlinearity,
)

__version__ = "0.1.0"
