"""Truncated 1-D heat equation with annihilating impulses, and alpha sweeps.

State coordinates are coefficients on the sine eigenbasis.  Input mode 2
drives both e_1 and e_2 (Omega u = 2 u_2 e_1 + sum_{n>=2} u_n e_n), higher
input modes drive their own eigenmode, and every impulse resets the state:
B_k = D_k = -I, so z(t_k^+) = -v_k.
"""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import IndexOutOfRange, NoConvergence, SingularOperator
from .gramian import GramianBundle, assemble
from .linalg import ProjectionSubspace, project, smallest_eigenvalue_sym
from .quadrature import QuadratureRule
from .resolvent import delta as subspace_delta
from .semigroup import SpectralSemigroup
from .semilinear import PicardConfig, picard_solve
from .system import ImpulseSchedule, ImpulsiveSystem, Nonlinearity, propagate, zero_nonlinearity
from .synthesis import synthesize

CONVENTIONS = ("dirichlet", "paper_literal")
CSV_COLUMNS = (
    "alpha",
    "residual_norm",
    "projected_residual_norm",
    "predicted_residual_norm",
    "picard_iterations",
    "delta",
    "total_min_eig",
    "status",
)


@dataclass(frozen=True)
class HeatConfig:
    modes: int = 32
    impulse_times: tuple[float, ...] = (1.0 / 3.0, 2.0 / 3.0)
    horizon: float = 1.0
    eigen_convention: str = "dirichlet"
    z0: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.modes < 2:
            raise ValueError("the heat testbed needs at least 2 modes")
        if self.eigen_convention not in CONVENTIONS:
            raise ValueError(f"eigen_convention must be one of {CONVENTIONS}")

    @property
    def control_modes(self) -> int:
        return self.modes - 1


def eigenvalues(modes: int, convention: str = "dirichlet") -> np.ndarray:
    # "paper_literal" keeps n^2, which is not the Dirichlet spectrum on (0, 1); see docs/errata.md
    n = np.arange(1, modes + 1, dtype=float)
    return n ** 2 * math.pi ** 2 if convention == "dirichlet" else n ** 2


def heat_control_map(modes: int) -> np.ndarray:
    """Columns indexed by input modes 2..N."""
    omega = np.zeros((modes, modes - 1))
    omega[0, 0] = 2.0
    for col in range(modes - 1):
        omega[col + 1, col] = 1.0
    return omega


def build_heat(cfg: HeatConfig) -> ImpulsiveSystem:
    N = cfg.modes
    schedule = ImpulseSchedule(cfg.impulse_times, cfg.horizon)
    p = schedule.p
    z0 = np.zeros(N) if cfg.z0 is None else np.asarray(cfg.z0, dtype=float)
    return ImpulsiveSystem(
        SpectralSemigroup(eigenvalues(N, cfg.eigen_convention)),
        heat_control_map(N),
        tuple(-np.eye(N) for _ in range(p)),
        tuple(-np.eye(N) for _ in range(p)),
        z0,
        schedule,
    )


def build_target(kind: str, N: int, n: int = 1, decay: float = 2.0, seed: int = 0) -> np.ndarray:
    """Unit eigenmode ``n`` (1-based) or a seeded smooth random coefficient vector."""
    if kind == "eigenmode":
        if not 1 <= n <= N:
            raise IndexOutOfRange(f"eigenmode {n} outside 1..{N}")
        e = np.zeros(N)
        e[n - 1] = 1.0
        return e
    if kind == "smooth_random":
        if not decay > 0.5:
            raise ValueError("smooth_random needs decay > 1/2 for a square-summable profile")
        rng = np.random.Generator(np.random.Philox(seed))
        c = rng.standard_normal(N) * np.arange(1, N + 1, dtype=float) ** (-decay)
        return c / np.linalg.norm(c)
    raise ValueError(f"unknown target kind {kind!r}")


def build_subspace(d: int, N: int) -> ProjectionSubspace:
    """Span of the first d eigenmodes."""
    if not 0 <= d <= N:
        raise IndexOutOfRange(f"subspace dimension {d} outside 0..{N}")
    return ProjectionSubspace(np.eye(N)[:, :d])


def heat_quadrature(cfg: HeatConfig, order: int = 20) -> QuadratureRule:
    """Graded rule resolving the fastest mode exp(-2 lambda_N (t_i - s)).

    Panels shrink by 2 toward each interval's right end until the last panel
    is short against 1 / (2 lambda_N).
    """
    lam_max = float(eigenvalues(cfg.modes, cfg.eigen_convention)[-1])
    pts = (0.0,) + tuple(cfg.impulse_times) + (cfg.horizon,)
    longest = max(b - a for a, b in zip(pts[:-1], pts[1:]))
    panels = 1
    while 2.0 * lam_max * longest * 2.0 ** -(panels) > 4.0 and panels < 60:
        panels += 1
    return QuadratureRule(order, panels, 2.0 if panels > 1 else 1.0)


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    residual_norm: float = float("nan")
    projected_residual_norm: float = float("nan")
    predicted_residual_norm: float = float("nan")
    picard_iterations: int = 0
    delta: float = float("nan")
    total_min_eig: float = float("nan")
    status: str = "ok"
    history: tuple[float, ...] = field(default=(), compare=False)

    def csv_fields(self) -> list[str]:
        def fmt(x: float) -> str:
            return "nan" if not np.isfinite(x) else repr(float(x))

        return [
            fmt(self.alpha),
            fmt(self.residual_norm),
            fmt(self.projected_residual_norm),
            fmt(self.predicted_residual_norm),
            str(self.picard_iterations),
            fmt(self.delta),
            fmt(self.total_min_eig),
            self.status,
        ]


def worker_count(default: int = 1) -> int:
    raw = os.environ.get("IMPULSE_FAC_THREADS")
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        return default


def _sweep_row(system, bundle, P, h, alpha, mu, quad, cfg, min_eig, dlt) -> SweepRow:
    base = dict(alpha=float(alpha), delta=dlt, total_min_eig=min_eig)
    try:
        if mu.is_zero:
            result = synthesize(system, bundle, P, alpha, h, quad)
            traj = propagate(system, result.control, quad)
            iterations, status, history = 0, "ok", ()
        else:
            outcome = picard_solve(system, bundle, P, alpha, h, mu, quad, cfg)
            traj, result = outcome.trajectory, outcome.result
            iterations, status, history = outcome.iterations, "ok", tuple(outcome.history)
    except SingularOperator:
        return SweepRow(status="singular", **base)
    except NoConvergence as exc:
        row = dict(base, picard_iterations=exc.max_iter, status="no_convergence", history=tuple(exc.history))
        if exc.trajectory is not None:
            miss = exc.trajectory.final - h
            row.update(residual_norm=float(np.linalg.norm(miss)), projected_residual_norm=float(np.linalg.norm(project(P, miss))))
        return SweepRow(**row)
    miss = traj.final - h
    return SweepRow(
        residual_norm=float(np.linalg.norm(miss)),
        projected_residual_norm=float(np.linalg.norm(project(P, miss))),
        predicted_residual_norm=float(np.linalg.norm(result.predicted_residual)),
        picard_iterations=iterations,
        status=status,
        history=history,
        **base,
    )


def alpha_sweep(
    system: ImpulsiveSystem,
    P: ProjectionSubspace,
    h,
    alphas,
    mu: Nonlinearity | None = None,
    quad: QuadratureRule = QuadratureRule(),
    cfg: PicardConfig = PicardConfig(),
    bundle: GramianBundle | None = None,
    workers: int | None = None,
) -> list[SweepRow]:
    """One row per alpha, in descending alpha order; failures become row statuses."""
    mu = mu or zero_nonlinearity()
    h = np.asarray(h, dtype=float)
    alphas = sorted((float(a) for a in alphas), reverse=True)
    if not alphas or alphas[-1] <= 0:
        raise ValueError("alphas must be a non-empty list of positive reals")
    bundle = bundle or assemble(system, quad)
    min_eig = smallest_eigenvalue_sym(bundle.total)
    dlt = subspace_delta(bundle.total, P) if P.dim else float("nan")
    workers = workers or worker_count()

    def run(a):
        return _sweep_row(system, bundle, P, h, a, mu, quad, cfg, min_eig, dlt)

    if workers > 1 and len(alphas) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, alphas))
    return [run(a) for a in alphas]


def sweep_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.csv_fields())
    return buf.getvalue()
