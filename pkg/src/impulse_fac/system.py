"""Impulsive evolution systems and their mild solutions.

A system is the semigroup S, the control map Omega, jump maps B_k, impulse
maps D_k, an initial state and the impulse schedule.  Between impulses the
state follows the Duhamel formula; at t_k it jumps to
(I + B_k) z(t_k) + D_k v_k, with z(t_k) the left limit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyTrajectory,
    IndexOutOfRange,
    MissingFrozenTrajectory,
    NodeMismatch,
)
from .linalg import as_matrix, as_vector
from .quadrature import QuadratureRule, TimeGrid
from .semigroup import Semigroup


@dataclass(frozen=True)
class ImpulseSchedule:
    impulse_times: tuple[float, ...]
    horizon: float

    def __post_init__(self):
        times = tuple(float(t) for t in self.impulse_times)
        object.__setattr__(self, "impulse_times", times)
        object.__setattr__(self, "horizon", float(self.horizon))
        pts = (0.0,) + times + (self.horizon,)
        for k in range(1, len(pts)):
            if not pts[k] > pts[k - 1]:
                where = f"impulse_times[{min(k, len(times)) - 1}]" if times else "horizon"
                raise ValueError(f"{where}: need 0 < t_1 < ... < t_p < b, got {list(times)} with b={self.horizon}")

    @property
    def p(self) -> int:
        return len(self.impulse_times)

    @property
    def breakpoints(self) -> np.ndarray:
        """t_0 = 0, t_1, ..., t_p, t_{p+1} = b."""
        return np.array((0.0,) + self.impulse_times + (self.horizon,))


@dataclass(frozen=True)
class ImpulsiveSystem:
    semigroup: Semigroup
    control_map: np.ndarray
    jumps: tuple[np.ndarray, ...]
    impulse_maps: tuple[np.ndarray, ...]
    z0: np.ndarray
    schedule: ImpulseSchedule

    def __post_init__(self):
        n = self.semigroup.n
        omega = as_matrix(self.control_map, (n, None), "control_map")
        p = self.schedule.p
        if len(self.jumps) != p or len(self.impulse_maps) != p:
            raise DimensionMismatch(
                f"schedule has {p} impulses but got {len(self.jumps)} jumps and {len(self.impulse_maps)} impulse maps"
            )
        jumps = tuple(as_matrix(B, (n, n), f"jumps[{k}]") for k, B in enumerate(self.jumps))
        impulse_maps = tuple(as_matrix(D, (n, None), f"impulse_maps[{k}]") for k, D in enumerate(self.impulse_maps))
        if len({D.shape[1] for D in impulse_maps}) > 1:
            raise DimensionMismatch("impulse maps must share one impulse-control dimension")
        object.__setattr__(self, "control_map", omega)
        object.__setattr__(self, "jumps", jumps)
        object.__setattr__(self, "impulse_maps", impulse_maps)
        object.__setattr__(self, "z0", as_vector(self.z0, n, "z0"))

    @property
    def n(self) -> int:
        return self.semigroup.n

    @property
    def m(self) -> int:
        return self.control_map.shape[1]

    @property
    def impulse_dim(self) -> int:
        return self.impulse_maps[0].shape[1] if self.impulse_maps else 0

    @property
    def p(self) -> int:
        return self.schedule.p

    @property
    def horizon(self) -> float:
        return self.schedule.horizon

    @property
    def breakpoints(self) -> np.ndarray:
        return self.schedule.breakpoints

    def grid(self, quad: QuadratureRule) -> TimeGrid:
        return TimeGrid(self.breakpoints, quad)

    def with_z0(self, z0) -> "ImpulsiveSystem":
        return ImpulsiveSystem(self.semigroup, self.control_map, self.jumps, self.impulse_maps, z0, self.schedule)

    def jump_factor(self, j: int) -> np.ndarray:
        """I + B_j (1-based j)."""
        return np.eye(self.n) + self.jumps[j - 1]

    def transition(self, j: int) -> np.ndarray:
        """(I + B_j) S(t_j - t_{j-1}) for 1 <= j <= p."""
        t = self.breakpoints
        return self.jump_factor(j) @ self.semigroup.operator_matrix(t[j] - t[j - 1])


@dataclass(frozen=True)
class Nonlinearity:
    """State-dependent forcing mu(t, z).

    ``func`` is vectorised: it maps times of shape (n,) and states of shape
    (n, N) to forcings of shape (n, N).  ``kind`` is one of ``zero``,
    ``bounded`` (with ``bound``) or ``linear_growth`` (with ``d_coef`` and
    ``g_bound``, meaning ||mu(t, z)|| <= g_bound * d_coef * ||z||).
    """

    kind: str
    func: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    bound: float = 0.0
    d_coef: float = 0.0
    g_bound: float = 0.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("zero", "bounded", "linear_growth"):
            raise ValueError(f"unknown growth kind {self.kind!r}")

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    def evaluate_many(self, ts, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        if self.is_zero:
            return np.zeros_like(Z)
        out = np.asarray(self.func(np.asarray(ts, dtype=float), Z), dtype=float)
        if out.shape != Z.shape:
            raise DimensionMismatch(f"nonlinearity returned shape {out.shape}, expected {Z.shape}")
        return out

    def evaluate(self, t: float, z) -> np.ndarray:
        return self.evaluate_many(np.array([t]), np.asarray(z, dtype=float)[None, :])[0]


def zero_nonlinearity() -> Nonlinearity:
    return Nonlinearity("zero")


def saturating_nonlinearity(amplitude: float) -> Nonlinearity:
    """mu(t, z) = amplitude * z / (1 + ||z||^2); bounded by amplitude / 2."""

    def func(ts, Z):
        sq = np.sum(Z * Z, axis=1, keepdims=True)
        return amplitude * Z / (1.0 + sq)

    return Nonlinearity("bounded", func, bound=0.5 * abs(amplitude), params={"amplitude": amplitude})


def linear_nonlinearity(d_coef: float, g_bound: float = 1.0) -> Nonlinearity:
    """mu(t, z) = g_bound * d_coef * z, the extreme case of linear growth."""

    def func(ts, Z):
        return g_bound * d_coef * Z

    return Nonlinearity("linear_growth", func, d_coef=d_coef, g_bound=g_bound, params={"d": d_coef, "g_bound": g_bound})


@dataclass(frozen=True)
class ControlLaw:
    """Distributed control tabulated on the grid nodes plus impulse controls.

    ``rule`` optionally holds a callable u(s) for arbitrary times (the
    synthesized law); propagation only ever reads ``distributed``.
    """

    distributed: np.ndarray
    impulses: tuple[np.ndarray, ...]
    rule: Callable[[np.ndarray], np.ndarray] | None = None

    def check(self, system: ImpulsiveSystem, grid: TimeGrid) -> None:
        if self.distributed.shape != (grid.size, system.m):
            raise NodeMismatch(
                f"distributed control has shape {self.distributed.shape}, grid needs {(grid.size, system.m)}"
            )
        if len(self.impulses) != system.p:
            raise DimensionMismatch(f"{len(self.impulses)} impulse controls for {system.p} impulses")
        for k, v in enumerate(self.impulses):
            if v.shape != (system.impulse_dim,):
                raise DimensionMismatch(f"impulse control {k} has shape {v.shape}, expected ({system.impulse_dim},)")

    @classmethod
    def zero(cls, system: ImpulsiveSystem, grid: TimeGrid) -> "ControlLaw":
        return cls(np.zeros((grid.size, system.m)), tuple(np.zeros(system.impulse_dim) for _ in range(system.p)))

    @classmethod
    def from_function(cls, system: ImpulsiveSystem, grid: TimeGrid, u: Callable, impulses: Sequence = ()) -> "ControlLaw":
        values = np.array([np.broadcast_to(np.asarray(u(s), dtype=float), (system.m,)) for s in grid.nodes])
        imp = tuple(np.asarray(v, dtype=float) for v in impulses) if len(impulses) else tuple(
            np.zeros(system.impulse_dim) for _ in range(system.p)
        )
        return cls(values.reshape(grid.size, system.m), imp)


@dataclass(frozen=True)
class Trajectory:
    """Samples on interval i (1-based) at [t_{i-1}, nodes..., t_i].

    The first sample of interval i > 1 is the right limit z(t_{i-1}^+), the
    last sample is the left limit z(t_i).  ``right_limits[k-1]`` is z(t_k^+).
    """

    grid: TimeGrid
    times: tuple[np.ndarray, ...]
    states: tuple[np.ndarray, ...]
    right_limits: tuple[np.ndarray, ...]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1][-1]

    def left_limit(self, k: int) -> np.ndarray:
        return self.states[k - 1][-1]

    def node_states(self) -> np.ndarray:
        """States at the grid nodes, flat in grid order."""
        return np.concatenate([s[1:-1] for s in self.states])

    def all_states(self) -> np.ndarray:
        return np.concatenate(list(self.states) + ([np.array(self.right_limits)] if self.right_limits else []))

    def combine(self, other: "Trajectory", a: float, b: float) -> "Trajectory":
        """a * self + b * other on the shared sample grid."""
        return Trajectory(
            self.grid,
            self.times,
            tuple(a * x + b * y for x, y in zip(self.states, other.states)),
            tuple(a * x + b * y for x, y in zip(self.right_limits, other.right_limits)),
        )


def pc_norm(traj: Trajectory) -> float:
    """Sup of the state norm over all stored samples and right limits."""
    if not traj.states or all(s.size == 0 for s in traj.states):
        raise EmptyTrajectory("trajectory has no samples")
    return float(np.max(np.linalg.norm(traj.all_states(), axis=1)))


def pc_distance(a: Trajectory, b: Trajectory) -> float:
    return pc_norm(a.combine(b, 1.0, -1.0))


def _forcing(system, grid, control, mu, mu_source) -> np.ndarray:
    """Omega u(s) + mu(s, z_frozen(s)) at every grid node."""
    g = control.distributed @ system.control_map.T
    if not mu.is_zero:
        if mu_source is None:
            raise MissingFrozenTrajectory("non-zero nonlinearity needs the frozen source trajectory")
        if not mu_source.grid.same_as(grid):
            raise NodeMismatch("frozen trajectory was sampled on a different grid")
        g = g + mu.evaluate_many(grid.nodes, mu_source.node_states())
    return g


def interval_integral(system: ImpulsiveSystem, grid: TimeGrid, i: int, values: np.ndarray) -> np.ndarray:
    """Quadrature of int_{t_{i-1}}^{t_i} S(t_i - s) f(s) ds from node values of f."""
    iv = grid.intervals[i - 1]
    sl = grid.slice(i)
    contrib = system.semigroup.apply_many(iv.end - iv.nodes, values[sl])
    return iv.weights @ contrib


def _interval_samples(system, grid, i, start_state, g) -> np.ndarray:
    """States at the nodes of interval i given the state at its left end."""
    S = system.semigroup
    rule = grid.rule
    iv = grid.intervals[i - 1]
    q = rule.order
    x, w = rule.reference
    offsets, sub_w, interp = rule.partial_tables
    panels = rule.panels_per_interval
    edges = iv.panel_edges
    G = g[grid.slice(i)].reshape(panels, q, -1)
    nodes = iv.nodes.reshape(panels, q)
    weights = iv.weights.reshape(panels, q)

    starts = np.empty((panels, system.n))
    y = start_state
    for P in range(panels):
        starts[P] = y
        if P + 1 < panels:
            y = S.apply(edges[P + 1] - edges[P], y) + weights[P] @ S.apply_many(edges[P + 1] - nodes[P], G[P])

    half = 0.5 * np.diff(edges)
    free = S.apply_many((nodes - edges[:-1, None]).reshape(-1), np.repeat(starts, q, axis=0))
    # forcing interpolated at the sub-nodes of every partial integral
    sub_g = np.einsum("jlm,Pmk->Pjlk", interp, G)
    sub_t = half[:, None, None] * offsets[None, :, :]
    evolved = S.apply_many(sub_t.reshape(-1), sub_g.reshape(-1, system.n)).reshape(panels, q, q, system.n)
    partial = np.einsum("P,jl,Pjlk->Pjk", half, sub_w, evolved)
    return free + partial.reshape(panels * q, system.n)


def propagate(
    system: ImpulsiveSystem,
    control: ControlLaw,
    quad: QuadratureRule,
    mu: Nonlinearity | None = None,
    mu_source: Trajectory | None = None,
    grid: TimeGrid | None = None,
) -> Trajectory:
    """Mild solution on the shared grid, with mu frozen on ``mu_source``."""
    mu = mu or zero_nonlinearity()
    grid = grid or system.grid(quad)
    control.check(system, grid)
    g = _forcing(system, grid, control, mu, mu_source)
    S = system.semigroup

    times, states, rights = [], [], []
    state = system.z0
    for i, iv in enumerate(grid.intervals, start=1):
        interior = _interval_samples(system, grid, i, state, g)
        end = S.apply(iv.end - iv.start, state) + interval_integral(system, grid, i, g)
        times.append(np.concatenate([[iv.start], iv.nodes, [iv.end]]))
        states.append(np.vstack([state, interior, end]))
        if i <= system.p:
            state = system.jump_factor(i) @ end + system.impulse_maps[i - 1] @ control.impulses[i - 1]
            rights.append(state)
    return Trajectory(grid, tuple(times), tuple(states), tuple(rights))


def right_limit_unrolled(
    system: ImpulsiveSystem,
    control: ControlLaw,
    quad: QuadratureRule,
    mu: Nonlinearity | None,
    mu_source: Trajectory | None,
    k: int,
) -> np.ndarray:
    """z(t_k^+) from the fully expanded closed form instead of the recursion.

    Sum of the transported initial state, the transported distributed and mu
    integrals of every earlier interval, the transported impulse controls
    v_1..v_{k-1}, and the untransported D_k v_k.
    """
    if not 1 <= k <= system.p:
        raise IndexOutOfRange(f"impulse index {k} outside 1..{system.p}")
    mu = mu or zero_nonlinearity()
    grid = system.grid(quad)
    control.check(system, grid)
    n = system.n
    u_forcing = control.distributed @ system.control_map.T
    mu_forcing = _forcing(system, grid, ControlLaw.zero(system, grid), mu, mu_source)

    def chain(hi: int, lo: int) -> np.ndarray:
        """prod_{j=hi}^{lo} (I + B_j) S(t_j - t_{j-1}); identity when hi < lo."""
        out = np.eye(n)
        for j in range(lo, hi + 1):
            out = system.transition(j) @ out
        return out

    z = chain(k, 1) @ system.z0
    for i in range(1, k + 1):
        carry = chain(k, i + 1) @ system.jump_factor(i)
        z = z + carry @ interval_integral(system, grid, i, u_forcing)
        z = z + carry @ interval_integral(system, grid, i, mu_forcing)
    for i in range(2, k + 1):
        z = z + chain(k, i) @ (system.impulse_maps[i - 2] @ control.impulses[i - 2])
    return z + system.impulse_maps[k - 1] @ control.impulses[k - 1]
