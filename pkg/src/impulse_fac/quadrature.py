"""Composite Gauss-Legendre rules on the impulse intervals.

The same ``TimeGrid`` feeds Gramian assembly, the input-to-state map and the
trajectory solver, so the discrete model satisfies the Gramian and residual
identities to linear-algebra precision rather than quadrature precision.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre of ``order`` nodes on each of ``panels_per_interval`` panels.

    ``grading`` > 1 shrinks panels geometrically toward the right end of each
    interval (width ratio ``grading`` between neighbours).  The integrands
    S(t_i - s)(...) of stiff spectral systems are sharply peaked at s = t_i,
    and a graded mesh resolves them with a handful of panels.
    """

    order: int = 20
    panels_per_interval: int = 1
    grading: float = 1.0

    def __post_init__(self):
        if int(self.order) < 2:
            raise ValueError("quadrature order must be at least 2")
        if int(self.panels_per_interval) < 1:
            raise ValueError("panels_per_interval must be at least 1")
        if not self.grading >= 1.0:
            raise ValueError("grading must be >= 1")

    def panel_edges(self, a: float, b: float) -> np.ndarray:
        P = int(self.panels_per_interval)
        if self.grading == 1.0 or P == 1:
            return np.linspace(a, b, P + 1)
        widths = float(self.grading) ** -np.arange(P)
        cum = np.concatenate([[0.0], np.cumsum(widths)]) / widths.sum()
        edges = a + (b - a) * cum
        edges[-1] = b
        return edges

    @cached_property
    def reference(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights on [-1, 1]."""
        return np.polynomial.legendre.leggauss(int(self.order))

    def panel_nodes(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights of the composite rule on [a, b], ascending."""
        x, w = self.reference
        edges = self.panel_edges(a, b)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        nodes = (mid[:, None] + half[:, None] * x[None, :]).reshape(-1)
        weights = (half[:, None] * w[None, :]).reshape(-1)
        return nodes, weights

    def integrate(self, f, a: float, b: float) -> float:
        nodes, weights = self.panel_nodes(a, b)
        return float(np.dot(weights, f(nodes)))

    @cached_property
    def partial_tables(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Tables for integrals from a panel's left edge up to each of its nodes.

        For reference node j, the integral over [-1, x_j] is approximated with
        a Gauss rule of the same order mapped onto that sub-interval; the
        integrand at the sub-nodes is obtained by Lagrange interpolation
        through the panel's own nodes.  Returns ``(offsets, weights, interp)``
        with shapes (q, q), (q, q), (q, q, q):

        * ``offsets[j, l]`` is x_j - s_jl (reference units, to be scaled by half the panel length),
        * ``weights[j, l]`` are the sub-rule weights (same scaling),
        * ``interp[j, l, m]`` is the m-th Lagrange basis polynomial at s_jl.
        """
        x, w = self.reference
        q = x.shape[0]
        scale = 0.5 * (x + 1.0)
        sub = -1.0 + scale[:, None] * (x[None, :] + 1.0)
        sub_w = scale[:, None] * w[None, :]
        offsets = x[:, None] - sub
        # barycentric weights of the Legendre nodes
        diff = x[:, None] - x[None, :]
        np.fill_diagonal(diff, 1.0)
        bary = 1.0 / np.prod(diff, axis=1)
        pts = sub.reshape(-1)
        d = pts[:, None] - x[None, :]
        exact = np.isclose(d, 0.0, atol=1e-15)
        d[exact] = 1.0
        terms = bary[None, :] / d
        interp = terms / terms.sum(axis=1, keepdims=True)
        hit = exact.any(axis=1)
        if hit.any():
            interp[hit] = exact[hit].astype(float)
        return offsets, sub_w, interp.reshape(q, q, q)


@dataclass(frozen=True)
class IntervalGrid:
    index: int
    start: float
    end: float
    nodes: np.ndarray
    weights: np.ndarray
    panel_edges: np.ndarray

    @property
    def size(self) -> int:
        return self.nodes.shape[0]


class TimeGrid:
    """Quadrature nodes for every interval (t_{i-1}, t_i), i = 1..p+1.

    Interval ``i`` (1-based) ends at t_i, with t_0 = 0 and t_{p+1} = b.
    ``offsets[i-1]:offsets[i]`` slices the flat node arrays for interval i.
    """

    def __init__(self, breakpoints, rule: QuadratureRule):
        self.rule = rule
        self.breakpoints = np.asarray(breakpoints, dtype=float)
        intervals = []
        for i in range(1, self.breakpoints.shape[0]):
            a, b = self.breakpoints[i - 1], self.breakpoints[i]
            nodes, weights = rule.panel_nodes(a, b)
            edges = rule.panel_edges(a, b)
            intervals.append(IntervalGrid(i, float(a), float(b), nodes, weights, edges))
        self.intervals: list[IntervalGrid] = intervals
        self.offsets = np.concatenate([[0], np.cumsum([iv.size for iv in intervals])]).astype(int)
        self.nodes = np.concatenate([iv.nodes for iv in intervals])
        self.weights = np.concatenate([iv.weights for iv in intervals])

    @property
    def size(self) -> int:
        return int(self.offsets[-1])

    def slice(self, i: int) -> slice:
        return slice(int(self.offsets[i - 1]), int(self.offsets[i]))

    def interval_of_node(self) -> np.ndarray:
        return np.repeat(np.arange(1, len(self.intervals) + 1), [iv.size for iv in self.intervals])

    def same_as(self, other: "TimeGrid") -> bool:
        return (
            self.rule == other.rule
            and self.breakpoints.shape == other.breakpoints.shape
            and np.array_equal(self.breakpoints, other.breakpoints)
        )
