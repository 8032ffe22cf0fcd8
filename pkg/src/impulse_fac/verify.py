"""Executable invariant suite over the embedded fixtures and seeded systems.

Each check returns a :class:`Check` with the measured value, the tolerance
it is compared against and a status (``pass``, ``fail`` or ``skip``).
``tol_scale`` multiplies every error tolerance (not the structural bounds
such as "contraction norm < 1"), so ``tol_scale=0`` demonstrates the
failure path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import BuiltRun
from .errors import ImpulseFacError
from .fixtures import load_fixture
from .gramian import assemble, closed_form_bundle, materialize_MMstar
from .linalg import ProjectionSubspace, orthonormalize, project
from .quadrature import QuadratureRule
from .resolvent import contraction_norm, delta, solve_direct, solve_factorized
from .semigroup import DenseSemigroup, SpectralSemigroup
from .semilinear import PicardConfig, constants_report, picard_solve
from .synthesis import cost_and_gradient, synthesize, verify_residual
from .system import ControlLaw, ImpulseSchedule, ImpulsiveSystem, propagate, right_limit_unrolled


def rng(seed: int) -> np.random.Generator:
    """The package's counter-based generator."""
    return np.random.Generator(np.random.Philox(seed))


def random_system(seed: int, n: int = 4, p: int = 2, m: int = 2, r: int = 2, backend: str = "spectral") -> ImpulsiveSystem:
    """Seeded system with nonzero jumps, impulse maps and initial state."""
    g = rng(seed)
    times = np.sort(g.uniform(0.1, 0.9, size=p))
    # keep impulse times well separated so every interval has width
    times = np.linspace(0.0, 1.0, p + 2)[1:-1] + 0.05 * (times - 0.5) / max(p, 1)
    if backend == "spectral":
        semigroup = SpectralSemigroup(g.uniform(0.0, 4.0, size=n))
    else:
        Q, _ = np.linalg.qr(g.standard_normal((n, n)))
        A = -Q @ np.diag(g.uniform(0.0, 4.0, size=n)) @ Q.T + 0.5 * (lambda K: K - K.T)(g.standard_normal((n, n)))
        semigroup = DenseSemigroup(A)
    return ImpulsiveSystem(
        semigroup,
        g.standard_normal((n, m)),
        tuple(0.3 * g.standard_normal((n, n)) for _ in range(p)),
        tuple(g.standard_normal((n, r)) for _ in range(p)),
        g.standard_normal(n),
        ImpulseSchedule(tuple(times), 1.0),
    )


def random_subspace(seed: int, n: int, d: int) -> ProjectionSubspace:
    if d == 0:
        return ProjectionSubspace.empty(n)
    return orthonormalize(list(rng(seed).standard_normal((d, n))), n=n)


def random_spd(seed: int, n: int, floor: float = 1e-2) -> np.ndarray:
    g = rng(seed)
    Q, _ = np.linalg.qr(g.standard_normal((n, n)))
    W = Q @ np.diag(g.uniform(floor, 2.0, size=n)) @ Q.T
    return 0.5 * (W + W.T)


def rel(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    tolerance: float
    status: str
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status != "fail"

    def line(self) -> str:
        return f"{self.status.upper():4s} {self.name:<28s} measured={self.measured:.3e} tol={self.tolerance:.3e} {self.detail}".rstrip()


def _le(name: str, measured: float, tol: float, detail: str = "") -> Check:
    ok = bool(np.isfinite(measured) and measured <= tol)
    return Check(name, float(measured), float(tol), "pass" if ok else "fail", detail)


def _lt(name: str, measured: float, bound: float, detail: str = "") -> Check:
    ok = bool(np.isfinite(measured) and measured < bound)
    return Check(name, float(measured), float(bound), "pass" if ok else "fail", detail)


# ------------------------------------------------------------------ checks


def check_mmstar(scale: float, seeds=range(3)) -> Check:
    quad = QuadratureRule(12)
    worst = 0.0
    for s in seeds:
        system = random_system(100 + s, n=5, p=2)
        bundle = assemble(system, quad)
        worst = max(worst, rel(materialize_MMstar(system, quad, bundle), bundle.total))
    return _le("mmstar_identity", worst, 1e-10 * scale, f"{len(seeds)} seeded systems")


def check_oracle(scale: float, runs: dict[str, BuiltRun]) -> Check:
    worst = 0.0
    for run in runs.values():
        if isinstance(run.system.semigroup, SpectralSemigroup):
            cf = closed_form_bundle(run.system).total
            if np.linalg.norm(cf) > 0:
                worst = max(worst, rel(run.bundle.total, cf))
    return _le("oracle_equivalence", worst, 1e-12 * scale, "closed form vs quadrature")


def check_factorized(scale: float, cases: int = 20) -> Check:
    worst = 0.0
    for s in range(cases):
        n = 3 + s % 4
        W = random_spd(200 + s, n)
        P = random_subspace(300 + s, n, s % (n + 1))
        alpha = 10.0 ** rng(400 + s).uniform(-4, 1)
        b = rng(500 + s).standard_normal(n)
        worst = max(worst, rel(solve_factorized(W, P, alpha, b), solve_direct(W, P, alpha, b)))
    return _le("factorized_resolvent", worst, 1e-11 * scale, f"{cases} seeded cases")


def check_resolvent_bound(scale: float, run: BuiltRun, name: str, samples: int = 100) -> Check:
    W, P = run.bundle.total, run.subspace
    dlt = delta(W, P) if P.dim else math.inf
    if P.dim and dlt <= 1e-12 * max(1.0, float(np.max(np.abs(W)))):
        return Check(f"resolvent_bound[{name}]", dlt, 0.0, "skip", "delta = 0: Gramian not positive on D, bound vacuous")
    g = rng(600)
    worst = 0.0
    for alpha in (1e-3, 1e-1, 1.0):
        bound = 1.0 / min(alpha, dlt)
        for _ in range(samples // 3 + 1):
            h = g.standard_normal(W.shape[0])
            worst = max(worst, np.linalg.norm(solve_direct(W, P, alpha, h)) / (bound * np.linalg.norm(h)))
    # ratio <= 1 is the claimed bound; the slack is round-off
    return _le(f"resolvent_bound[{name}]", worst, 1.0 + 1e-9 * scale, "max ||x|| / (||h|| / min(alpha, delta))")


def check_contraction_family(scale: float, run: BuiltRun, name: str) -> list[Check]:
    W, P = run.bundle.total, run.subspace
    n = W.shape[0]
    Pf = P if P.dim else ProjectionSubspace.full(n)
    out = []
    alphas = np.logspace(-8, 2, 41)
    out.append(_lt(f"contraction_below_one[{name}]", max(contraction_norm(W, Pf, a) for a in alphas), 1.0, "max over alpha in [1e-8, 1e2]"))

    lam = float(np.linalg.eigvalsh(W)[0])
    h = rng(700).standard_normal(n)

    def T(a):
        return a * np.linalg.solve(a * np.eye(n) + W, project(Pf, h))

    seq = [np.linalg.norm(T(2.0 ** -k)) for k in range(21)]
    worst_rise = max(0.0, max(b - a for a, b in zip(seq, seq[1:])))
    a_final = 2.0 ** -20
    bound = a_final / (a_final + lam) * np.linalg.norm(h) * (1 + 1e-9)
    mono = worst_rise <= 1e-14 * scale * np.linalg.norm(h)
    final_ok = seq[-1] <= bound
    out.append(
        Check(
            f"fixed_vector_decay[{name}]",
            seq[-1],
            bound,
            "pass" if (mono and final_ok and lam > 0) else ("skip" if lam <= 0 else "fail"),
            f"monotone={mono}",
        )
    )
    worst = -math.inf
    grid = np.logspace(-6, 1, 15)
    for a in grid:
        for a1 in grid:
            lhs = np.linalg.norm(T(a1) - T(a))
            rhs = abs(a1 - a) / a1 * np.linalg.norm(h) + 1e-12 * scale
            worst = max(worst, lhs - rhs)
    out.append(_le(f"alpha_lipschitz[{name}]", worst, 0.0, "max lhs - rhs"))
    return out


def check_linear_pipeline(scale: float, run: BuiltRun, name: str) -> list[Check]:
    system, P, h, quad = run.system, run.subspace, run.target, run.quad
    hn = 1.0 + float(np.linalg.norm(h))
    k1 = proj = 0.0
    for alpha in run.cfg.alphas:
        result = synthesize(system, run.bundle, P, alpha, h, quad)
        miss_err, pmiss = verify_residual(system, result, quad)
        k1 = max(k1, miss_err / hn)
        proj = max(proj, pmiss / hn)
    return [
        _le(f"residual_identity[{name}]", k1, 1e-9 * scale, "||z(b) - h - predicted|| / (1 + ||h||)"),
        _le(f"exact_projection[{name}]", proj, 1e-10 * scale, "||pi_D (z(b) - h)|| / (1 + ||h||)"),
    ]


def check_unroll(scale: float, seeds=range(3)) -> Check:
    quad = QuadratureRule(12)
    worst = 0.0
    for s in seeds:
        system = random_system(800 + s, n=4, p=3, backend="dense" if s % 2 else "spectral")
        grid = system.grid(quad)
        g = rng(900 + s)
        coef = g.standard_normal((3, system.m))
        control = ControlLaw.from_function(
            system, grid, lambda t: coef[0] + coef[1] * np.sin(3 * t) + coef[2] * t * t, g.standard_normal((system.p, system.impulse_dim))
        )
        traj = propagate(system, control, quad)
        for k in range(1, system.p + 1):
            worst = max(worst, rel(right_limit_unrolled(system, control, quad, None, None, k), traj.right_limits[k - 1]))
    return _le("unroll_mild_solution", worst, 1e-10 * scale, "sequential vs closed-form right limits")


def check_gradient(scale: float, cases: int = 5) -> Check:
    from .gramian import GramianBundle

    worst = 0.0
    for s in range(cases):
        n = 4
        W = random_spd(1000 + s, n)
        bundle = GramianBundle(W, 0 * W, 0 * W, 0 * W, W, (), (), np.eye(n), ())
        P = random_subspace(1100 + s, n, 2)
        g = rng(1200 + s)
        phi, sigma, alpha = g.standard_normal(n), g.standard_normal(n), 0.3
        _, grad = cost_and_gradient(bundle, P, alpha, phi, sigma)
        eps = 1e-6
        fd = np.array(
            [
                (cost_and_gradient(bundle, P, alpha, phi + eps * e, sigma)[0] - cost_and_gradient(bundle, P, alpha, phi - eps * e, sigma)[0])
                / (2 * eps)
                for e in np.eye(n)
            ]
        )
        worst = max(worst, rel(fd, grad))
    return _le("gradient_check", worst, 1e-6 * scale, "central differences")


def check_mu_zero(scale: float, run: BuiltRun, name: str) -> Check:
    from .system import zero_nonlinearity

    alpha = run.cfg.alphas[0]
    lin = synthesize(run.system, run.bundle, run.subspace, alpha, run.target, run.quad)
    lin_final = propagate(run.system, lin.control, run.quad).final
    out = picard_solve(run.system, run.bundle, run.subspace, alpha, run.target, zero_nonlinearity(), run.quad, PicardConfig())
    diff = float(np.linalg.norm(out.trajectory.final - lin_final))
    status = "pass" if (out.iterations == 1 and diff <= 1e-12 * scale) else "fail"
    return Check(f"mu_zero_collapse[{name}]", diff, 1e-12 * scale, status, f"iterations={out.iterations}")


def check_smallness(scale: float, bounded: BuiltRun, large: BuiltRun) -> list[Check]:
    b = constants_report(bounded.system, bounded.bundle, bounded.subspace, bounded.cfg.alphas[-1], bounded.mu, bounded.quad, h=bounded.target)
    L = constants_report(large.system, large.bundle, large.subspace, large.cfg.alphas[-1], large.mu, large.quad, h=large.target)
    return [
        Check("smallness_bounded_mu", b.f5_lhs, 0.0, "pass" if (b.f5_lhs == 0.0 and b.satisfied) else "fail", f"satisfied={b.satisfied}"),
        Check("smallness_large_d", L.f5_lhs, 1.0, "pass" if (not L.satisfied and L.f5_lhs > 1.0) else "fail", f"satisfied={L.satisfied}"),
    ]


LINEAR_FIXTURES = ("scalar-p1", "heat-n32-p2")


def run_checks(tol_scale: float = 1.0, runs: dict[str, BuiltRun] | None = None, progress: Callable[[Check], None] | None = None) -> list[Check]:
    """Run the whole suite; ``runs`` overrides the linear fixtures (e.g. a user config)."""
    if runs is None:
        runs = {name: load_fixture(name).config.build() for name in LINEAR_FIXTURES + ("omega-zero",)}
    checks: list[Check] = []

    def add(c):
        for item in c if isinstance(c, list) else [c]:
            checks.append(item)
            if progress:
                progress(item)

    add(check_mmstar(tol_scale))
    add(check_oracle(tol_scale, runs))
    add(check_factorized(tol_scale))
    for name, run in runs.items():
        add(check_resolvent_bound(tol_scale, run, name))
        try:
            if np.linalg.eigvalsh(run.bundle.total)[0] > 0:
                add(check_contraction_family(tol_scale, run, name))
                add(check_linear_pipeline(tol_scale, run, name))
                add(check_mu_zero(tol_scale, run, name))
        except ImpulseFacError as exc:
            add(Check(f"pipeline[{name}]", math.nan, 0.0, "fail", f"{type(exc).__name__}: {exc}"))
    add(check_unroll(tol_scale))
    add(check_gradient(tol_scale))
    add(check_smallness(tol_scale, load_fixture("bounded-mu").config.build(), load_fixture("large-d").config.build()))
    return checks
