"""Command-line interface: ``impulse-fac <subcommand> [--config PATH | --fixture NAME] ...``.

Exit codes: 0 ok, 1 verification failure, 2 configuration error,
3 numerical failure.  Reports go to standard output (or ``--out``) as JSON,
sweeps and trajectories as CSV.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import BuiltRun, RunConfig, default_heat_config
from .errors import ConfigError, ImpulseFacError, NoConvergence, UnknownFixture
from .fixtures import list_fixtures, load_fixture
from .gramian import closed_form_bundle
from .heat import alpha_sweep, sweep_csv
from .linalg import project, smallest_eigenvalue_sym, spectral_norm
from .resolvent import delta as subspace_delta
from .semigroup import SpectralSemigroup
from .semilinear import constants_report, free_evolution, picard_solve
from .synthesis import synthesize, verify_residual
from .system import propagate

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("impulse_fac")


def _alphas(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError("--alphas", f"not a comma-separated list of numbers: {text!r}") from exc
    if not vals:
        raise ConfigError("--alphas", "empty list")
    for i, a in enumerate(vals):
        if not a > 0:
            raise ConfigError(f"--alphas[{i}]", f"must be positive, got {a}")
    return vals


def load_config(args) -> RunConfig:
    if args.config and args.fixture:
        raise ConfigError("--config", "give either --config or --fixture, not both")
    if args.config:
        cfg = RunConfig.load(args.config)
    elif args.fixture:
        try:
            cfg = load_fixture(args.fixture).config
        except UnknownFixture as exc:
            raise ConfigError("--fixture", str(exc)) from exc
    else:
        cfg = default_heat_config()
    if args.seed is not None:
        if args.seed < 0 or args.seed >= 2 ** 64:
            raise ConfigError("--seed", "must be an unsigned 64-bit integer")
        cfg = cfg.replace(seed=args.seed)
    if args.alphas:
        cfg = cfg.replace(alphas=_alphas(args.alphas))
    if args.quad_order is not None:
        if args.quad_order < 2:
            raise ConfigError("--quad-order", "must be at least 2")
        cfg = cfg.replace(quadrature=replace(cfg.quadrature, order=args.quad_order))
    if args.out:
        cfg = cfg.replace(output=args.out)
    return cfg


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _vec(v) -> list[float]:
    return [float(x) for x in np.asarray(v).ravel()]


# ------------------------------------------------------------- subcommands


def cmd_gramian(run: BuiltRun, args) -> int:
    bundle = run.bundle
    report = {
        "n": run.system.n,
        "p": run.system.p,
        "quadrature": {"order": run.quad.order, "panels": run.quad.panels_per_interval, "grading": run.quad.grading},
        "block_norms": {k: spectral_norm(v) for k, v in bundle.blocks.items()},
        "total_min_eig": smallest_eigenvalue_sym(bundle.total),
        "total_trace": float(np.trace(bundle.total)),
    }
    if run.system.n <= 8:
        report["total"] = [_vec(r) for r in bundle.total]
    if run.subspace.dim:
        report["delta"] = subspace_delta(bundle.total, run.subspace)
    if isinstance(run.system.semigroup, SpectralSemigroup):
        cf = closed_form_bundle(run.system).total
        denom = max(float(np.linalg.norm(cf)), 1e-300)
        report["oracle_rel_error"] = float(np.linalg.norm(bundle.total - cf)) / denom if np.linalg.norm(cf) else float(np.linalg.norm(bundle.total))
    _emit(_json(report), run.cfg.output)
    return EXIT_OK


def cmd_synthesize(run: BuiltRun, args) -> int:
    rows = []
    for alpha in sorted(run.cfg.alphas, reverse=True):
        result = synthesize(run.system, run.bundle, run.subspace, alpha, run.target, run.quad)
        miss_err, pmiss = verify_residual(run.system, result, run.quad)
        rows.append(
            {
                "alpha": alpha,
                "phi": _vec(result.phi),
                "impulse_controls": [_vec(v) for v in result.control.impulses],
                "predicted_residual_norm": float(np.linalg.norm(result.predicted_residual)),
                "residual_identity_error": miss_err,
                "projected_residual_norm": pmiss,
            }
        )
    _emit(_json({"n": run.system.n, "subspace_dim": run.subspace.dim, "results": rows}), run.cfg.output)
    return EXIT_OK


def cmd_simulate(run: BuiltRun, args) -> int:
    """Trajectory CSV for the synthesized control at the largest alpha (or zero control with --free)."""
    if args.free:
        traj = free_evolution(run.system, run.quad)
    else:
        alpha = max(run.cfg.alphas)
        if run.mu.is_zero:
            traj = propagate(run.system, synthesize(run.system, run.bundle, run.subspace, alpha, run.target, run.quad).control, run.quad)
        else:
            traj = picard_solve(run.system, run.bundle, run.subspace, alpha, run.target, run.mu, run.quad, run.cfg.picard).trajectory
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "interval"] + [f"z{j + 1}" for j in range(run.system.n)])
    for i, (ts, zs) in enumerate(zip(traj.times, traj.states), start=1):
        for t, z in zip(ts, zs):
            w.writerow([f"{t:.17g}", i] + [f"{x:.17g}" for x in z])
    _emit(buf.getvalue(), run.cfg.output)
    return EXIT_OK


def _sweep(run: BuiltRun) -> int:
    rows = alpha_sweep(
        run.system, run.subspace, run.target, run.cfg.alphas, mu=run.mu, quad=run.quad, cfg=run.cfg.picard, bundle=run.bundle
    )
    _emit(sweep_csv(rows), run.cfg.output)
    if all(r.status != "ok" for r in rows):
        log.error("every row of the sweep failed")
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_sweep(run: BuiltRun, args) -> int:
    return _sweep(run)


def cmd_semilinear(run: BuiltRun, args) -> int:
    rows, failed = [], 0
    for alpha in sorted(run.cfg.alphas, reverse=True):
        row = {"alpha": alpha}
        try:
            out = picard_solve(run.system, run.bundle, run.subspace, alpha, run.target, run.mu, run.quad, run.cfg.picard)
            miss = out.trajectory.final - run.target
            row.update(
                status="ok",
                iterations=out.iterations,
                history=out.history,
                residual_norm=float(np.linalg.norm(miss)),
                projected_residual_norm=float(np.linalg.norm(project(run.subspace, miss))),
            )
        except NoConvergence as exc:
            failed += 1
            row.update(status="no_convergence", iterations=exc.max_iter, history=list(exc.history))
        rep = constants_report(run.system, run.bundle, run.subspace, alpha, run.mu, run.quad, h=run.target)
        row["constants"] = rep.as_dict()
        rows.append(row)
    _emit(_json({"nonlinearity": run.cfg.nonlinearity.to_json(), "results": rows}), run.cfg.output)
    return EXIT_NUMERIC if failed == len(rows) else EXIT_OK


def cmd_verify(run: BuiltRun | None, args) -> int:
    from .verify import run_checks

    runs = {"config": run} if run is not None else None
    lines = []

    def show(c):
        lines.append(c.line())
        print(c.line(), flush=True)

    checks = run_checks(args.tol_scale, runs=runs, progress=show)
    n_fail = sum(not c.ok for c in checks)
    summary = f"{len(checks) - n_fail}/{len(checks)} checks ok ({sum(c.status == 'skip' for c in checks)} skipped)"
    print(summary)
    if run is not None and run.cfg.output:
        Path(run.cfg.output).write_text("\n".join(lines + [summary]) + "\n")
    return EXIT_VERIFY if n_fail else EXIT_OK


def cmd_heat_demo(run: BuiltRun, args) -> int:
    return _sweep(run)


COMMANDS = {
    "gramian": (cmd_gramian, "assemble the Gramian and report block norms"),
    "synthesize": (cmd_synthesize, "linear synthesis at each alpha (JSON)"),
    "simulate": (cmd_simulate, "trajectory CSV under the synthesized (or zero) control"),
    "sweep": (cmd_sweep, "alpha sweep CSV"),
    "semilinear": (cmd_semilinear, "Picard synthesis and smallness constants (JSON)"),
    "verify": (cmd_verify, "run the invariant suite"),
    "heat-demo": (cmd_heat_demo, "alpha sweep on the built-in 32-mode heat problem"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="impulse-fac", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON run config")
        p.add_argument("--fixture", help=f"embedded fixture ({', '.join(list_fixtures())})")
        p.add_argument("--seed", type=int, help="override the config seed (u64)")
        p.add_argument("--alphas", help="comma-separated alpha grid")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--quad-order", type=int, help="Gauss-Legendre nodes per panel")
        if name == "simulate":
            p.add_argument("--free", action="store_true", help="zero controls instead of the synthesized ones")
        if name == "verify":
            p.add_argument("--tol-scale", type=float, default=1.0, help="multiply every error tolerance (0 forces failures)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    func = COMMANDS[args.command][0]
    try:
        if args.command == "verify" and not (args.config or args.fixture):
            return func(None, args)
        cfg = load_config(args)
        if args.command == "heat-demo" and cfg.system.kind != "heat":
            raise ConfigError("system.kind", "heat-demo needs a heat system")
        run = cfg.build()
        run.system  # validate eagerly so config problems surface as exit 2
        run.subspace
        run.target
        return func(run, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ImpulseFacError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
