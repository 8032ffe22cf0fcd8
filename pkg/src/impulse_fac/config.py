"""JSON run configurations.

A run config is one JSON document with a versioned ``schema`` field.  Every
validation failure raises :class:`ConfigError` carrying the dotted path of
the offending field (``schedule.impulse_times[0]``, ``system.rates[3]``...),
which the CLI maps to exit code 2.

Layout::

    {
      "schema": "impulse-fac/run@1",
      "system": {"kind": "heat", "modes": 32, "eigen_convention": "dirichlet",
                 "z0": {"kind": "smooth_random", "decay": 2.0}},
      "schedule": {"impulse_times": [0.3333, 0.6667], "horizon": 1.0},
      "subspace": {"dim": 4},
      "target": {"kind": "smooth_random", "decay": 2.0},
      "alphas": [1.0, 0.1],
      "quadrature": {"order": 20, "panels": null, "grading": null},
      "nonlinearity": {"kind": "zero"},
      "picard": {"tol": 1e-10, "max_iter": 50, "damping": 1.0},
      "seed": 0,
      "output": null
    }

An explicit system replaces the heat block with ``{"kind": "explicit",
"backend": "spectral" | "dense", "rates" | "generator", "control_map",
"jumps", "impulse_maps", "z0"}``.  Vectors (``z0``, ``target``) are either
a plain list or a spec object of kind ``zero``, ``eigenmode`` or
``smooth_random``; random vectors draw from the run seed unless they carry
their own ``seed``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError, ImpulseFacError
from .gramian import GramianBundle, assemble
from .heat import CONVENTIONS, HeatConfig, build_heat, build_subspace, build_target, heat_quadrature
from .linalg import ProjectionSubspace, orthonormalize
from .quadrature import QuadratureRule
from .semigroup import DenseSemigroup, SpectralSemigroup
from .semilinear import PicardConfig
from .system import (
    ImpulseSchedule,
    ImpulsiveSystem,
    Nonlinearity,
    linear_nonlinearity,
    saturating_nonlinearity,
    zero_nonlinearity,
)

SCHEMA = "impulse-fac/run@1"
VECTOR_KINDS = ("zero", "eigenmode", "smooth_random")
NONLINEARITY_KINDS = ("zero", "bounded", "linear_growth")
# z0 draws from a stream offset from the target's so the two never coincide
Z0_SEED_OFFSET = 1


# ----------------------------------------------------------------- helpers


def _obj(raw, path: str) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError(path, "expected an object")
    return raw


def _allowed(raw: dict, keys, path: str) -> None:
    extra = sorted(set(raw) - set(keys))
    if extra:
        raise ConfigError(f"{path}.{extra[0]}" if path else extra[0], "unknown field")


def _num(raw, path: str, positive: bool = False, nonneg: bool = False) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)) or not math.isfinite(raw):
        raise ConfigError(path, f"expected a finite number, got {raw!r}")
    x = float(raw)
    if positive and not x > 0:
        raise ConfigError(path, f"must be positive, got {x}")
    if nonneg and x < 0:
        raise ConfigError(path, f"must be non-negative, got {x}")
    return x


def _int(raw, path: str, minimum: int | None = None) -> int:
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ConfigError(path, f"expected an integer, got {raw!r}")
    if minimum is not None and raw < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {raw}")
    return int(raw)


def _vec(raw, path: str, n: int | None = None) -> tuple[float, ...]:
    if not isinstance(raw, list):
        raise ConfigError(path, "expected a list of numbers")
    out = tuple(_num(x, f"{path}[{i}]") for i, x in enumerate(raw))
    if n is not None and len(out) != n:
        raise ConfigError(path, f"expected length {n}, got {len(out)}")
    return out


def _mat(raw, path: str, rows: int | None = None, cols: int | None = None) -> tuple[tuple[float, ...], ...]:
    if not isinstance(raw, list) or not raw:
        raise ConfigError(path, "expected a non-empty list of rows")
    out = tuple(_vec(r, f"{path}[{i}]", cols) for i, r in enumerate(raw))
    width = len(out[0])
    for i, r in enumerate(out):
        if len(r) != width:
            raise ConfigError(f"{path}[{i}]", f"ragged row: length {len(r)}, expected {width}")
    if rows is not None and len(out) != rows:
        raise ConfigError(path, f"expected {rows} rows, got {len(out)}")
    return out


# ------------------------------------------------------------------ specs


@dataclass(frozen=True)
class VectorSpec:
    """A state-space vector: explicit values or a generated profile."""

    kind: str = "zero"
    values: tuple[float, ...] | None = None
    n: int = 1
    decay: float = 2.0
    seed: int | None = None

    @classmethod
    def parse(cls, raw, path: str) -> "VectorSpec":
        if raw is None:
            return cls("zero")
        if isinstance(raw, list):
            return cls("vector", values=_vec(raw, path))
        raw = _obj(raw, path)
        kind = raw.get("kind")
        if kind not in VECTOR_KINDS:
            raise ConfigError(f"{path}.kind", f"expected one of {VECTOR_KINDS}, got {kind!r}")
        _allowed(raw, ("kind", "n", "decay", "seed"), path)
        spec = cls(kind)
        if kind == "eigenmode":
            spec = cls(kind, n=_int(raw.get("n", 1), f"{path}.n", 1))
        elif kind == "smooth_random":
            decay = _num(raw.get("decay", 2.0), f"{path}.decay")
            if not decay > 0.5:
                raise ConfigError(f"{path}.decay", "must exceed 1/2")
            seed = raw.get("seed")
            spec = cls(kind, decay=decay, seed=None if seed is None else _int(seed, f"{path}.seed", 0))
        return spec

    def to_json(self):
        if self.kind == "vector":
            return list(self.values)
        if self.kind == "zero":
            return {"kind": "zero"}
        if self.kind == "eigenmode":
            return {"kind": "eigenmode", "n": self.n}
        out = {"kind": "smooth_random", "decay": self.decay}
        if self.seed is not None:
            out["seed"] = self.seed
        return out

    def build(self, N: int, seed: int, path: str) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros(N)
        if self.kind == "vector":
            if len(self.values) != N:
                raise ConfigError(path, f"expected length {N}, got {len(self.values)}")
            return np.array(self.values)
        if self.kind == "eigenmode":
            if self.n > N:
                raise ConfigError(f"{path}.n", f"eigenmode {self.n} outside 1..{N}")
            return build_target("eigenmode", N, n=self.n)
        return build_target("smooth_random", N, decay=self.decay, seed=seed if self.seed is None else self.seed)


@dataclass(frozen=True)
class SystemSpec:
    kind: str = "heat"
    # heat
    modes: int = 32
    eigen_convention: str = "dirichlet"
    # explicit
    backend: str = "spectral"
    rates: tuple[float, ...] | None = None
    generator: tuple[tuple[float, ...], ...] | None = None
    control_map: tuple[tuple[float, ...], ...] | None = None
    jumps: tuple[tuple[tuple[float, ...], ...], ...] | None = None
    impulse_maps: tuple[tuple[tuple[float, ...], ...], ...] | None = None
    z0: VectorSpec = field(default_factory=VectorSpec)

    @property
    def dimension(self) -> int:
        if self.kind == "heat":
            return self.modes
        return len(self.rates) if self.backend == "spectral" else len(self.generator)

    @classmethod
    def parse(cls, raw, path: str = "system") -> "SystemSpec":
        raw = _obj(raw, path)
        kind = raw.get("kind", "heat")
        if kind == "heat":
            _allowed(raw, ("kind", "modes", "eigen_convention", "z0"), path)
            modes = _int(raw.get("modes", 32), f"{path}.modes", 2)
            conv = raw.get("eigen_convention", "dirichlet")
            if conv not in CONVENTIONS:
                raise ConfigError(f"{path}.eigen_convention", f"expected one of {CONVENTIONS}, got {conv!r}")
            return cls("heat", modes=modes, eigen_convention=conv, z0=VectorSpec.parse(raw.get("z0"), f"{path}.z0"))
        if kind != "explicit":
            raise ConfigError(f"{path}.kind", f"expected 'heat' or 'explicit', got {kind!r}")
        _allowed(raw, ("kind", "backend", "rates", "generator", "control_map", "jumps", "impulse_maps", "z0"), path)
        backend = raw.get("backend", "spectral")
        rates = generator = None
        if backend == "spectral":
            if "rates" not in raw:
                raise ConfigError(f"{path}.rates", "required for the spectral backend")
            rates = _vec(raw["rates"], f"{path}.rates")
            if not rates:
                raise ConfigError(f"{path}.rates", "must be non-empty")
            n = len(rates)
        elif backend == "dense":
            if "generator" not in raw:
                raise ConfigError(f"{path}.generator", "required for the dense backend")
            generator = _mat(raw["generator"], f"{path}.generator")
            n = len(generator)
            if len(generator[0]) != n:
                raise ConfigError(f"{path}.generator", "must be square")
        else:
            raise ConfigError(f"{path}.backend", f"expected 'spectral' or 'dense', got {backend!r}")
        if "control_map" not in raw:
            raise ConfigError(f"{path}.control_map", "required")
        omega = _mat(raw["control_map"], f"{path}.control_map", rows=n)
        jumps = raw.get("jumps")
        if jumps is not None:
            if not isinstance(jumps, list):
                raise ConfigError(f"{path}.jumps", "expected a list of matrices")
            jumps = tuple(_mat(B, f"{path}.jumps[{k}]", n, n) for k, B in enumerate(jumps))
        imaps = raw.get("impulse_maps")
        if imaps is not None:
            if not isinstance(imaps, list):
                raise ConfigError(f"{path}.impulse_maps", "expected a list of matrices")
            imaps = tuple(_mat(D, f"{path}.impulse_maps[{k}]", rows=n) for k, D in enumerate(imaps))
        z0 = VectorSpec.parse(raw.get("z0"), f"{path}.z0")
        if z0.kind == "vector" and len(z0.values) != n:
            raise ConfigError(f"{path}.z0", f"expected length {n}, got {len(z0.values)}")
        return cls(
            "explicit",
            backend=backend,
            rates=rates,
            generator=generator,
            control_map=omega,
            jumps=jumps,
            impulse_maps=imaps,
            z0=z0,
        )

    def to_json(self) -> dict:
        if self.kind == "heat":
            return {"kind": "heat", "modes": self.modes, "eigen_convention": self.eigen_convention, "z0": self.z0.to_json()}
        out: dict[str, Any] = {"kind": "explicit", "backend": self.backend}
        if self.backend == "spectral":
            out["rates"] = list(self.rates)
        else:
            out["generator"] = [list(r) for r in self.generator]
        out["control_map"] = [list(r) for r in self.control_map]
        out["jumps"] = None if self.jumps is None else [[list(r) for r in B] for B in self.jumps]
        out["impulse_maps"] = None if self.impulse_maps is None else [[list(r) for r in D] for D in self.impulse_maps]
        out["z0"] = self.z0.to_json()
        return out


@dataclass(frozen=True)
class ScheduleSpec:
    impulse_times: tuple[float, ...] = (1.0 / 3.0, 2.0 / 3.0)
    horizon: float = 1.0

    @classmethod
    def parse(cls, raw, path: str = "schedule") -> "ScheduleSpec":
        raw = _obj(raw, path)
        _allowed(raw, ("impulse_times", "horizon"), path)
        times = _vec(raw.get("impulse_times", []), f"{path}.impulse_times")
        horizon = _num(raw.get("horizon", 1.0), f"{path}.horizon", positive=True)
        pts = (0.0,) + times + (horizon,)
        for k in range(1, len(pts)):
            if not pts[k] > pts[k - 1]:
                where = f"{path}.impulse_times[{min(k, len(times)) - 1}]" if times else f"{path}.horizon"
                raise ConfigError(where, f"need 0 < t_1 < ... < t_p < horizon, got {list(times)} with horizon {horizon}")
        return cls(times, horizon)

    def to_json(self) -> dict:
        return {"impulse_times": list(self.impulse_times), "horizon": self.horizon}


@dataclass(frozen=True)
class SubspaceSpec:
    dim: int | None = 0
    vectors: tuple[tuple[float, ...], ...] | None = None

    @classmethod
    def parse(cls, raw, path: str = "subspace") -> "SubspaceSpec":
        raw = _obj(raw, path)
        _allowed(raw, ("dim", "vectors"), path)
        if ("dim" in raw) == ("vectors" in raw):
            raise ConfigError(path, "give exactly one of 'dim' or 'vectors'")
        if "dim" in raw:
            return cls(dim=_int(raw["dim"], f"{path}.dim", 0))
        vecs = raw["vectors"]
        if not isinstance(vecs, list):
            raise ConfigError(f"{path}.vectors", "expected a list of vectors")
        return cls(dim=None, vectors=tuple(_vec(v, f"{path}.vectors[{i}]") for i, v in enumerate(vecs)))

    def to_json(self) -> dict:
        if self.vectors is not None:
            return {"vectors": [list(v) for v in self.vectors]}
        return {"dim": self.dim}

    def build(self, N: int, path: str = "subspace") -> ProjectionSubspace:
        if self.vectors is None:
            if self.dim > N:
                raise ConfigError(f"{path}.dim", f"exceeds state dimension {N}")
            return build_subspace(self.dim, N)
        for i, v in enumerate(self.vectors):
            if len(v) != N:
                raise ConfigError(f"{path}.vectors[{i}]", f"expected length {N}, got {len(v)}")
        if not self.vectors:
            return ProjectionSubspace.empty(N)
        try:
            return orthonormalize([np.array(v) for v in self.vectors], n=N)
        except ImpulseFacError as exc:
            raise ConfigError(f"{path}.vectors", str(exc)) from exc


@dataclass(frozen=True)
class QuadratureSpec:
    """``panels``/``grading`` of None mean: automatic for heat, 1 / 1.0 otherwise."""

    order: int = 20
    panels: int | None = None
    grading: float | None = None

    @classmethod
    def parse(cls, raw, path: str = "quadrature") -> "QuadratureSpec":
        raw = _obj(raw, path)
        _allowed(raw, ("order", "panels", "grading"), path)
        order = _int(raw.get("order", 20), f"{path}.order", 2)
        panels = raw.get("panels")
        panels = None if panels is None else _int(panels, f"{path}.panels", 1)
        grading = raw.get("grading")
        if grading is not None:
            grading = _num(grading, f"{path}.grading")
            if grading < 1.0:
                raise ConfigError(f"{path}.grading", "must be >= 1")
        return cls(order, panels, grading)

    def to_json(self) -> dict:
        return {"order": self.order, "panels": self.panels, "grading": self.grading}


@dataclass(frozen=True)
class NonlinearitySpec:
    kind: str = "zero"
    amplitude: float = 0.0
    d: float = 0.0
    g_bound: float = 1.0

    @classmethod
    def parse(cls, raw, path: str = "nonlinearity") -> "NonlinearitySpec":
        raw = _obj(raw, path)
        kind = raw.get("kind", "zero")
        if kind not in NONLINEARITY_KINDS:
            raise ConfigError(f"{path}.kind", f"expected one of {NONLINEARITY_KINDS}, got {kind!r}")
        if kind == "zero":
            _allowed(raw, ("kind",), path)
            return cls()
        if kind == "bounded":
            _allowed(raw, ("kind", "amplitude"), path)
            return cls(kind, amplitude=_num(raw.get("amplitude", 0.1), f"{path}.amplitude", nonneg=True))
        _allowed(raw, ("kind", "d", "g_bound"), path)
        return cls(
            kind,
            d=_num(raw.get("d", 1.0), f"{path}.d", nonneg=True),
            g_bound=_num(raw.get("g_bound", 1.0), f"{path}.g_bound", nonneg=True),
        )

    def to_json(self) -> dict:
        if self.kind == "zero":
            return {"kind": "zero"}
        if self.kind == "bounded":
            return {"kind": "bounded", "amplitude": self.amplitude}
        return {"kind": "linear_growth", "d": self.d, "g_bound": self.g_bound}

    def build(self) -> Nonlinearity:
        if self.kind == "zero":
            return zero_nonlinearity()
        if self.kind == "bounded":
            return saturating_nonlinearity(self.amplitude)
        return linear_nonlinearity(self.d, self.g_bound)


def _parse_picard(raw, path: str = "picard") -> PicardConfig:
    raw = _obj(raw, path)
    _allowed(raw, ("tol", "max_iter", "damping"), path)
    tol = _num(raw.get("tol", 1e-10), f"{path}.tol", positive=True)
    max_iter = _int(raw.get("max_iter", 50), f"{path}.max_iter", 1)
    damping = _num(raw.get("damping", 1.0), f"{path}.damping", positive=True)
    if damping > 1.0:
        raise ConfigError(f"{path}.damping", "must lie in (0, 1]")
    return PicardConfig(tol, max_iter, damping)


def _parse_alphas(raw, path: str = "alphas") -> tuple[float, ...]:
    alphas = _vec(raw, path)
    if not alphas:
        raise ConfigError(path, "must be non-empty")
    for i, a in enumerate(alphas):
        if not a > 0:
            raise ConfigError(f"{path}[{i}]", f"must be positive, got {a}")
    return alphas


# ----------------------------------------------------------------- config


@dataclass(frozen=True)
class RunConfig:
    system: SystemSpec = field(default_factory=SystemSpec)
    schedule: ScheduleSpec = field(default_factory=ScheduleSpec)
    subspace: SubspaceSpec = field(default_factory=SubspaceSpec)
    target: VectorSpec = field(default_factory=VectorSpec)
    alphas: tuple[float, ...] = tuple(10.0 ** -k for k in range(7))
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    nonlinearity: NonlinearitySpec = field(default_factory=NonlinearitySpec)
    picard: PicardConfig = field(default_factory=PicardConfig)
    seed: int = 0
    output: str | None = None

    @classmethod
    def from_dict(cls, raw) -> "RunConfig":
        raw = _obj(raw, "<root>")
        _allowed(
            raw,
            ("schema", "system", "schedule", "subspace", "target", "alphas", "quadrature", "nonlinearity", "picard", "seed", "output"),
            "",
        )
        schema = raw.get("schema")
        if schema != SCHEMA:
            raise ConfigError("schema", f"expected {SCHEMA!r}, got {schema!r}")
        system = SystemSpec.parse(raw.get("system", {}))
        schedule = ScheduleSpec.parse(raw.get("schedule", {}))
        if system.kind == "explicit":
            for name in ("jumps", "impulse_maps"):
                mats = getattr(system, name)
                if mats is not None and len(mats) != len(schedule.impulse_times):
                    raise ConfigError(f"system.{name}", f"expected {len(schedule.impulse_times)} matrices (one per impulse), got {len(mats)}")
        output = raw.get("output")
        if output is not None and not isinstance(output, str):
            raise ConfigError("output", "expected a path string or null")
        cfg = cls(
            system=system,
            schedule=schedule,
            subspace=SubspaceSpec.parse(raw.get("subspace", {"dim": 0})),
            target=VectorSpec.parse(raw.get("target"), "target"),
            alphas=_parse_alphas(raw.get("alphas", list(cls.alphas))),
            quadrature=QuadratureSpec.parse(raw.get("quadrature", {})),
            nonlinearity=NonlinearitySpec.parse(raw.get("nonlinearity", {})),
            picard=_parse_picard(raw.get("picard", {})),
            seed=_int(raw.get("seed", 0), "seed", 0),
            output=output,
        )
        N = system.dimension
        if cfg.target.kind == "vector" and len(cfg.target.values) != N:
            raise ConfigError("target", f"expected length {N}, got {len(cfg.target.values)}")
        if cfg.subspace.vectors is None and cfg.subspace.dim > N:
            raise ConfigError("subspace.dim", f"exceeds state dimension {N}")
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("<root>", f"invalid JSON: {exc}") from exc
        return cls.from_dict(raw)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError("<file>", f"cannot read {path}: {exc}") from exc
        return cls.from_json(text)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "system": self.system.to_json(),
            "schedule": self.schedule.to_json(),
            "subspace": self.subspace.to_json(),
            "target": self.target.to_json(),
            "alphas": list(self.alphas),
            "quadrature": self.quadrature.to_json(),
            "nonlinearity": self.nonlinearity.to_json(),
            "picard": asdict(self.picard),
            "seed": self.seed,
            "output": self.output,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def replace(self, **changes) -> "RunConfig":
        from dataclasses import replace

        return replace(self, **changes)

    def build(self) -> "BuiltRun":
        return BuiltRun(self)


class BuiltRun:
    """Numerical objects derived from a RunConfig, built lazily."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg

    @cached_property
    def system(self) -> ImpulsiveSystem:
        spec, sched = self.cfg.system, self.cfg.schedule
        N = spec.dimension
        z0 = spec.z0.build(N, self.cfg.seed + Z0_SEED_OFFSET, "system.z0")
        if spec.kind == "heat":
            return build_heat(HeatConfig(N, sched.impulse_times, sched.horizon, spec.eigen_convention, tuple(z0)))
        if spec.backend == "spectral":
            rates = np.array(spec.rates)
            if np.any(rates < 0):
                raise ConfigError("system.rates", "decay rates must be non-negative")
            semigroup = SpectralSemigroup(rates)
        else:
            semigroup = DenseSemigroup(np.array(spec.generator))
        p = len(sched.impulse_times)
        jumps = tuple(np.array(B) for B in spec.jumps) if spec.jumps is not None else tuple(np.zeros((N, N)) for _ in range(p))
        imaps = (
            tuple(np.array(D) for D in spec.impulse_maps) if spec.impulse_maps is not None else tuple(np.zeros((N, 1)) for _ in range(p))
        )
        try:
            return ImpulsiveSystem(
                semigroup, np.array(spec.control_map), jumps, imaps, z0, ImpulseSchedule(sched.impulse_times, sched.horizon)
            )
        except ImpulseFacError as exc:
            raise ConfigError("system", str(exc)) from exc

    @cached_property
    def quad(self) -> QuadratureRule:
        q = self.cfg.quadrature
        if self.cfg.system.kind == "heat" and q.panels is None:
            spec, sched = self.cfg.system, self.cfg.schedule
            auto = heat_quadrature(HeatConfig(spec.modes, sched.impulse_times, sched.horizon, spec.eigen_convention), q.order)
            return QuadratureRule(q.order, auto.panels_per_interval, auto.grading if q.grading is None else q.grading)
        return QuadratureRule(q.order, q.panels or 1, 1.0 if q.grading is None else q.grading)

    @cached_property
    def subspace(self) -> ProjectionSubspace:
        return self.cfg.subspace.build(self.system.n)

    @cached_property
    def target(self) -> np.ndarray:
        return self.cfg.target.build(self.system.n, self.cfg.seed, "target")

    @cached_property
    def mu(self) -> Nonlinearity:
        return self.cfg.nonlinearity.build()

    @cached_property
    def bundle(self) -> GramianBundle:
        return assemble(self.system, self.quad)


def default_heat_config(**changes) -> RunConfig:
    """The N = 32, p = 2 heat demo: impulses at b/3 and 2b/3, d = 4, smooth target."""
    cfg = RunConfig(
        system=SystemSpec("heat", modes=32, z0=VectorSpec("smooth_random", decay=2.0)),
        schedule=ScheduleSpec((1.0 / 3.0, 2.0 / 3.0), 1.0),
        subspace=SubspaceSpec(dim=4),
        target=VectorSpec("smooth_random", decay=2.0),
    )
    return cfg.replace(**changes) if changes else cfg
