"""Embedded fixtures: run configs plus expected values with provenance.

Each fixture file under ``fixture_data/`` is a JSON object::

    {"name": ..., "description": ...,
     "config": <RunConfig document>,
     "expected": {key: {"value": float, "provenance": str, "tol": float, "tol_kind": "abs" | "rel"}}}

Provenance is either a closed-form derivation (written out) or
``pipeline-derived`` with the command that produced the number.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from .config import RunConfig
from .errors import UnknownFixture

_PACKAGE = "impulse_fac.fixture_data"


@dataclass(frozen=True)
class Expected:
    value: float
    provenance: str
    tol: float
    tol_kind: str = "abs"

    def check(self, measured: float) -> bool:
        err = abs(measured - self.value)
        if self.tol_kind == "rel":
            err /= max(abs(self.value), 1e-300)
        return err <= self.tol


@dataclass(frozen=True)
class Fixture:
    name: str
    description: str
    document: dict
    expected: dict[str, Expected] = field(default_factory=dict)

    @property
    def config(self) -> RunConfig:
        return RunConfig.from_dict(self.document)


def _files():
    root = resources.files(_PACKAGE)
    return {p.name[: -len(".json")]: p for p in root.iterdir() if p.name.endswith(".json")}


def list_fixtures() -> list[str]:
    return sorted(_files())


def load_fixture(name: str) -> Fixture:
    files = _files()
    if name not in files:
        raise UnknownFixture(f"unknown fixture {name!r}; available: {', '.join(sorted(files))}")
    raw = json.loads(files[name].read_text())
    expected = {}
    for key, e in raw.get("expected", {}).items():
        if not e.get("provenance"):
            raise ValueError(f"fixture {name}: expected value {key!r} has no provenance")
        expected[key] = Expected(float(e["value"]), e["provenance"], float(e["tol"]), e.get("tol_kind", "abs"))
    return Fixture(raw["name"], raw.get("description", ""), raw["config"], expected)
