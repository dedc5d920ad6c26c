"""Experiment configuration documents.

A config is one JSON object with a ``schema`` version field. Unknown keys
are rejected so that typos fail loudly instead of silently using defaults.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .manifold import CATALOG

SCHEMA = "torsionlab/1"
EXPERIMENTS = (
    "ball-rigidity", "fem-solve", "symmetrize", "compare", "rkd", "perelman", "cheeger-family", "verify",
)
SUITES = ("radial", "fem", "symmetrization", "models", "cheeger")


class ConfigError(ValueError):
    """The configuration document is unreadable or violates the schema."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ManifoldConfig(_Strict):
    kind: str
    n: int = 2
    params: dict[str, Any] = Field(default_factory=dict)

    @field_validator("kind")
    @classmethod
    def _known(cls, v):
        if v not in CATALOG:
            raise ValueError(f"unknown manifold kind {v!r}; catalog: {', '.join(CATALOG)}")
        return v


class DomainConfig(_Strict):
    kind: Literal["ball", "star", "rects"]
    r0: float | None = None
    center: Literal["x0", "x1"] = "x0"
    a: float = 0.0
    k: int = 3
    phase: float = 0.0
    rects: list[tuple[float, float, float, float]] | None = None

    @model_validator(mode="after")
    def _complete(self):
        if self.kind in ("ball", "star") and (self.r0 is None or not self.r0 > 0):
            raise ValueError(f"{self.kind} domain needs a positive r0")
        if self.kind == "star" and not 0 <= abs(self.a) < 1:
            raise ValueError("star amplitude a must satisfy |a| < 1")
        if self.kind == "rects" and not self.rects:
            raise ValueError("rects domain needs a nonempty rectangle list")
        return self


class SolverConfig(_Strict):
    N: int = Field(4096, ge=64)  # radial grid cells
    mesh: int = Field(512, ge=16)  # grid nodes per direction
    cg_tol: float = Field(1e-9, gt=0, le=1e-4)
    levels: int = Field(1024, ge=1)
    trials: int = Field(100, ge=1)

    @field_validator("cg_tol")
    @classmethod
    def _finite(cls, v):
        if not math.isfinite(v):
            raise ValueError("tolerance must be finite")
        return v


class ExperimentConfig(_Strict):
    schema_: str = Field(alias="schema")
    experiment: Literal[EXPERIMENTS]  # type: ignore[valid-type]
    seed: int = Field(0, ge=0, lt=2**64)
    manifold: ManifoldConfig | None = None
    model: ManifoldConfig | None = None
    domain: DomainConfig | None = None
    solver: SolverConfig = Field(default_factory=SolverConfig)
    params: dict[str, Any] = Field(default_factory=dict)
    sweep: dict[str, list[Any]] = Field(default_factory=dict)
    output: str | None = None

    @field_validator("schema_")
    @classmethod
    def _version(cls, v):
        if v != SCHEMA:
            raise ValueError(f"unsupported schema {v!r}; expected {SCHEMA!r}")
        return v

    @field_validator("sweep")
    @classmethod
    def _nonempty(cls, v):
        for key, values in v.items():
            if not values:
                raise ValueError(f"sweep list {key!r} is empty")
        return v

    @model_validator(mode="after")
    def _requirements(self):
        needs_manifold = {"ball-rigidity", "fem-solve", "symmetrize", "compare"}
        if self.experiment in needs_manifold and self.manifold is None:
            raise ValueError(f"{self.experiment} needs a manifold")
        if self.experiment in {"fem-solve", "symmetrize", "compare"} and self.domain is None:
            raise ValueError(f"{self.experiment} needs a domain")
        if self.experiment == "verify":
            select = self.params.get("select", list(SUITES))
            if not select:
                raise ValueError("verify needs a nonempty selection")
            bad = set(select) - set(SUITES)
            if bad:
                raise ValueError(f"unknown suites {sorted(bad)}; choose from {SUITES}")
        for key, value in self.params.items():
            if "tol" in key and not (isinstance(value, (int, float)) and value > 0):
                raise ValueError(f"tolerance {key} must be positive")
        return self

    def canonical(self) -> dict:
        return self.model_dump(mode="json", by_alias=True)

    def digest(self) -> str:
        """First 16 hex digits of the SHA-256 of the canonical JSON form."""
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


DEFAULTS: dict[str, dict] = {
    "ball-rigidity": {"manifold": {"kind": "euclidean"}, "sweep": {"r0": [1.0]}},
    "fem-solve": {"manifold": {"kind": "euclidean"}, "domain": {"kind": "ball", "r0": 1.0}},
    "symmetrize": {"manifold": {"kind": "euclidean"}, "domain": {"kind": "star", "r0": 1.0, "a": 0.3, "k": 3}},
    "compare": {"manifold": {"kind": "euclidean"}, "domain": {"kind": "star", "r0": 1.0, "a": 0.3, "k": 3}},
    "rkd": {"sweep": {"K": [1.0], "D": [math.pi], "n": [2]}},
    "perelman": {"sweep": {"eps": [math.pi / 2], "n": [2]}},
    "cheeger-family": {"params": {"n": 2, "delta": 1.0, "beta": 0.3}, "sweep": {"epsilon": [0.5, 0.2, 0.1, 0.05]}},
    "verify": {"params": {"select": list(SUITES)}},
}


def default_document(experiment: str) -> dict:
    return {"schema": SCHEMA, "experiment": experiment, **json.loads(json.dumps(DEFAULTS[experiment]))}


def apply_override(doc: dict, assignment: str) -> None:
    """Apply ``dotted.key=value``; the value is parsed as JSON when possible."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not of the form key=value")
    key, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = doc
    parts = key.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot set {key}: {part} is not an object")
    node[parts[-1]] = value


def parse_config(doc: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(doc)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
