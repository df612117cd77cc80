"""Run configuration: a flat ``section.key = value`` file validated by pydantic.

Example::

    # s-wave barrier, eta fixed along a momentum sweep
    potential.kind = barrier
    potential.R = 1.0
    potential.eta = 0.05
    scatter.methods = unitary1, unitary2, exact
    sweep.axis = p
    sweep.start = 1
    sweep.stop = 10
    sweep.count = 19
    output.format = csv

Every key remembers the line it came from so validation errors point at the
offending line.
"""

from __future__ import annotations

import hashlib
import json
from collections.abc import Sequence
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from config import settings
from scattering.core.errors import ScatteringError
from scattering.potential import PotentialModel, make_potential

METHODS = ("unitary1", "unitary2", "green1", "green2", "exact", "numerov", "wronskian")
Method = Literal["unitary1", "unitary2", "green1", "green2", "exact", "numerov", "wronskian"]

_NULL_VALUES = {"", "none", "null"}


class ConfigError(ScatteringError, ValueError):
    """Raised for malformed or invalid run configuration, with line locations."""


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class PotentialConfig(_Section):
    kind: Literal["well", "barrier", "gaussian"] = "well"
    R: float = Field(1.0, gt=0)
    coupling: float = Field(0.1, alias="lambda")
    width: float = Field(1.0, gt=0)
    eta: float | None = None


class ScatterConfig(_Section):
    m: float = Field(1.0, gt=0)
    l: int = Field(0, ge=0, le=10)
    p: float = Field(1.0, gt=0)
    methods: list[Method] = Field(default_factory=lambda: ["unitary1", "unitary2", "exact"], min_length=1)

    @field_validator("methods", mode="before")
    @classmethod
    def split_methods(cls, value):
        if isinstance(value, str):
            value = [item.strip() for item in value.split(",") if item.strip()]
        return list(dict.fromkeys(value))


class SweepConfig(_Section):
    axis: Literal["none", "p", "lambda"] = "none"
    start: float | None = None
    stop: float | None = None
    count: int = Field(1, ge=1)
    spacing: Literal["linear", "log"] = "linear"

    @model_validator(mode="after")
    def check_range(self) -> SweepConfig:
        if self.axis == "none":
            return self
        if self.start is None or self.stop is None:
            raise ValueError(f"sweep over {self.axis} needs sweep.start and sweep.stop")
        if self.axis == "p" and not (self.start > 0 and self.stop > 0):
            raise ValueError("momentum sweep range must be positive")
        if self.spacing == "log" and not (self.start > 0 and self.stop > 0):
            raise ValueError("log spacing needs a positive range")
        return self

    def values(self) -> np.ndarray:
        if self.count == 1:
            return np.array([self.start], dtype=float)
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)


class QuadConfig(_Section):
    tol_abs: float = Field(default_factory=lambda: settings.tol_abs, gt=0)
    pv_window: float = Field(default_factory=lambda: settings.pv_window, gt=0, le=1)
    k_cut_over_p: float | None = Field(None, gt=1)
    k_cut_margin: float = Field(default_factory=lambda: settings.k_cut_margin, gt=0)
    grid_nodes: int = Field(default_factory=lambda: settings.grid_nodes, ge=4)
    tail_max_panels: int = Field(default_factory=lambda: settings.tail_max_panels, ge=16)


class OutputConfig(_Section):
    format: Literal["csv", "json"] = "csv"
    path: str | None = None
    degrees: bool = False
    r_points: int = Field(401, ge=3)
    r_max: float | None = Field(None, gt=0)


class ValidateConfig(_Section):
    tolerance_scale: float = Field(1.0, gt=0)
    corrupt_kernel_symmetry: bool = False


class RunConfig(_Section):
    """Everything one ``phaseshift`` invocation needs."""

    potential: PotentialConfig = Field(default_factory=PotentialConfig)
    scatter: ScatterConfig = Field(default_factory=ScatterConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    quad: QuadConfig = Field(default_factory=QuadConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    validate_: ValidateConfig = Field(default_factory=ValidateConfig, alias="validate")

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form of the parsed configuration."""
        canonical = json.dumps(self.model_dump(mode="json", by_alias=True), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def coupling_at(self, p: float) -> float:
        """Coupling at momentum p; a configured eta pins lambda = eta p / m."""
        if self.potential.eta is not None:
            return self.potential.eta * p / self.scatter.m
        return self.potential.coupling

    def sweep_points(self) -> list[tuple[float, float]]:
        """(p, coupling) for every row, in sweep order."""
        if self.sweep.axis == "p":
            return [(float(p), self.coupling_at(float(p))) for p in self.sweep.values()]
        if self.sweep.axis == "lambda":
            return [(self.scatter.p, float(c)) for c in self.sweep.values()]
        return [(self.scatter.p, self.coupling_at(self.scatter.p))]

    def build_model(self, coupling: float) -> PotentialModel:
        return make_potential(self.potential.kind, self.potential.R, coupling, self.potential.width)


SECTIONS = {
    "potential": PotentialConfig,
    "scatter": ScatterConfig,
    "sweep": SweepConfig,
    "quad": QuadConfig,
    "output": OutputConfig,
    "validate": ValidateConfig,
}


def _parse_assignment(line: str, where: str) -> tuple[str, str, str | None]:
    if "=" not in line:
        raise ConfigError(f"{where}: expected 'section.key = value', got {line!r}")
    key, value = (part.strip() for part in line.split("=", 1))
    if key == "potential":
        key = "potential.kind"
    section, dot, name = key.partition(".")
    if not dot or not name:
        raise ConfigError(f"{where}: key {key!r} must be namespaced, e.g. 'potential.R'")
    if section not in SECTIONS:
        raise ConfigError(f"{where}: unknown section {section!r}; expected one of {sorted(SECTIONS)}")
    return section, name, None if value.lower() in _NULL_VALUES else value


def parse_config_text(
    text: str,
    source: str = "<config>",
    data: dict | None = None,
    locations: dict | None = None,
) -> tuple[dict, dict]:
    """Parse flat key=value text into section dicts plus a key -> 'source:line' map."""
    data = {} if data is None else data
    locations = {} if locations is None else locations
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        section, name, value = _parse_assignment(line, where)
        data.setdefault(section, {})[name] = value
        locations[(section, name)] = where
    return data, locations


def _locate(loc: tuple, locations: dict) -> str:
    if len(loc) >= 2 and (loc[0], loc[1]) in locations:
        return locations[(loc[0], loc[1])]
    for (section, _), where in locations.items():
        if loc and section == loc[0]:
            return where
    return "<defaults>"


def build_run_config(data: dict, locations: dict) -> RunConfig:
    """Validate parsed sections, mapping pydantic errors back to their lines."""
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        messages = []
        for error in exc.errors():
            loc = tuple(str(part) for part in error["loc"])
            messages.append(f"{_locate(loc, locations)}: {'.'.join(loc)}: {error['msg']}")
        raise ConfigError("\n".join(messages)) from exc


def load_run_config(path: str | Path | None = None, overrides: Sequence[str] = ()) -> RunConfig:
    """Read a config file (optional) and apply ``--set key=value`` overrides in order.

    Raises:
        ConfigError: On unreadable files, malformed lines or invalid values.
    """
    data: dict = {}
    locations: dict = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        parse_config_text(text, str(path), data, locations)
    for index, assignment in enumerate(overrides, start=1):
        parse_config_text(assignment, f"--set[{index}]", data, locations)
    return build_run_config(data, locations)
