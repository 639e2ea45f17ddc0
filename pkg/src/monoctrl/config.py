"""Run configuration: flat INI-style files with sections.

An empty file (or missing sections) reproduces the default setup of the
named problem; every parameter shown in configs/*.ini is optional.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .gradient import LineSearchConfig
from .monotonic import MonotonicConfig
from .problems import PARAM_TYPES, PROBLEM_NAMES

# theta seeds matching each problem's reference setup
DEFAULT_THETA = {"morse": 1e-2, "co": 1e3, "mfg": 1.0, "twolevel": 1.0}

SOLVERS = ("monotonic", "gradient", "both")


@dataclass
class RunConfig:
    problem: str = "twolevel"
    solver: str = "monotonic"
    iterations: int = 100
    output_dir: str = "out"
    seed: int = 0
    report_both_costs: bool = False
    space_points: int | None = None
    time_steps: int | None = None
    horizon: float | None = None
    monotonic: MonotonicConfig = field(default_factory=MonotonicConfig)
    linesearch: LineSearchConfig = field(default_factory=LineSearchConfig)
    problem_overrides: dict = field(default_factory=dict)


def _coerce(raw: str):
    text = raw.strip()
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _section(parser, name) -> dict:
    if not parser.has_section(name):
        return {}
    return {key: _coerce(value) for key, value in parser.items(name)}


def _build_dataclass(cls, values: dict, label: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(values) - names
    if unknown:
        raise ConfigError(f"unknown {label} keys: {sorted(unknown)}")
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {label} settings: {exc}") from exc


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc

    run = _section(parser, "run")
    grid = _section(parser, "grid")
    cfg = RunConfig()
    for key in ("problem", "solver", "output_dir"):
        if key in run:
            setattr(cfg, key, str(run.pop(key)))
    for key in ("iterations", "seed", "report_both_costs"):
        if key in run:
            setattr(cfg, key, run.pop(key))
    if run:
        raise ConfigError(f"unknown [run] keys: {sorted(run)}")

    if cfg.problem not in PROBLEM_NAMES:
        raise ConfigError(f"unknown problem {cfg.problem!r}; expected one of {PROBLEM_NAMES}")
    if cfg.solver not in SOLVERS:
        raise ConfigError(f"unknown solver {cfg.solver!r}; expected one of {SOLVERS}")
    if cfg.iterations <= 0:
        raise ConfigError("iterations must be positive")

    for key in ("space_points", "time_steps"):
        if key in grid:
            setattr(cfg, key, int(grid.pop(key)))
    if "horizon" in grid:
        cfg.horizon = float(grid.pop("horizon"))
    if grid:
        raise ConfigError(f"unknown [grid] keys: {sorted(grid)}")

    mono_values = _section(parser, "monotonic")
    mono_values.setdefault("theta_init", DEFAULT_THETA[cfg.problem])
    mono_values.setdefault("outer_max", cfg.iterations)
    cfg.monotonic = _build_dataclass(MonotonicConfig, mono_values, "[monotonic]")
    cfg.monotonic.outer_max = min(cfg.monotonic.outer_max, cfg.iterations)

    ls_values = _section(parser, "linesearch")
    ls_values.setdefault("max_iterations", cfg.iterations)
    cfg.linesearch = _build_dataclass(LineSearchConfig, ls_values, "[linesearch]")
    cfg.linesearch.max_iterations = min(cfg.linesearch.max_iterations, cfg.iterations)

    overrides = _section(parser, "problem")
    param_type = PARAM_TYPES[cfg.problem]
    if overrides:
        if param_type is None:
            allowed = {"penalty"}
        else:
            allowed = {f.name for f in dataclasses.fields(param_type)} - {"horizon"}
        unknown = set(overrides) - allowed
        if unknown:
            raise ConfigError(f"unknown [problem] keys for {cfg.problem}: {sorted(unknown)}")
    cfg.problem_overrides = overrides
    return cfg
