"""Shipped problem definitions and a name registry for the CLI."""

from __future__ import annotations

import dataclasses

from .co import OrientationParams, OrientationProblem, build_co
from .mfg import CrowdParams, CrowdProblem, build_mfg
from .morse import MorseParams, MorseProblem, build_morse
from .twolevel import TwoLevelProblem, build_twolevel

__all__ = [
    "MorseParams", "MorseProblem", "build_morse",
    "CrowdParams", "CrowdProblem", "build_mfg",
    "OrientationParams", "OrientationProblem", "build_co",
    "TwoLevelProblem", "build_twolevel",
    "PROBLEM_NAMES", "PARAM_TYPES", "build_problem",
]

PROBLEM_NAMES = ("morse", "mfg", "co", "twolevel")

PARAM_TYPES = {
    "morse": MorseParams,
    "mfg": CrowdParams,
    "co": OrientationParams,
    "twolevel": None,
}


def build_problem(name: str, space_points: int | None = None, time_steps: int | None = None,
                  horizon: float | None = None, overrides: dict | None = None):
    """Build a shipped problem by name with optional parameter overrides."""
    overrides = dict(overrides or {})
    if name == "morse":
        params = dataclasses.replace(MorseParams(), **overrides)
        return build_morse(params, grid_points=space_points or 512,
                           steps=time_steps or 4000, horizon=horizon)
    if name == "mfg":
        params = dataclasses.replace(CrowdParams(), **overrides)
        if horizon is not None:
            params = dataclasses.replace(params, horizon=horizon)
        return build_mfg(params, grid_points=space_points or 64, steps=time_steps or 50)
    if name == "co":
        params = dataclasses.replace(OrientationParams(), **overrides)
        if horizon is not None:
            params = dataclasses.replace(params, horizon=horizon)
        return build_co(params, steps=time_steps or 2000)
    if name == "twolevel":
        kwargs = {}
        if horizon is not None:
            kwargs["horizon"] = horizon
        if "penalty" in overrides:
            kwargs["penalty"] = overrides.pop("penalty")
        if overrides:
            raise ValueError(f"unknown twolevel parameters: {sorted(overrides)}")
        return build_twolevel(steps=time_steps or 64, **kwargs)
    raise ValueError(f"unknown problem name: {name!r}")
