"""monoctrl: monotonic control-update schemes for bilinear and polynomial
optimal control problems with concave state costs, plus an adjoint gradient
baseline and ready-made example problems."""

__version__ = "0.1.0"

from .core import (
    AdjointTrajectory,
    ControlProblem,
    ControlTrajectory,
    SchemeTag,
    StateTrajectory,
    TimeGrid,
    cost,
    costate_pairing,
    increment_bound_check,
    increment_density,
    increment_factor_quadrature,
    interval_adjoints,
    interval_states,
)
from .gradient import LineSearchConfig, compute_gradient, golden_section_search, run_gradient
from .monotonic import (
    MonotonicConfig,
    RunRecord,
    criticality_residual,
    monotonic_step,
    solve_implicit_update,
)
from .monotonic import run as run_monotonic
from .problems import (
    CrowdParams,
    MorseParams,
    OrientationParams,
    build_co,
    build_mfg,
    build_morse,
    build_problem,
    build_twolevel,
)
from .propagators import propagate_adjoint, propagate_forward

__all__ = [
    "__version__",
    "TimeGrid",
    "SchemeTag",
    "ControlTrajectory",
    "StateTrajectory",
    "AdjointTrajectory",
    "ControlProblem",
    "cost",
    "costate_pairing",
    "increment_factor_quadrature",
    "increment_density",
    "increment_bound_check",
    "interval_states",
    "interval_adjoints",
    "propagate_forward",
    "propagate_adjoint",
    "MonotonicConfig",
    "RunRecord",
    "solve_implicit_update",
    "monotonic_step",
    "run_monotonic",
    "criticality_residual",
    "LineSearchConfig",
    "compute_gradient",
    "golden_section_search",
    "run_gradient",
    "MorseParams",
    "CrowdParams",
    "OrientationParams",
    "build_morse",
    "build_mfg",
    "build_co",
    "build_twolevel",
    "build_problem",
]
