"""Monotonic outer loop built on the implicit proximal-style update.

Each iteration solves, at every control interval, the implicit relation

    increment_factor(v_new, v_old; t, X_new, Y_old) = -theta * (v_new - v_old)

coupled to the forward dynamics of v_new.  Because the pairing of the
increment factor with the control change then equals -theta |dv|^2 <= 0 at
every interval, the cost decrease follows from the increment bound with no
line search.  theta grows (never shrinks) whenever the fixed-point solves
stop contracting or the quantified descent check fails.

Two couplings to the forward dynamics are provided: the reference
whole-trajectory fixed point, and a faster single-sweep variant that
resolves each interval against the partially built new trajectory.  Both
solve the same discrete system and agree to solver tolerance wherever both
contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    ControlProblem,
    ControlTrajectory,
    SchemeTag,
    StateTrajectory,
    control_sq_norm,
    cost,
    interval_adjoints,
    interval_states,
)
from .errors import ThetaTooSmallError
from .propagators import propagate_adjoint, propagate_forward, step_state

__all__ = [
    "MonotonicConfig",
    "IterationRow",
    "RunRecord",
    "solve_implicit_update",
    "monotonic_step",
    "run",
    "criticality_residual",
]

THETA_OVERFLOW_FACTOR = 1e12


@dataclass
class MonotonicConfig:
    theta_init: float = 1.0
    theta_growth: float = 2.0
    picard_tol: float = 1e-10
    picard_max: int = 200
    outer_max: int = 100
    stop_tol: float = 1e-8
    monotonicity_slack: float = 1e-9
    inner_solver: str = "trajectory"  # "trajectory" (reference) or "sweep"

    def __post_init__(self):
        if self.theta_init <= 0:
            raise ValueError("theta_init must be positive")
        if self.theta_growth <= 1:
            raise ValueError("theta_growth must exceed 1")
        for name in ("picard_tol", "stop_tol", "monotonicity_slack"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.inner_solver not in ("trajectory", "sweep"):
            raise ValueError("inner_solver must be 'trajectory' or 'sweep'")


@dataclass
class IterationRow:
    iteration: int
    cost: float
    update_norm: float
    theta: float | None
    picard_iterations: int | None
    descent_residual: float | None
    cost_evaluations: int | None = None


@dataclass
class RunRecord:
    """Per-iteration log of an optimization run."""

    solver: str
    rows: list[IterationRow] = field(default_factory=list)
    status: str = "iteration-cap"   # converged | iteration-cap | theta-overflow | bracketing-failure
    final_cost: float = np.nan
    final_control: ControlTrajectory | None = None
    final_theta: float | None = None

    def costs(self) -> np.ndarray:
        return np.array([row.cost for row in self.rows])


def solve_implicit_update(
    problem: ControlProblem,
    t: float,
    v,
    x: np.ndarray,
    y: np.ndarray,
    theta: float,
    picard_tol: float = 1e-10,
    picard_max: int = 200,
    use_closed_form: bool = True,
):
    """Solve increment_factor(v', v; t, x, y) = -theta (v' - v) for v'.

    Uses the problem's closed form when it has one, otherwise the fixed
    point h -> -increment_factor(v + h, v) / theta from h = 0.  Raises
    ThetaTooSmallError when the iteration stops contracting (five
    consecutive growing steps) or hits picard_max.  `use_closed_form=False`
    forces the fixed point, which the agreement checks rely on.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    if use_closed_form and problem.closed_form_update is not None:
        return problem.closed_form_update(t, v, x, y, theta)
    h = np.zeros(problem.control_shape) if problem.control_shape else 0.0
    prev_step = np.inf
    growing = 0
    for _ in range(picard_max):
        h_new = -np.asarray(problem.increment_factor(t, v + h, v, x, y)) / theta
        if problem.control_shape == ():
            h_new = float(h_new)
        step = problem.control_norm(h_new - h, state=x)
        h = h_new
        if step <= picard_tol:
            return v + h
        if step > prev_step:
            growing += 1
            if growing >= 5:
                raise ThetaTooSmallError(
                    f"pointwise update diverging at t={t:.6g} (theta={theta:.3g})"
                )
        else:
            growing = 0
        prev_step = step
    raise ThetaTooSmallError(f"pointwise update not converged at t={t:.6g}")


def _pair_state(problem: ControlProblem, x_left: np.ndarray, x_right: np.ndarray) -> np.ndarray:
    if problem.scheme is SchemeTag.IMPLICIT_EULER:
        return x_right
    return 0.5 * (x_left + x_right)


def _sweep_step(problem, v_k, y_int, theta, cfg):
    """Single forward sweep resolving each interval against the new state."""
    grid = v_k.grid
    dt = grid.dt
    mids = grid.midpoints()
    n_steps = grid.step_count
    new_vals = np.array(v_k.values)
    states = np.empty(
        (n_steps + 1, problem.state_dim), dtype=complex if problem.complex_state else float
    )
    states[0] = problem.initial_state()
    x = states[0]
    for n in range(n_steps):
        w = np.array(v_k.values[n]) if problem.control_shape else float(v_k.values[n])
        scale = 1.0 + problem.control_norm(w)
        x_next = None
        prev_step = np.inf
        growing = 0
        for _ in range(cfg.picard_max):
            x_next = step_state(problem, mids[n], w, x, dt)
            w_new = solve_implicit_update(
                problem, mids[n], v_k.values[n], _pair_state(problem, x, x_next),
                y_int[n], theta, cfg.picard_tol, cfg.picard_max,
            )
            step = problem.control_norm(w_new - w, state=_pair_state(problem, x, x_next))
            w = w_new
            if step <= cfg.picard_tol * scale:
                break
            if step > prev_step:
                growing += 1
                if growing >= 5:
                    raise ThetaTooSmallError(f"sweep diverging at interval {n}")
            else:
                growing = 0
            prev_step = step
        else:
            raise ThetaTooSmallError(f"sweep not converged at interval {n}")
        x_next = step_state(problem, mids[n], w, x, dt)
        new_vals[n] = w
        states[n + 1] = x_next
        x = x_next
    new_vals[n_steps] = new_vals[n_steps - 1]
    v_new = v_k.with_values(new_vals)
    return v_new, StateTrajectory(grid, states), 1


def monotonic_step(
    problem: ControlProblem,
    v_k: ControlTrajectory,
    x_k: StateTrajectory,
    y_int: np.ndarray,
    theta: float,
    cfg: MonotonicConfig,
) -> tuple[ControlTrajectory, StateTrajectory, int]:
    """One implicit update of the whole trajectory at fixed theta.

    y_int holds the per-interval costate of the current iterate.  Returns
    the new control, its forward trajectory (the pair satisfies the coupled
    update system to tolerance), and the number of fixed-point passes.
    """
    if cfg.inner_solver == "sweep":
        return _sweep_step(problem, v_k, y_int, theta, cfg)

    grid = v_k.grid
    mids = grid.midpoints()
    n_steps = grid.step_count
    ref = 1.0 + np.sqrt(
        control_sq_norm(problem, v_k.interval_values(), grid, interval_states(problem, x_k))
    )
    u_vals = np.array(v_k.values)
    x_u = x_k
    prev_diff = np.inf
    growing = 0
    for sweep in range(1, cfg.picard_max + 1):
        x_int = interval_states(problem, x_u)
        new_vals = np.empty_like(u_vals)
        for n in range(n_steps):
            new_vals[n] = solve_implicit_update(
                problem, mids[n], v_k.values[n], x_int[n], y_int[n],
                theta, cfg.picard_tol, cfg.picard_max,
            )
        new_vals[n_steps] = new_vals[n_steps - 1]
        u_new = v_k.with_values(new_vals)
        x_new = propagate_forward(problem, u_new)
        diff = np.sqrt(
            control_sq_norm(
                problem, new_vals[:-1] - u_vals[:-1], grid, interval_states(problem, x_new)
            )
        )
        u_vals, x_u = new_vals, x_new
        if diff <= cfg.picard_tol * ref:
            return u_new, x_new, sweep
        if diff > prev_diff:
            growing += 1
            if growing >= 5:
                raise ThetaTooSmallError(f"trajectory fixed point diverging (theta={theta:.3g})")
        else:
            growing = 0
        prev_diff = diff
    raise ThetaTooSmallError("trajectory fixed point not converged")


def run(problem: ControlProblem, v0: ControlTrajectory, cfg: MonotonicConfig) -> RunRecord:
    """Monotonic optimization from v0.

    After every step the integrated update pairing and the quantified
    descent bound are checked; a violation (a discretization or fixed-point
    artifact) grows theta and recomputes the step.  Stops when the update
    norm falls below stop_tol, the iteration cap is reached, or theta
    overflows (reported in the record, not raised).
    """
    record = RunRecord(solver="monotonic")
    theta = cfg.theta_init
    grid = v0.grid
    dt = grid.dt
    mids = grid.midpoints()
    v = v0
    x = propagate_forward(problem, v)
    j = cost(problem, v, x)
    for k in range(cfg.outer_max):
        y = propagate_adjoint(problem, v, x)
        y_int = interval_adjoints(problem, y)
        accepted = None
        while accepted is None:
            if theta > THETA_OVERFLOW_FACTOR * cfg.theta_init:
                record.status = "theta-overflow"
                record.final_cost = j
                record.final_control = v
                record.final_theta = theta
                return record
            try:
                v_new, x_new, sweeps = monotonic_step(problem, v, x, y_int, theta, cfg)
            except ThetaTooSmallError:
                theta *= cfg.theta_growth
                continue
            j_new = cost(problem, v_new, x_new)
            x_int_new = interval_states(problem, x_new)
            dv = v_new.interval_values() - v.interval_values()
            dv_sq = control_sq_norm(problem, dv, grid, x_int_new)
            slack = cfg.monotonicity_slack * (1.0 + abs(j))
            pairing_total = 0.0
            for n in range(grid.step_count):
                delta = problem.increment_factor(
                    mids[n], v_new.values[n], v.values[n], x_int_new[n], y_int[n]
                )
                pairing_total += problem.control_dot(delta, dv[n], state=x_int_new[n])
            pairing_total *= dt
            if pairing_total <= slack and (j_new - j) <= -theta * dv_sq + slack:
                accepted = (v_new, x_new, j_new, dv_sq, sweeps)
            else:
                theta *= cfg.theta_growth
        v_new, x_new, j_new, dv_sq, sweeps = accepted
        update_norm = np.sqrt(dv_sq)
        record.rows.append(
            IterationRow(
                iteration=k,
                cost=j,
                update_norm=update_norm,
                theta=theta,
                picard_iterations=sweeps,
                descent_residual=(j_new - j) + theta * dv_sq,
            )
        )
        v, x, j = v_new, x_new, j_new
        if update_norm <= cfg.stop_tol:
            record.status = "converged"
            break
    record.final_cost = j
    record.final_control = v
    record.final_theta = theta
    return record


def criticality_residual(problem: ControlProblem, v: ControlTrajectory) -> float:
    """L2([0,T]) norm of the pointwise cost gradient along the trajectory of v.

    Zero exactly at critical points of the discrete cost.
    """
    x = propagate_forward(problem, v)
    y = propagate_adjoint(problem, v, x)
    x_int = interval_states(problem, x)
    y_int = interval_adjoints(problem, y)
    mids = v.grid.midpoints()
    total = 0.0
    for n in range(v.grid.step_count):
        g = problem.increment_factor(mids[n], v.values[n], v.values[n], x_int[n], y_int[n])
        total += problem.control_dot(g, g, state=x_int[n])
    return float(np.sqrt(total * v.grid.dt))
