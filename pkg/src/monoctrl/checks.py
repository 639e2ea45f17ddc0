"""Randomized invariant checks shared by the CLI selftest and the test suite.

Each check returns a CheckResult; run_suite executes the whole battery on a
set of problems at reduced sizes.  The checks are deliberately independent
of the solver internals: they evaluate both sides of each identity from the
public contract only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ControlProblem,
    ControlTrajectory,
    SchemeTag,
    cost,
    costate_pairing,
    increment_bound_check,
    increment_factor_quadrature,
    interval_adjoints,
    interval_states,
)
from .errors import ThetaTooSmallError
from .monotonic import solve_implicit_update
from .propagators import propagate_adjoint, propagate_forward

__all__ = ["CheckResult", "run_suite", "default_check_problems"]


@dataclass
class CheckResult:
    problem: str
    name: str
    passed: bool
    detail: str


def _random_trajectory(problem: ControlProblem, rng, scale: float = 1.0) -> ControlTrajectory:
    vals = np.stack(
        [scale * np.asarray(problem.sample_control(rng)) for _ in range(problem.grid.step_count + 1)]
    )
    return ControlTrajectory(problem.grid, vals.reshape((problem.grid.step_count + 1,) + problem.control_shape))


def check_factorization(problem: ControlProblem, rng, samples: int = 100,
                        tol: float = 1e-10) -> CheckResult:
    """Pairing identity of the increment factor on random tuples.

    Both the problem's factor and the generic quadrature factor must pair
    with the control difference to the exact pairing increment.
    """
    worst = 0.0
    horizon = problem.grid.horizon
    for _ in range(samples):
        t = rng.uniform(0.0, horizon)
        v_old = problem.sample_control(rng)
        v_new = problem.sample_control(rng)
        x = problem.sample_state(rng)
        y = problem.sample_costate(rng)
        p_new = costate_pairing(problem, t, v_new, x, y)
        p_old = costate_pairing(problem, t, v_old, x, y)
        scale = tol * (1.0 + abs(p_new) + abs(p_old))
        diff = np.asarray(v_new) - np.asarray(v_old)
        for factor in (
            problem.increment_factor(t, v_new, v_old, x, y),
            increment_factor_quadrature(problem, t, v_new, v_old, x, y),
        ):
            err = abs(problem.control_dot(factor, diff, state=x) - (p_new - p_old)) / scale
            worst = max(worst, err)
    return CheckResult(problem.name, "factorization-identity", worst <= 1.0,
                       f"worst scaled error {worst:.3e}")


def check_gradient_direction(problem: ControlProblem, rng, samples: int = 20,
                             eps: float = 1e-6, tol: float = 1e-6) -> CheckResult:
    """Degenerate increment factor vs. central differences of the pairing."""
    worst = 0.0
    horizon = problem.grid.horizon
    for _ in range(samples):
        t = rng.uniform(0.0, horizon)
        v = problem.sample_control(rng)
        x = problem.sample_state(rng)
        y = problem.sample_costate(rng)
        d = problem.sample_control(rng)
        g = problem.increment_factor(t, v, v, x, y)
        predicted = problem.control_dot(g, d, state=x)
        plus = costate_pairing(problem, t, np.asarray(v) + eps * np.asarray(d), x, y)
        minus = costate_pairing(problem, t, np.asarray(v) - eps * np.asarray(d), x, y)
        fd = (plus - minus) / (2.0 * eps)
        worst = max(worst, abs(fd - predicted) / (1.0 + abs(fd)))
    return CheckResult(problem.name, "gradient-direction", worst <= tol,
                       f"worst relative error {worst:.3e}")


def check_concavity(problem: ControlProblem, rng, samples: int = 50,
                    tol: float = 1e-10) -> CheckResult:
    """Terminal and running costs lie below their tangents in the state."""
    worst = -np.inf
    horizon = problem.grid.horizon
    for _ in range(samples):
        x = problem.sample_state(rng)
        x_new = problem.sample_state(rng)
        gap = problem.terminal_cost(x_new) - problem.terminal_cost(x) - problem.state_inner(
            problem.grad_X_terminal_cost(x), x_new - x
        )
        worst = max(worst, gap / (1.0 + abs(problem.terminal_cost(x_new)) + abs(problem.terminal_cost(x))))
        t = rng.uniform(0.0, horizon)
        v = problem.sample_control(rng)
        f_new, f_old = problem.running_cost(t, v, x_new), problem.running_cost(t, v, x)
        grad = problem.grad_X_running_cost(t, v, x)
        lin = 0.0 if grad is None else problem.state_inner(grad, x_new - x)
        worst = max(worst, (f_new - f_old - lin) / (1.0 + abs(f_new) + abs(f_old)))
    return CheckResult(problem.name, "state-concavity", worst <= tol,
                       f"worst scaled tangent violation {worst:.3e}")


def check_increment_bound(problem: ControlProblem, rng, pairs: int = 5,
                          tol: float = 1e-8) -> CheckResult:
    """Cost change bounded by the increment-density quadrature."""
    worst = -np.inf
    for _ in range(pairs):
        v = _random_trajectory(problem, rng, scale=0.5)
        v_new = v.with_values(v.values + 0.3 * (_random_trajectory(problem, rng).values))
        lhs, rhs = increment_bound_check(problem, v, v_new)
        worst = max(worst, (lhs - rhs) / (1.0 + abs(lhs)))
    return CheckResult(problem.name, "increment-bound", worst <= tol,
                       f"worst scaled excess {worst:.3e}")


def check_adjoint_gradient(problem: ControlProblem, rng, directions: int = 5,
                           eps: float = 1e-5, tol: float = 1e-5) -> CheckResult:
    """Directional finite differences of the cost vs. the adjoint gradient."""
    v = _random_trajectory(problem, rng, scale=0.3)
    x = propagate_forward(problem, v)
    y = propagate_adjoint(problem, v, x)
    x_int = interval_states(problem, x)
    y_int = interval_adjoints(problem, y)
    mids = v.grid.midpoints()
    dt = v.grid.dt
    worst = 0.0
    for _ in range(directions):
        d = _random_trajectory(problem, rng)
        predicted = 0.0
        for n in range(v.grid.step_count):
            g = problem.increment_factor(mids[n], v.values[n], v.values[n], x_int[n], y_int[n])
            predicted += problem.control_dot(g, d.values[n], state=x_int[n])
        predicted *= dt
        v_plus = v.with_values(v.values + eps * d.values)
        v_minus = v.with_values(v.values - eps * d.values)
        j_plus = cost(problem, v_plus, propagate_forward(problem, v_plus))
        j_minus = cost(problem, v_minus, propagate_forward(problem, v_minus))
        fd = (j_plus - j_minus) / (2.0 * eps)
        worst = max(worst, abs(fd - predicted) / (abs(fd) + abs(predicted) + 1e-12))
    return CheckResult(problem.name, "adjoint-gradient", worst <= tol,
                       f"worst relative error {worst:.3e}")


def check_conservation(problem: ControlProblem, rng, tol: float = 1e-8) -> CheckResult:
    """Norm conservation (unitary schemes) or mass conservation (parabolic)."""
    v = _random_trajectory(problem, rng, scale=0.5)
    x = propagate_forward(problem, v)
    if problem.scheme is SchemeTag.IMPLICIT_EULER:
        masses = np.sum(np.real(x.states), axis=1) * problem.space_weight
        drift = float(np.max(np.abs(masses - masses[0])))
        label = "mass"
    else:
        norms = np.sqrt(np.sum(np.abs(x.states) ** 2, axis=1) * problem.space_weight)
        drift = float(np.max(np.abs(norms - norms[0])))
        label = "norm"
    return CheckResult(problem.name, f"{label}-conservation", drift <= tol,
                       f"max drift {drift:.3e}")


def check_update_solver(problem: ControlProblem, rng, samples: int = 100,
                        theta: float | None = None, tol: float = 1e-10) -> CheckResult:
    """Closed-form update vs. the generic fixed point, or the residual of the
    generic fixed point where no closed form exists."""
    horizon = problem.grid.horizon
    worst = 0.0
    if problem.closed_form_update is not None:
        theta = 10.0 if theta is None else theta
        for _ in range(samples):
            t = rng.uniform(0.0, horizon)
            v = problem.sample_control(rng)
            x = problem.sample_state(rng)
            y = problem.sample_costate(rng)
            closed = problem.closed_form_update(t, v, x, y, theta)
            try:
                generic = solve_implicit_update(
                    problem, t, v, x, y, theta,
                    picard_tol=1e-13, picard_max=500, use_closed_form=False,
                )
            except ThetaTooSmallError:
                return CheckResult(problem.name, "update-solver", False,
                                   f"fixed point failed to contract at theta={theta}")
            worst = max(worst, problem.control_norm(
                np.asarray(generic) - np.asarray(closed), state=x))
        return CheckResult(problem.name, "update-solver", worst <= tol,
                           f"worst closed-form gap {worst:.3e} at theta={theta}")
    theta = 1e3 if theta is None else theta
    for _ in range(samples):
        t = rng.uniform(0.0, horizon)
        v = problem.sample_control(rng)
        x = problem.sample_state(rng)
        y = problem.sample_costate(rng)
        v_new = solve_implicit_update(problem, t, v, x, y, theta,
                                      picard_tol=1e-13, picard_max=500)
        residual = problem.increment_factor(t, v_new, v, x, y) + theta * (
            np.asarray(v_new) - np.asarray(v))
        worst = max(worst, problem.control_norm(residual, state=x))
    return CheckResult(problem.name, "update-solver", worst <= 1e-8,
                       f"worst fixed-point residual {worst:.3e} at theta={theta}")


ALL_CHECKS = (
    check_factorization,
    check_gradient_direction,
    check_concavity,
    check_increment_bound,
    check_adjoint_gradient,
    check_conservation,
    check_update_solver,
)


def default_check_problems():
    """Reduced-size instances of every shipped problem."""
    from .problems import CrowdParams, MorseParams, OrientationParams
    from .problems import build_co, build_mfg, build_morse, build_twolevel

    return [
        build_twolevel(steps=32),
        build_morse(MorseParams(), grid_points=128, steps=128, horizon=1000.0),
        build_mfg(CrowdParams(), grid_points=32, steps=16),
        build_co(OrientationParams(), steps=128),
    ]


def run_suite(problems=None, seed: int = 0) -> list[CheckResult]:
    problems = default_check_problems() if problems is None else problems
    results = []
    for problem in problems:
        for check in ALL_CHECKS:
            rng = np.random.default_rng(seed)
            results.append(check(problem, rng))
    return results
