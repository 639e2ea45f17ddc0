"""Adjoint gradient descent with golden-section line search, the baseline
every monotonic run is compared against."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ControlProblem,
    ControlTrajectory,
    control_sq_norm,
    cost,
    interval_adjoints,
    interval_states,
)
from .errors import BracketError
from .monotonic import IterationRow, RunRecord
from .propagators import propagate_adjoint, propagate_forward

__all__ = [
    "LineSearchConfig",
    "compute_gradient",
    "golden_section_search",
    "run_gradient",
]

_INV_GOLDEN = 2.0 / (1.0 + np.sqrt(5.0))


@dataclass
class LineSearchConfig:
    bracket_growth: float = 2.0
    golden_tol: float = 0.3    # relative to the bracket width; ~3 refinement evals
    max_probes: int = 50
    initial_step: float | None = None  # None: auto-scale to 1 / |gradient|
    max_iterations: int = 100

    def __post_init__(self):
        if not (0.0 < self.golden_tol < 1.0):
            raise ValueError("golden_tol must lie in (0, 1)")
        if self.bracket_growth <= 1.0:
            raise ValueError("bracket_growth must exceed 1")


def _gradient_values(problem, v, x, y) -> np.ndarray:
    mids = v.grid.midpoints()
    x_int = interval_states(problem, x)
    y_int = interval_adjoints(problem, y)
    g = np.empty_like(np.asarray(v.values, dtype=float))
    for n in range(v.grid.step_count):
        g[n] = problem.increment_factor(mids[n], v.values[n], v.values[n], x_int[n], y_int[n])
    g[-1] = g[-2]
    return g


def compute_gradient(problem: ControlProblem, v: ControlTrajectory) -> ControlTrajectory:
    """Pointwise cost gradient along the trajectory of v.

    g(t_n) is the degenerate increment factor at v(t_n); its quadrature
    against a direction equals the directional derivative of the cost.
    """
    x = propagate_forward(problem, v)
    y = propagate_adjoint(problem, v, x)
    return v.with_values(_gradient_values(problem, v, x, y))


def golden_section_search(phi, bracket: tuple[float, float, float], tol: float = 0.25,
                          phi_values: tuple[float, float, float] | None = None):
    """Minimize phi on a bracket (a, b, c) with phi(b) < phi(a), phi(b) < phi(c).

    Golden-ratio reduction until the bracket width falls below tol times the
    initial width.  Returns (step, phi(step), evaluations).
    """
    a, b, c = bracket
    if not (a < b < c):
        raise BracketError(f"bracket not ordered: {bracket}")
    if phi_values is None:
        fa, fb, fc = phi(a), phi(b), phi(c)
        evals = 3
    else:
        fa, fb, fc = phi_values
        evals = 0
    if not (fb < fa and fb < fc):
        raise BracketError("bracket does not contain a minimum")
    width0 = c - a
    shrink = 1.0 - _INV_GOLDEN  # 0.382..., keeps subintervals in golden ratio
    while (c - a) > tol * width0:
        if (b - a) > (c - b):
            probe = b - shrink * (b - a)
            fp = phi(probe)
            evals += 1
            if fp < fb:
                c, fc, b, fb = b, fb, probe, fp
            else:
                a, fa = probe, fp
        else:
            probe = b + shrink * (c - b)
            fp = phi(probe)
            evals += 1
            if fp < fb:
                a, fa, b, fb = b, fb, probe, fp
            else:
                c, fc = probe, fp
    return b, fb, evals


def _bracket_minimum(phi, f0: float, start: float, growth: float, max_probes: int):
    """Expand or shrink from `start` until (a, b, c) brackets a minimum of phi.

    phi(0) = f0 is reused, never re-evaluated.  Returns the bracket, its phi
    values, and the evaluation count.  A numerically flat ray (descent below
    round-off scale) raises BracketError with flat=True so the caller can
    report convergence instead of failure.
    """
    flat_scale = 1e-13 * (1.0 + abs(f0))
    s = start
    fs = phi(s)
    evals = 1
    if fs < f0:
        left, f_left = 0.0, f0
        while evals < max_probes:
            s_next = s * growth
            f_next = phi(s_next)
            evals += 1
            if f_next >= fs:
                return (left, s, s_next), (f_left, fs, f_next), evals
            left, f_left = s, fs
            s, fs = s_next, f_next
        raise BracketError("no bracket: cost kept decreasing along the ray")
    flat = 0
    while evals < max_probes:
        if abs(fs - f0) <= flat_scale:
            flat += 1
            if flat >= 3:
                err = BracketError("flat ray: no resolvable descent")
                err.flat = True
                raise err
        s_half = s / growth
        f_half = phi(s_half)
        evals += 1
        if f_half < f0:
            return (0.0, s_half, s), (f0, f_half, fs), evals
        s, fs = s_half, f_half
    raise BracketError("no bracket: no descent found along the ray")


def run_gradient(problem: ControlProblem, v0: ControlTrajectory,
                 cfg: LineSearchConfig) -> RunRecord:
    """Optimal-step gradient descent: v <- v - step * g with the step chosen
    by bracketing plus golden-section refinement of the one-dimensional cost.

    Logs the monotonic record schema with the descent-residual column empty;
    per-row cost_evaluations counts the line-search cost evaluations.
    """
    record = RunRecord(solver="gradient")
    grid = v0.grid
    v = v0
    x = propagate_forward(problem, v)
    j = cost(problem, v, x)
    step_prev: float | None = None
    for k in range(cfg.max_iterations):
        y = propagate_adjoint(problem, v, x)
        g = _gradient_values(problem, v, x, y)
        g_sq = control_sq_norm(problem, g[:-1], grid, interval_states(problem, x))
        g_norm = np.sqrt(g_sq)
        if not g_norm > 1e-300:
            record.rows.append(IterationRow(k, j, 0.0, None, None, None, 0))
            record.status = "converged"
            break

        cache: dict[float, tuple[float, object]] = {}

        def phi(s: float) -> float:
            if s not in cache:
                trial = v.with_values(_updated_values(v.values, g, s))
                xs = propagate_forward(problem, trial)
                cache[s] = (cost(problem, trial, xs), (trial, xs))
            return cache[s][0]

        start = step_prev if step_prev else (cfg.initial_step or 1.0 / g_norm)
        try:
            bracket, bracket_f, evals = _bracket_minimum(
                phi, j, start, cfg.bracket_growth, cfg.max_probes
            )
            step, j_new, golden_evals = golden_section_search(
                phi, bracket, cfg.golden_tol, bracket_f
            )
            evals += golden_evals
        except BracketError as exc:
            record.rows.append(IterationRow(k, j, 0.0, None, None, None, len(cache)))
            record.status = "converged" if getattr(exc, "flat", False) else "bracketing-failure"
            break
        # best evaluated point wins; golden section already tracked its minimum
        best_step = min(cache, key=lambda s: cache[s][0])
        if cache[best_step][0] < j_new:
            step, j_new = best_step, cache[best_step][0]
        v_new, x_new = cache[step][1]
        record.rows.append(
            IterationRow(k, j, step * g_norm, None, None, None, evals)
        )
        v, x, j = v_new, x_new, j_new
        step_prev = step
    record.final_cost = j
    record.final_control = v
    return record


def _updated_values(values: np.ndarray, g: np.ndarray, step: float) -> np.ndarray:
    new_vals = values - step * g
    new_vals[-1] = new_vals[-2]
    return new_vals
