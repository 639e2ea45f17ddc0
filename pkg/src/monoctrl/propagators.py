"""Forward state propagation and discrete-adjoint backward propagation.

Each scheme's backward pass is the exact transpose of its forward step map
(plus running-cost sources), not an independent discretization of the
continuous costate equation.  Together with the per-interval evaluation
rules in core.interval_states / core.interval_adjoints this makes the
gradient and descent identities hold to solver tolerance on every problem.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from . import kernels
from .core import (
    AdjointTrajectory,
    ControlProblem,
    ControlTrajectory,
    SchemeTag,
    StateTrajectory,
)
from .errors import PropagationError

__all__ = [
    "SchemeTag",
    "propagate_forward",
    "propagate_adjoint",
    "step_state",
]


def _dense_cn_step(h: np.ndarray, x: np.ndarray, tau: float) -> np.ndarray:
    n = h.shape[0]
    eye = np.eye(n)
    rhs = (eye - 1j * tau * h) @ x
    return np.linalg.solve(eye + 1j * tau * h, rhs)


def _implicit_step(problem: ControlProblem, t: float, v, x: np.ndarray, dt: float) -> np.ndarray:
    op = problem.assemble_operator(t, v)
    b = problem.eval_B(t, v)
    rhs = x if b is None else x + dt * b
    if isinstance(op, tuple):
        dl, d, du = op
        return kernels.solve_tridiag(dt * dl, 1.0 + dt * d, dt * du, rhs)
    n = op.shape[0]
    return np.linalg.solve(np.eye(n) + dt * op, rhs)


def _expm_step(problem: ControlProblem, t: float, v, x: np.ndarray, dt: float) -> np.ndarray:
    a, b = problem.dense_generator(t, v)
    e = expm(-dt * a)
    x_new = e @ x
    if b is not None:
        x_new = x_new + np.linalg.solve(a, (np.eye(a.shape[0]) - e) @ b)
    return x_new


def step_state(problem: ControlProblem, t: float, v, x: np.ndarray, dt: float) -> np.ndarray:
    """Advance one interval with the problem's scheme (control frozen at t)."""
    if problem.scheme is SchemeTag.CRANK_NICOLSON:
        structure = problem.cn_structure()
        if structure[0] == "dense":
            return _dense_cn_step(structure[1](t, v), x, 0.5 * dt)
        _, h_bands, m_bands = structure
        traj = kernels.cn_propagate_forward(
            h_bands[0], h_bands[1], h_bands[2],
            m_bands[0], m_bands[1], m_bands[2],
            np.array([float(v)]), 0.5 * dt, x,
        )
        return traj[1]
    if problem.scheme is SchemeTag.IMPLICIT_EULER:
        return _implicit_step(problem, t, v, x, dt)
    if problem.scheme is SchemeTag.EXPM_ORACLE:
        return _expm_step(problem, t, v, x, dt)
    raise PropagationError(f"unknown scheme {problem.scheme}")


def propagate_forward(problem: ControlProblem, v: ControlTrajectory) -> StateTrajectory:
    """Solve d/dt X + A(t, v) X = B(t, v) forward from the problem's X(0).

    The control value of interval n is held constant and evaluated at the
    interval midpoint time.
    """
    grid = v.grid
    dt = grid.dt
    mids = grid.midpoints()
    x0 = problem.initial_state()

    if problem.scheme is SchemeTag.CRANK_NICOLSON:
        structure = problem.cn_structure()
        if structure[0] == "tridiag_affine":
            _, h_bands, m_bands = structure
            try:
                states = kernels.cn_propagate_forward(
                    h_bands[0], h_bands[1], h_bands[2],
                    m_bands[0], m_bands[1], m_bands[2],
                    np.ascontiguousarray(v.interval_values(), dtype=float),
                    0.5 * dt, x0,
                )
            except ZeroDivisionError as exc:
                raise PropagationError(str(exc)) from exc
            return StateTrajectory(grid, states)

    states = np.empty((grid.step_count + 1,) + x0.shape,
                      dtype=complex if problem.complex_state else float)
    states[0] = x0
    x = x0
    for n in range(grid.step_count):
        try:
            x = step_state(problem, mids[n], v.values[n], x, dt)
        except (ZeroDivisionError, np.linalg.LinAlgError) as exc:
            raise PropagationError(str(exc), step=n) from exc
        if not np.all(np.isfinite(x)):
            raise PropagationError("non-finite state", step=n)
        states[n + 1] = x
    return StateTrajectory(grid, states)


def _running_cost_sources(problem, mids, v, x_states):
    """Per-interval running-cost gradients at the scheme's pairing states."""
    n_steps = len(mids)
    if problem.scheme is SchemeTag.IMPLICIT_EULER:
        points = x_states[1:]
    else:
        points = 0.5 * (x_states[:-1] + x_states[1:])
    sources = []
    for n in range(n_steps):
        sources.append(problem.grad_X_running_cost(mids[n], v.values[n], points[n]))
    return sources


def propagate_adjoint(
    problem: ControlProblem, v: ControlTrajectory, x: StateTrajectory
) -> AdjointTrajectory:
    """Backward costate sweep; x must be the forward solution for v.

    Terminal condition Y(T) = grad of the terminal cost at X(T); each step
    applies the transpose of the forward step map and injects the
    running-cost state gradient where the scheme's cost quadrature reads it.
    """
    grid = v.grid
    if grid != x.grid:
        raise PropagationError("control and state grids differ")
    dt = grid.dt
    mids = grid.midpoints()
    y_final = np.asarray(problem.grad_X_terminal_cost(x.terminal))

    if problem.scheme is SchemeTag.CRANK_NICOLSON:
        structure = problem.cn_structure()
        if structure[0] == "tridiag_affine" and not problem.has_state_running_cost:
            _, h_bands, m_bands = structure
            try:
                states = kernels.cn_propagate_adjoint(
                    h_bands[0], h_bands[1], h_bands[2],
                    m_bands[0], m_bands[1], m_bands[2],
                    np.ascontiguousarray(v.interval_values(), dtype=float),
                    0.5 * dt, y_final,
                )
            except ZeroDivisionError as exc:
                raise PropagationError(str(exc)) from exc
            return AdjointTrajectory(grid, states)

    sources = (
        _running_cost_sources(problem, mids, v, x.states)
        if problem.has_state_running_cost
        else [None] * grid.step_count
    )
    states = np.empty_like(x.states)
    states[-1] = y_final
    y = y_final
    tau = 0.5 * dt
    for n in range(grid.step_count - 1, -1, -1):
        g = sources[n]
        try:
            if problem.scheme is SchemeTag.CRANK_NICOLSON:
                if g is not None:
                    y = y + tau * g
                structure = problem.cn_structure()
                h = structure[1](mids[n], v.values[n])
                eye = np.eye(h.shape[0])
                z = np.linalg.solve(eye - 1j * tau * h, y)
                y = (eye + 1j * tau * h) @ z
                if g is not None:
                    y = y + tau * g
            elif problem.scheme is SchemeTag.IMPLICIT_EULER:
                rhs = y if g is None else y + dt * g
                op = problem.assemble_operator(mids[n], v.values[n])
                if isinstance(op, tuple):
                    dl, d, du = op
                    y = kernels.solve_tridiag(dt * du, 1.0 + dt * d, dt * dl, rhs)
                else:
                    y = np.linalg.solve(np.eye(op.shape[0]) + dt * op.T, rhs)
            elif problem.scheme is SchemeTag.EXPM_ORACLE:
                if g is not None:
                    y = y + tau * g
                a, _ = problem.dense_generator(mids[n], v.values[n])
                y = expm(-dt * a).conj().T @ y
                if g is not None:
                    y = y + tau * g
            else:
                raise PropagationError(f"unknown scheme {problem.scheme}")
        except (ZeroDivisionError, np.linalg.LinAlgError) as exc:
            raise PropagationError(str(exc), step=n) from exc
        states[n] = y
    return AdjointTrajectory(grid, states)
