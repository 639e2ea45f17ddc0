"""Core contracts and the increment machinery shared by every solver.

The central object is the scalar pairing

    pairing(t, v, X, Y) = -<Y, A(t,v) X> + <Y, B(t,v)> + F(t, v, X)

whose gradient in the control is the pointwise cost gradient, and whose
v-increment the update schemes factorize:

    dot(increment_factor(v', v), v' - v) = pairing(v') - pairing(v)

for fixed (t, X, Y).  A control update that makes the left side nonpositive
at every time yields a cost decrease; that is the property the monotonic
solver is built on and the one the property tests in this module's test
suite pin down.
"""

from __future__ import annotations

import enum
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ControlShapeError, NumericsError

__all__ = [
    "TimeGrid",
    "SchemeTag",
    "ControlTrajectory",
    "StateTrajectory",
    "AdjointTrajectory",
    "ControlProblem",
    "costate_pairing",
    "increment_factor_quadrature",
    "increment_density",
    "interval_states",
    "interval_adjoints",
    "cost",
    "increment_bound_check",
    "control_sq_norm",
]


class SchemeTag(enum.Enum):
    """Propagation scheme selected by a problem definition.

    CRANK_NICOLSON : complex unitary dynamics (norm conserving).
    IMPLICIT_EULER : real parabolic dynamics (mass conserving under
        no-flux discretizations).
    EXPM_ORACLE    : frozen-coefficient matrix-exponential steps; exact for
        piecewise-constant generators, intended for small systems and tests.
    """

    CRANK_NICOLSON = "crank_nicolson"
    IMPLICIT_EULER = "implicit_euler"
    EXPM_ORACLE = "expm_oracle"


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [0, horizon] with nodes t_n = n * dt, n = 0..step_count."""

    horizon: float
    step_count: int

    def __post_init__(self):
        if self.step_count < 1:
            raise ValueError("step_count must be >= 1")
        if not (self.horizon > 0 and np.isfinite(self.horizon)):
            raise ValueError("horizon must be positive and finite")

    @property
    def dt(self) -> float:
        return self.horizon / self.step_count

    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.step_count + 1)

    def midpoints(self) -> np.ndarray:
        """Interval midpoints t_n + dt/2, one per control interval."""
        return (np.arange(self.step_count) + 0.5) * self.dt


def _frozen_array(values, dtype=None) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ControlTrajectory:
    """Piecewise-constant control: values[n] applies on [t_n, t_{n+1}).

    values has step_count + 1 rows so that it lines up with the node grid;
    the final row is inert padding (zero quadrature weight) kept equal to
    the last interval value by the solvers.
    """

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values, dtype=float))
        if self.values.shape[0] != self.grid.step_count + 1:
            raise ControlShapeError(
                f"control has {self.values.shape[0]} rows for a grid with "
                f"{self.grid.step_count + 1} nodes"
            )
        if not np.all(np.isfinite(self.values)):
            raise ControlShapeError("control values must be finite")

    @classmethod
    def constant(cls, grid: TimeGrid, value) -> "ControlTrajectory":
        value = np.asarray(value, dtype=float)
        vals = np.broadcast_to(value, (grid.step_count + 1,) + value.shape).copy()
        return cls(grid, vals)

    def interval_values(self) -> np.ndarray:
        """The step_count rows that carry quadrature weight."""
        return self.values[:-1]

    def with_values(self, values) -> "ControlTrajectory":
        return ControlTrajectory(self.grid, values)


@dataclass(frozen=True)
class StateTrajectory:
    """State samples at the grid nodes, states[n] ~ X(t_n)."""

    grid: TimeGrid
    states: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "states", _frozen_array(self.states))
        if self.states.shape[0] != self.grid.step_count + 1:
            raise ControlShapeError("state trajectory length does not match grid")

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]


class AdjointTrajectory(StateTrajectory):
    """Costate samples at the grid nodes, states[n] ~ Y(t_n)."""


class ControlProblem(ABC):
    """Contract a concrete control problem implements.

    Dynamics: d/dt X + A(t, v) X = B(t, v), X(0) given.
    Cost:     integral of running_cost(t, v, X) dt + terminal_cost(X(T)),
    with running and terminal cost concave in the state.

    Subclasses fix the state space (dimension, real/complex, quadrature
    weight), the control space (scalar, pair, or spatial field), the
    propagation scheme, and the callables below.  All callables are pure;
    instances are immutable after construction and safe to share.
    """

    name: str = "problem"
    scheme: SchemeTag
    state_dim: int
    control_shape: tuple[int, ...] = ()
    complex_state: bool = False
    space_weight: float = 1.0
    has_state_running_cost: bool = False
    grid: TimeGrid

    # Optional closed-form solution of increment_factor(v', v) = -theta (v' - v),
    # as a method (t, v, X, Y, theta) -> v'.  None means use the generic
    # fixed-point solver.
    closed_form_update: Callable | None = None

    # ----- dynamics and cost -------------------------------------------------
    @abstractmethod
    def apply_A(self, t: float, v, x: np.ndarray) -> np.ndarray:
        """Action of the generator: A(t, v) x."""

    @abstractmethod
    def apply_A_adjoint(self, t: float, v, y: np.ndarray) -> np.ndarray:
        """Adjoint action w.r.t. state_inner: A*(t, v) y."""

    def eval_B(self, t: float, v) -> np.ndarray | None:
        """Source term B(t, v); None means identically zero."""
        return None

    @abstractmethod
    def running_cost(self, t: float, v, x: np.ndarray) -> float:
        """F(t, v, x), already integrated over the state space."""

    def grad_X_running_cost(self, t: float, v, x: np.ndarray) -> np.ndarray | None:
        """Gradient of F in the state w.r.t. state_inner; None means zero."""
        return None

    @abstractmethod
    def grad_v_pairing(self, t: float, v, x: np.ndarray, y: np.ndarray):
        """Control gradient of costate_pairing at (t, v, x, y)."""

    @abstractmethod
    def terminal_cost(self, x: np.ndarray) -> float:
        """G(x)."""

    @abstractmethod
    def grad_X_terminal_cost(self, x: np.ndarray) -> np.ndarray:
        """Gradient of G w.r.t. state_inner."""

    @abstractmethod
    def initial_state(self) -> np.ndarray:
        """X(0)."""

    def increment_factor(self, t: float, v_new, v_old, x: np.ndarray, y: np.ndarray):
        """Factor of the pairing increment; default is the quadrature form.

        Problems with polynomial control dependence may override this with
        an exact factorization.  Any override must keep the pairing identity
        dot(increment_factor(v', v), v' - v) = pairing(v') - pairing(v); the
        factor itself is not unique.
        """
        return increment_factor_quadrature(self, t, v_new, v_old, x, y)

    # ----- inner products ----------------------------------------------------
    def state_inner(self, a: np.ndarray, b: np.ndarray) -> float:
        """Discrete state-space scalar product (real part for complex spaces)."""
        if self.complex_state:
            return float(np.real(np.vdot(a, b))) * self.space_weight
        return float(np.dot(a, b)) * self.space_weight

    def control_dot(self, a, b, state: np.ndarray | None = None) -> float:
        """Control-space scalar product.

        `state` lets field-control problems weight the product with the
        current density; scalar and pair controls ignore it.
        """
        if self.control_shape == ():
            return float(a) * float(b)
        return float(np.dot(np.ravel(a), np.ravel(b)))

    def control_norm(self, a, state: np.ndarray | None = None) -> float:
        return float(np.sqrt(max(self.control_dot(a, a, state), 0.0)))

    # ----- defaults for runs and randomized checks ----------------------------
    def default_control(self) -> ControlTrajectory:
        """Initial control for optimization runs."""
        return ControlTrajectory.constant(self.grid, np.zeros(self.control_shape))

    def sample_state(self, rng: np.random.Generator) -> np.ndarray:
        """A random admissible state (unit norm for complex spaces)."""
        if self.complex_state:
            z = rng.normal(size=self.state_dim) + 1j * rng.normal(size=self.state_dim)
            nrm = np.sqrt(np.real(np.vdot(z, z)) * self.space_weight)
            return z / nrm
        return rng.normal(size=self.state_dim)

    def sample_costate(self, rng: np.random.Generator) -> np.ndarray:
        """A random costate; unconstrained direction, O(1) scale."""
        if self.complex_state:
            return rng.normal(size=self.state_dim) + 1j * rng.normal(size=self.state_dim)
        return rng.normal(size=self.state_dim)

    def sample_control(self, rng: np.random.Generator):
        v = rng.normal(scale=0.5, size=self.control_shape)
        return float(v) if self.control_shape == () else v


# ----- the increment machinery ------------------------------------------------


def costate_pairing(problem: ControlProblem, t: float, v, x: np.ndarray, y: np.ndarray) -> float:
    """-<y, A(t,v) x> + <y, B(t,v)> + F(t, v, x)."""
    value = -problem.state_inner(y, problem.apply_A(t, v, x))
    b = problem.eval_B(t, v)
    if b is not None:
        value += problem.state_inner(y, b)
    return value + problem.running_cost(t, v, x)


_GAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_01(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    if nodes not in _GAUSS_CACHE:
        x, w = np.polynomial.legendre.leggauss(nodes)
        _GAUSS_CACHE[nodes] = (0.5 * (x + 1.0), 0.5 * w)
    return _GAUSS_CACHE[nodes]


def increment_factor_quadrature(
    problem: ControlProblem,
    t: float,
    v_new,
    v_old,
    x: np.ndarray,
    y: np.ndarray,
    nodes: int = 4,
):
    """Path integral of grad_v_pairing from v_old to v_new (Gauss-Legendre).

    Exact whenever the pairing is polynomial in the control of degree at
    most 2*nodes - 1, which covers every shipped problem at the default
    node count.  Pairing v_new == v_old returns the pointwise cost gradient.
    """
    a = np.asarray(v_old, dtype=float)
    b = np.asarray(v_new, dtype=float)
    if a.shape != b.shape:
        raise ControlShapeError(f"control shapes differ: {a.shape} vs {b.shape}")
    lam, w = _gauss_01(nodes)
    acc = None
    for lam_i, w_i in zip(lam, w):
        g = problem.grad_v_pairing(t, a + lam_i * (b - a), x, y)
        acc = w_i * np.asarray(g, dtype=float) if acc is None else acc + w_i * np.asarray(g, dtype=float)
    if not np.all(np.isfinite(acc)):
        raise NumericsError("non-finite control gradient in increment factor")
    return float(acc) if a.shape == () else acc


def increment_density(
    problem: ControlProblem,
    t: float,
    v_old,
    v_new,
    y_old: np.ndarray,
    x_new: np.ndarray,
) -> float:
    """Integrand whose time integral bounds the cost change.

    -<y_old, (A(v_new) - A(v_old)) x_new> + <y_old, B(v_new) - B(v_old)>
    + F(v_new, x_new) - F(v_old, x_new); cost(v_new) - cost(v_old) is
    bounded above by its quadrature along the grid.
    """
    a_diff = problem.apply_A(t, v_new, x_new) - problem.apply_A(t, v_old, x_new)
    value = -problem.state_inner(y_old, a_diff)
    b_new, b_old = problem.eval_B(t, v_new), problem.eval_B(t, v_old)
    if b_new is not None or b_old is not None:
        zero = np.zeros(problem.state_dim)
        value += problem.state_inner(
            y_old, (b_new if b_new is not None else zero) - (b_old if b_old is not None else zero)
        )
    return value + problem.running_cost(t, v_new, x_new) - problem.running_cost(t, v_old, x_new)


def interval_states(problem: ControlProblem, traj: StateTrajectory) -> np.ndarray:
    """Per-interval state used by cost quadrature and control updates.

    The rule matches the scheme's discrete adjoint so that gradient and
    descent identities hold to solver tolerance rather than O(dt): node
    averages for the time-symmetric schemes, right nodes for implicit Euler.
    """
    if problem.scheme is SchemeTag.IMPLICIT_EULER:
        return traj.states[1:]
    return 0.5 * (traj.states[:-1] + traj.states[1:])


def interval_adjoints(problem: ControlProblem, traj: AdjointTrajectory) -> np.ndarray:
    """Per-interval costate paired with interval_states."""
    if problem.scheme is SchemeTag.IMPLICIT_EULER:
        return traj.states[:-1]
    return 0.5 * (traj.states[:-1] + traj.states[1:])


def _check_same_grid(v: ControlTrajectory, x: StateTrajectory):
    if v.grid != x.grid:
        raise ControlShapeError("control and state trajectories use different grids")


def cost(problem: ControlProblem, v: ControlTrajectory, x: StateTrajectory) -> float:
    """Total cost: interval quadrature of the running cost plus terminal cost.

    `x` must be the forward solution for `v` on the same grid.
    """
    _check_same_grid(v, x)
    dt = v.grid.dt
    mids = v.grid.midpoints()
    xi = interval_states(problem, x)
    running = 0.0
    for n in range(v.grid.step_count):
        running += problem.running_cost(mids[n], v.values[n], xi[n])
    return running * dt + problem.terminal_cost(x.terminal)


def control_sq_norm(
    problem: ControlProblem,
    values: np.ndarray,
    grid: TimeGrid,
    states: np.ndarray | None = None,
) -> float:
    """Squared L2([0,T]) norm of per-interval control values.

    `values` holds one row per interval (step_count rows); `states` supplies
    the per-interval weighting state for density-weighted control spaces.
    """
    total = 0.0
    for n in range(grid.step_count):
        total += problem.control_dot(
            values[n], values[n], None if states is None else states[n]
        )
    return total * grid.dt


def increment_bound_check(
    problem: ControlProblem, v: ControlTrajectory, v_new: ControlTrajectory
) -> tuple[float, float]:
    """Evaluate both sides of the increment bound for a control pair.

    Returns (lhs, rhs) with lhs = cost(v_new) - cost(v) via two forward
    solves and rhs the quadrature of increment_density along the grid;
    concavity of the costs in the state guarantees lhs <= rhs.
    """
    from .propagators import propagate_adjoint, propagate_forward

    if v.grid != v_new.grid:
        raise ControlShapeError("control pair uses different grids")
    x_old = propagate_forward(problem, v)
    x_new = propagate_forward(problem, v_new)
    y_old = propagate_adjoint(problem, v, x_old)
    lhs = cost(problem, v_new, x_new) - cost(problem, v, x_old)
    y_int = interval_adjoints(problem, y_old)
    x_int = interval_states(problem, x_new)
    mids = v.grid.midpoints()
    rhs = 0.0
    for n in range(v.grid.step_count):
        rhs += increment_density(
            problem, mids[n], v.values[n], v_new.values[n], y_int[n], x_int[n]
        )
    return lhs, rhs * v.grid.dt
