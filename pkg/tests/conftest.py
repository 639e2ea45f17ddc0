import numpy as np
import pytest

from monoctrl import (
    ControlProblem,
    ControlTrajectory,
    SchemeTag,
    TimeGrid,
    build_co,
    build_mfg,
    build_morse,
    build_twolevel,
)
from monoctrl.problems import CrowdParams, MorseParams, OrientationParams


@pytest.fixture(scope="session")
def twolevel():
    return build_twolevel(steps=64)


@pytest.fixture(scope="session")
def morse_small():
    return build_morse(MorseParams(), grid_points=128, steps=128, horizon=1000.0)


@pytest.fixture(scope="session")
def mfg_small():
    return build_mfg(CrowdParams(), grid_points=32, steps=16)


@pytest.fixture(scope="session")
def co_small():
    return build_co(OrientationParams(), steps=128)


@pytest.fixture(scope="session")
def all_small(twolevel, morse_small, mfg_small, co_small):
    return [twolevel, morse_small, mfg_small, co_small]


def random_trajectory(problem, rng, scale=0.5):
    vals = np.stack(
        [scale * np.asarray(problem.sample_control(rng))
         for _ in range(problem.grid.step_count + 1)]
    )
    return ControlTrajectory(
        problem.grid, vals.reshape((problem.grid.step_count + 1,) + problem.control_shape)
    )


class DriftProblem(ControlProblem):
    """Scalar-state test problem: dX/dt + a X = b v, quadratic control cost,
    linear terminal cost.  The discrete cost is an exactly solvable QP."""

    name = "drift"
    state_dim = 1
    control_shape = ()
    complex_state = False
    scheme = SchemeTag.IMPLICIT_EULER

    def __init__(self, steps=12, horizon=1.0, decay=0.7, gain=1.3,
                 penalty=0.5, terminal_weight=2.0, x0=1.0):
        self.grid = TimeGrid(horizon, steps)
        self.decay = decay
        self.gain = gain
        self.penalty = penalty
        self.terminal_weight = terminal_weight
        self.x0 = x0

    def assemble_operator(self, t, v):
        return np.array([[self.decay]])

    def apply_A(self, t, v, x):
        return self.decay * x

    def apply_A_adjoint(self, t, v, y):
        return self.decay * y

    def eval_B(self, t, v):
        return np.array([self.gain * float(v)])

    def running_cost(self, t, v, x):
        return self.penalty * float(v) ** 2

    def grad_v_pairing(self, t, v, x, y):
        return float(y[0]) * self.gain + 2.0 * self.penalty * float(v)

    def terminal_cost(self, x):
        return self.terminal_weight * float(x[0])

    def grad_X_terminal_cost(self, x):
        return np.array([self.terminal_weight])

    def initial_state(self):
        return np.array([self.x0])


class InertProblem(ControlProblem):
    """No dynamics, no cost: A = 0, B = 0, F = 0, G = <g, X>."""

    name = "inert"
    state_dim = 3
    control_shape = ()
    complex_state = False
    scheme = SchemeTag.IMPLICIT_EULER

    def __init__(self, steps=10, horizon=2.0):
        self.grid = TimeGrid(horizon, steps)
        self.g = np.array([0.5, -1.0, 2.0])

    def assemble_operator(self, t, v):
        return np.zeros((3, 3))

    def apply_A(self, t, v, x):
        return np.zeros(3)

    def apply_A_adjoint(self, t, v, y):
        return np.zeros(3)

    def running_cost(self, t, v, x):
        return 0.0

    def grad_v_pairing(self, t, v, x, y):
        return 0.0

    def terminal_cost(self, x):
        return float(np.dot(self.g, x))

    def grad_X_terminal_cost(self, x):
        return self.g.copy()

    def initial_state(self):
        return np.array([1.0, 2.0, -0.5])
