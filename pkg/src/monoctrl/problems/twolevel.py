"""Two-state system at oracle scale.

Same structure as the vibrational control problem (Hermitian free part,
scalar field coupling, quadratic control penalty, state-transfer objective)
but small enough that dense matrix-exponential references are exact and
cheap, which is what the cross-scheme tests lean on.
"""

from __future__ import annotations

import numpy as np

from ..core import ControlProblem, ControlTrajectory, SchemeTag, TimeGrid


class TwoLevelProblem(ControlProblem):
    name = "twolevel"
    state_dim = 2
    control_shape = ()
    complex_state = True
    space_weight = 1.0

    def __init__(self, steps: int = 64, horizon: float = 2.0,
                 scheme: SchemeTag = SchemeTag.CRANK_NICOLSON, penalty: float = 1.0):
        self.scheme = scheme
        self.penalty = penalty
        self.grid = TimeGrid(horizon, steps)
        self.h0 = np.diag([0.0, 1.0])
        self.coupling = np.array([[0.0, 1.0], [1.0, 0.0]])
        self.target = np.array([0.0, 1.0], dtype=complex)
        self._x0 = np.array([1.0, 0.0], dtype=complex)
        self._h_bands = (np.zeros(1), np.array([0.0, 1.0]), np.zeros(1))
        self._m_bands = (np.ones(1), np.zeros(2), np.ones(1))

    def _hamiltonian(self, t, v):
        return self.h0 + float(v) * self.coupling

    def cn_structure(self):
        return ("tridiag_affine", self._h_bands, self._m_bands)

    def dense_generator(self, t, v):
        return 1j * self._hamiltonian(t, v), None

    def apply_A(self, t, v, x):
        return 1j * (self._hamiltonian(t, v) @ x)

    def apply_A_adjoint(self, t, v, y):
        return -1j * (self._hamiltonian(t, v) @ y)

    def running_cost(self, t, v, x):
        return self.penalty * float(v) ** 2

    def grad_v_pairing(self, t, v, x, y):
        return -self.state_inner(y, 1j * (self.coupling @ x)) + 2.0 * self.penalty * float(v)

    def terminal_cost(self, x):
        # Linear realization of the squared distance to the target: on the
        # unit sphere 2 - 2 Re<x, target> equals |x - target|^2, and unlike
        # the quadratic form it is concave on the whole space.
        return 2.0 - 2.0 * self.state_inner(x, self.target)

    def grad_X_terminal_cost(self, x):
        return -2.0 * self.target

    def initial_state(self):
        return self._x0.copy()

    def closed_form_update(self, t, v, x, y, theta):
        drive = self.state_inner(y, 1j * (self.coupling @ x))
        return ((theta - self.penalty) * float(v) + drive) / (theta + self.penalty)

    def default_control(self) -> ControlTrajectory:
        return ControlTrajectory.constant(self.grid, 1e-3)


def build_twolevel(steps: int = 64, horizon: float = 2.0,
                   scheme: SchemeTag = SchemeTag.CRANK_NICOLSON,
                   penalty: float = 1.0) -> TwoLevelProblem:
    return TwoLevelProblem(steps=steps, horizon=horizon, scheme=scheme, penalty=penalty)
