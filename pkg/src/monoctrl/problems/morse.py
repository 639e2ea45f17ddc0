"""Vibrational control of the O-H bond in a Morse well.

A scalar field v(t) couples through a position-dependent dipole moment;
the objective localizes the wavefunction at a target position through a
narrow Gaussian window observable at the final time, against a quadratic
field penalty.  All parameter defaults are in atomic units.

Spatial discretization: uniform grid on [z_min, z_max] with homogeneous
Dirichlet ends (interior nodes only) and a 3-point stencil for the second
derivative.  The well (z = 1.821) and the target (z = 2.5) sit well inside
the default box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from ..core import ControlProblem, ControlTrajectory, SchemeTag, TimeGrid


@dataclass(frozen=True)
class MorseParams:
    well_depth: float = 0.1994            # D0
    well_steepness: float = 1.189         # exponential range parameter
    well_center: float = 1.821            # equilibrium bond length
    dipole_decay: float = 0.6             # dipole moment decay length
    target_center: float = 2.5            # localization target
    target_sharpness: float = 25.0        # inverse width of the window
    dipole_strength: float = 3.088
    kinetic_coefficient: float = 2.8694e-4  # coefficient of -d^2/dz^2, verbatim
    penalty: float = 1.0                  # control penalty weight
    horizon: float = 131000.0
    z_min: float = 0.5
    z_max: float = 8.0


class MorseProblem(ControlProblem):
    name = "morse"
    control_shape = ()
    complex_state = True
    scheme = SchemeTag.CRANK_NICOLSON

    def __init__(self, params: MorseParams, grid_points: int = 512, steps: int = 4000,
                 horizon: float | None = None):
        if grid_points < 64:
            raise ValueError("grid_points must be >= 64")
        self.params = params
        self.state_dim = grid_points
        self.grid = TimeGrid(params.horizon if horizon is None else horizon, steps)

        dz = (params.z_max - params.z_min) / (grid_points + 1)
        self.z = params.z_min + dz * np.arange(1, grid_points + 1)
        self.space_weight = dz

        well = np.exp(-params.well_steepness * (self.z - params.well_center))
        self.potential = params.well_depth * (well - 1.0) ** 2 - params.well_depth
        kin = params.kinetic_coefficient / dz**2
        self._h_d = 2.0 * kin + self.potential
        self._h_off = -kin * np.ones(grid_points - 1)
        self.dipole = params.dipole_strength * self.z * np.exp(-self.z / params.dipole_decay)
        self.window = (params.target_sharpness / np.sqrt(np.pi)) * np.exp(
            -params.target_sharpness**2 * (self.z - params.target_center) ** 2
        )
        self._zeros_off = np.zeros(grid_points - 1)

        vals, vecs = eigh_tridiagonal(self._h_d, self._h_off, select="i", select_range=(0, 0))
        psi = vecs[:, 0]
        psi = psi * np.sign(psi[np.argmax(np.abs(psi))])
        self.ground_energy = float(vals[0])
        self._x0 = (psi / np.sqrt(np.sum(psi**2) * dz)).astype(complex)

    # ----- scheme hooks -------------------------------------------------------
    def cn_structure(self):
        return (
            "tridiag_affine",
            (self._h_off, self._h_d, self._h_off),
            (self._zeros_off, self.dipole, self._zeros_off),
        )

    def _h_matvec(self, v, x):
        y = (self._h_d + float(v) * self.dipole) * x
        y[1:] += self._h_off * x[:-1]
        y[:-1] += self._h_off * x[1:]
        return y

    # ----- contract -----------------------------------------------------------
    def apply_A(self, t, v, x):
        return 1j * self._h_matvec(v, x)

    def apply_A_adjoint(self, t, v, y):
        return -1j * self._h_matvec(v, y)

    def running_cost(self, t, v, x):
        return self.params.penalty * float(v) ** 2

    def grad_v_pairing(self, t, v, x, y):
        return -self.state_inner(y, 1j * (self.dipole * x)) + 2.0 * self.params.penalty * float(v)

    def terminal_cost(self, x):
        return -float(np.sum(self.window * np.abs(x) ** 2)) * self.space_weight

    def grad_X_terminal_cost(self, x):
        return -2.0 * self.window * x

    def initial_state(self):
        return self._x0.copy()

    def closed_form_update(self, t, v, x, y, theta):
        alpha = self.params.penalty
        drive = self.state_inner(y, 1j * (self.dipole * x))
        return ((theta - alpha) * float(v) + drive) / (theta + alpha)

    def default_control(self) -> ControlTrajectory:
        return ControlTrajectory.constant(self.grid, 1e-3)


def build_morse(params: MorseParams | None = None, grid_points: int = 512,
                steps: int = 4000, horizon: float | None = None) -> MorseProblem:
    return MorseProblem(params or MorseParams(), grid_points=grid_points,
                        steps=steps, horizon=horizon)
