"""Crowd-density control: advected diffusion with a congestion-priced cost.

The state is a player density on [0, 1] driven by a distributed velocity
control; the running cost prices position (linearly decreasing in z),
congestion (saturating in the density), and movement (quadratic in the
velocity, density weighted).  There is no terminal cost.

Discretization: cell-centered finite volumes with centered interface
fluxes and no-flux boundaries, stepped by implicit Euler.  Flux form makes
the total mass exact; the centered advective flux keeps the operator
linear in the control, which the factorization identities require, and the
scheme matrix stays an M-matrix (hence positivity is preserved) while the
cell Peclet number |u| dz / (2 nu) stays below one, far above the
velocities this model produces.

The control pairing is density weighted: dot(a, b | X) = sum a b X dz.
Under that pairing the pointwise update has the closed form
v' = ((theta - 1/2) v - gY) / (theta + 1/2) for every theta > 0, where gY
is the density-weighted discrete gradient of the costate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..core import ControlProblem, ControlTrajectory, SchemeTag, TimeGrid


@dataclass(frozen=True)
class CrowdParams:
    price: float = 1.0               # p(t), constant
    price_slope: float = 0.8         # position discount in the price term
    congestion_gain: float = 1.0     # c0
    congestion_offset: float = 0.1   # c1
    congestion_scale: float = 1.0    # c2
    diffusion: float = 0.1           # nu; not fixed by the model, config knob
    horizon: float = 1.0


class CrowdProblem(ControlProblem):
    name = "mfg"
    complex_state = False
    scheme = SchemeTag.IMPLICIT_EULER
    has_state_running_cost = True

    def __init__(self, params: CrowdParams, grid_points: int = 64, steps: int = 50):
        if grid_points < 32:
            raise ValueError("grid_points must be >= 32")
        self.params = params
        self.state_dim = grid_points
        self.control_shape = (grid_points,)
        self.grid = TimeGrid(params.horizon, steps)
        dz = 1.0 / grid_points
        self.dz = dz
        self.space_weight = dz
        self.z = (np.arange(grid_points) + 0.5) * dz

    # ----- discrete operator ---------------------------------------------------
    def assemble_operator(self, t, v):
        """Bands (dl, d, du) of L(v) with A(t,v)X = L(v) X."""
        p = self.params
        dz = self.dz
        u = 0.5 * (v[:-1] + v[1:])          # interface velocities, boundaries closed
        nu_over = p.diffusion / dz
        d = np.zeros(self.state_dim)
        d[:-1] += (0.5 * u + nu_over) / dz
        d[1:] += (-0.5 * u + nu_over) / dz
        du = (0.5 * u - nu_over) / dz
        dl = (-0.5 * u - nu_over) / dz
        return dl, d, du

    def apply_A(self, t, v, x):
        dl, d, du = self.assemble_operator(t, v)
        y = d * x
        y[1:] += dl * x[:-1]
        y[:-1] += du * x[1:]
        return y

    def apply_A_adjoint(self, t, v, y):
        dl, d, du = self.assemble_operator(t, v)
        out = d * y
        out[1:] += du * y[:-1]
        out[:-1] += dl * y[1:]
        return out

    # ----- costs ----------------------------------------------------------------
    def running_cost(self, t, v, x):
        p = self.params
        if np.any(x < 0):
            warnings.warn("negative density in running cost evaluation", RuntimeWarning)
        integrand = (
            p.price * (1.0 - p.price_slope * self.z) * x
            + p.congestion_gain * self.z * x / (p.congestion_offset + p.congestion_scale * x)
            + 0.5 * v**2 * x
        )
        return float(np.sum(integrand)) * self.dz

    def grad_X_running_cost(self, t, v, x):
        p = self.params
        return (
            p.price * (1.0 - p.price_slope * self.z)
            + p.congestion_gain * self.z * p.congestion_offset
            / (p.congestion_offset + p.congestion_scale * x) ** 2
            + 0.5 * v**2
        )

    def terminal_cost(self, x):
        return 0.0

    def grad_X_terminal_cost(self, x):
        return np.zeros(self.state_dim)

    def initial_state(self):
        return np.ones(self.state_dim)

    # ----- control space ---------------------------------------------------------
    def control_dot(self, a, b, state=None):
        w = state if state is not None else 1.0
        return float(np.sum(a * b * w)) * self.dz

    def costate_gradient(self, x, y):
        """Density-weighted discrete gradient of the costate.

        Exact control gradient of -<y, L(v) x> under the density-weighted
        pairing; reduces to the centered difference of y when x is constant.
        Boundary cells see only their interior interface.
        """
        x_face = 0.5 * (x[:-1] + x[1:])
        dy = y[1:] - y[:-1]
        g = np.zeros_like(np.asarray(x, dtype=float))
        g[:-1] += x_face * dy
        g[1:] += x_face * dy
        return g / (2.0 * x * self.dz)

    def grad_v_pairing(self, t, v, x, y):
        return self.costate_gradient(x, y) + v

    def increment_factor(self, t, v_new, v_old, x, y):
        return self.costate_gradient(x, y) + 0.5 * (v_new + v_old)

    def closed_form_update(self, t, v, x, y, theta):
        return ((theta - 0.5) * v - self.costate_gradient(x, y)) / (theta + 0.5)

    # ----- sampling ---------------------------------------------------------------
    def sample_state(self, rng):
        return rng.uniform(0.2, 1.5, size=self.state_dim)

    def sample_costate(self, rng):
        return rng.normal(size=self.state_dim)

    def default_control(self) -> ControlTrajectory:
        return ControlTrajectory.constant(self.grid, np.zeros(self.state_dim))


def build_mfg(params: CrowdParams | None = None, grid_points: int = 64,
              steps: int = 50) -> CrowdProblem:
    return CrowdProblem(params or CrowdParams(), grid_points=grid_points, steps=steps)
