import numpy as np
import pytest

from monoctrl import (
    ControlTrajectory,
    build_co,
    build_mfg,
    build_morse,
    build_twolevel,
    costate_pairing,
    increment_factor_quadrature,
    propagate_forward,
    solve_implicit_update,
)
from monoctrl.problems import (
    CrowdParams,
    MorseParams,
    OrientationParams,
    build_problem,
)
from monoctrl.problems.co import cosine_matrix


class TestMorse:
    def test_potential_minimum(self, morse_small):
        params = morse_small.params
        well = np.exp(-params.well_steepness * (morse_small.z - params.well_center))
        v_at_center = params.well_depth * (
            np.exp(-params.well_steepness * 0.0) - 1.0
        ) ** 2 - params.well_depth
        assert v_at_center == -params.well_depth
        assert np.min(morse_small.potential) == pytest.approx(-params.well_depth, abs=1e-4)

    def test_window_normalization(self):
        # the target window is a normalized Gaussian; a fine wide grid should
        # integrate it to one
        problem = build_morse(MorseParams(z_min=0.2, z_max=10.0), grid_points=4096,
                              steps=8, horizon=1.0)
        assert np.sum(problem.window) * problem.space_weight == pytest.approx(1.0, abs=1e-6)

    def test_ground_state_energy_against_fine_grid(self):
        # independent oracle: much finer grid on a wider box
        coarse = build_morse(MorseParams(), grid_points=512, steps=8, horizon=1.0)
        fine = build_morse(MorseParams(z_min=0.3, z_max=12.0), grid_points=4096,
                           steps=8, horizon=1.0)
        assert coarse.ground_energy == pytest.approx(fine.ground_energy, rel=1e-4)

    def test_ground_state_normalized(self, morse_small):
        x0 = morse_small.initial_state()
        assert np.sum(np.abs(x0) ** 2) * morse_small.space_weight == pytest.approx(1.0)

    def test_closed_form_update_fixed_point(self, morse_small):
        rng = np.random.default_rng(0)
        for theta in (1e-2, 1.0):
            v = morse_small.sample_control(rng)
            x = morse_small.sample_state(rng)
            y = morse_small.sample_costate(rng)
            v_new = morse_small.closed_form_update(0.4, v, x, y, theta)
            residual = morse_small.increment_factor(0.4, v_new, v, x, y) + theta * (v_new - v)
            assert abs(residual) < 1e-12 * max(1.0, theta)

    def test_grid_floor(self):
        with pytest.raises(ValueError):
            build_morse(MorseParams(), grid_points=32)


class TestCrowd:
    def test_running_cost_uniform_density(self, mfg_small):
        # v = 0, unit density: integrand reduces to the price and congestion
        # terms evaluated on the cell centers
        p = mfg_small.params
        x = np.ones(mfg_small.state_dim)
        v = np.zeros(mfg_small.state_dim)
        expected = np.sum(
            (1.0 - p.price_slope * mfg_small.z)
            + mfg_small.z / (p.congestion_offset + p.congestion_scale)
        ) * mfg_small.dz
        assert mfg_small.running_cost(0.0, v, x) == pytest.approx(expected, rel=1e-14)

    def test_congestion_term_concave(self):
        # second derivative of z X / (c1 + c2 X) in X is negative for X >= 0
        p = CrowdParams()
        x = np.linspace(0.0, 5.0, 50)
        second = -2 * p.congestion_scale / (p.congestion_offset + p.congestion_scale * x) ** 3
        assert np.all(second <= 0)

    def test_mass_conserved_and_positive(self, mfg_small):
        rng = np.random.default_rng(1)
        vals = rng.normal(scale=0.8, size=(mfg_small.grid.step_count + 1, mfg_small.state_dim))
        v = ControlTrajectory(mfg_small.grid, vals)
        x = propagate_forward(mfg_small, v)
        masses = np.sum(x.states, axis=1) * mfg_small.dz
        assert np.max(np.abs(masses - masses[0])) < 1e-8
        assert np.min(x.states) > 0

    def test_negative_density_warns(self, mfg_small):
        x = -np.ones(mfg_small.state_dim)
        with pytest.warns(RuntimeWarning):
            mfg_small.running_cost(0.0, np.zeros(mfg_small.state_dim), x)

    def test_update_valid_for_any_positive_theta(self, mfg_small):
        rng = np.random.default_rng(2)
        for theta in (1e-3, 0.2, 5.0):
            v = mfg_small.sample_control(rng)
            x = mfg_small.sample_state(rng)
            y = mfg_small.sample_costate(rng)
            v_new = mfg_small.closed_form_update(0.1, v, x, y, theta)
            residual = mfg_small.increment_factor(0.1, v_new, v, x, y) + theta * (v_new - v)
            assert mfg_small.control_norm(residual, state=x) < 1e-10 * max(1.0, theta)

    def test_costate_gradient_reduces_to_centered_difference(self, mfg_small):
        # constant density: the weighted gradient is the plain centered
        # difference in the interior
        y = np.sin(2 * np.pi * mfg_small.z)
        x = np.full(mfg_small.state_dim, 1.7)
        g = mfg_small.costate_gradient(x, y)
        centered = (y[2:] - y[:-2]) / (2 * mfg_small.dz)
        assert np.allclose(g[1:-1], centered)


class TestOrientation:
    def test_cosine_matrix_first_entry(self):
        c = cosine_matrix(13)
        assert c[0, 1] == pytest.approx(1.0 / np.sqrt(3.0))
        assert c[1, 0] == c[0, 1]
        assert np.allclose(c, c.T)

    def test_free_hamiltonian_spectrum(self, co_small):
        k = np.arange(co_small.state_dim)
        expected = co_small.params.rotational_constant * k * (k + 1)
        assert np.allclose(np.diag(co_small.h0), expected)

    def test_rotational_constant_flag(self):
        p = build_co(OrientationParams(include_rotational_constant=False), steps=8)
        k = np.arange(p.state_dim)
        assert np.allclose(np.diag(p.h0), k * (k + 1))

    def test_factor_pairing_polynomial_expansion(self, co_small):
        # dot(factor, v' - v) must equal xi1 (|v'|^2 - |v|^2) + xi2 (v1'^2 v2' - v1^2 v2)
        rng = np.random.default_rng(3)
        for _ in range(10):
            v = co_small.sample_control(rng)
            v_new = co_small.sample_control(rng)
            x = co_small.sample_state(rng)
            y = co_small.sample_costate(rng)
            xi1, xi2 = co_small._xi(x, y)
            expected = xi1 * (v_new @ v_new - v @ v) + xi2 * (
                v_new[0] ** 2 * v_new[1] - v[0] ** 2 * v[1]
            )
            factor = co_small.increment_factor(0.0, v_new, v, x, y)
            assert factor @ (v_new - v) == pytest.approx(expected, rel=1e-12, abs=1e-12)
            quad = increment_factor_quadrature(co_small, 0.0, v_new, v, x, y)
            assert quad @ (v_new - v) == pytest.approx(expected, rel=1e-10, abs=1e-10)

    def test_degenerate_factor_is_pairing_gradient(self, co_small):
        rng = np.random.default_rng(4)
        v = co_small.sample_control(rng)
        x = co_small.sample_state(rng)
        y = co_small.sample_costate(rng)
        xi1, xi2 = co_small._xi(x, y)
        expected = np.array([
            2 * xi1 * v[0] + 2 * xi2 * v[0] * v[1],
            2 * xi1 * v[1] + xi2 * v[0] ** 2,
        ])
        assert np.allclose(co_small.increment_factor(0.0, v, v, x, y), expected)
        assert np.allclose(
            increment_factor_quadrature(co_small, 0.0, v, v, x, y), expected, atol=1e-12
        )

    def test_sequential_update_matches_fixed_point(self, co_small):
        # the implicit update decouples: the second component is explicit,
        # then the first follows; this sequential solution must agree with
        # the generic fixed point
        rng = np.random.default_rng(5)
        theta = 1e3
        for _ in range(10):
            v = co_small.sample_control(rng)
            x = co_small.sample_state(rng)
            y = co_small.sample_costate(rng)
            xi1, xi2 = co_small._xi(x, y)
            v2_new = ((theta - xi1) * v[1] - xi2 * v[0] ** 2) / (theta + xi1)
            v1_new = v[0] * (theta - xi1 - xi2 * v2_new) / (theta + xi1 + xi2 * v2_new)
            sequential = np.array([v1_new, v2_new])
            generic = solve_implicit_update(co_small, 0.0, v, x, y, theta,
                                            picard_tol=1e-14, picard_max=500)
            assert np.max(np.abs(sequential - generic)) < 1e-10

    def test_observable_positive_semidefinite(self, co_small):
        eigvals = np.linalg.eigvalsh(co_small.observable)
        assert np.min(eigvals) > 0.0

    def test_basis_floor(self):
        with pytest.raises(ValueError):
            build_co(OrientationParams(max_level=2), steps=8)


class TestTwoLevel:
    def test_unit_norm_under_propagation(self, twolevel):
        rng = np.random.default_rng(6)
        vals = 0.7 * rng.normal(size=twolevel.grid.step_count + 1)
        x = propagate_forward(twolevel, ControlTrajectory(twolevel.grid, vals))
        norms = np.abs(np.sum(np.abs(x.states) ** 2, axis=1) - 1.0)
        assert np.max(norms) < 1e-12

    def test_terminal_cost_identity_on_sphere(self, twolevel):
        # the linear terminal cost equals the squared distance to the target
        # exactly on the unit sphere
        rng = np.random.default_rng(7)
        for _ in range(20):
            x = twolevel.sample_state(rng)
            dist_sq = float(np.real(np.vdot(x - twolevel.target, x - twolevel.target)))
            assert twolevel.terminal_cost(x) == pytest.approx(dist_sq, rel=1e-12)


class TestRegistry:
    def test_build_by_name(self):
        for name in ("morse", "mfg", "co", "twolevel"):
            problem = build_problem(name, time_steps=8,
                                    space_points=64 if name == "mfg" else None)
            assert problem.name == name

    def test_overrides(self):
        problem = build_problem("mfg", time_steps=8, overrides={"diffusion": 0.3})
        assert problem.params.diffusion == 0.3

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            build_problem("unknown")
