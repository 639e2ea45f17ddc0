"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s`.  The heavy optimization
runs are shared across criteria through session fixtures; the whole module
is a few minutes of compute.
"""

import numpy as np
import pytest
from scipy.linalg import expm

from monoctrl import (
    ControlTrajectory,
    LineSearchConfig,
    MonotonicConfig,
    SchemeTag,
    build_co,
    build_mfg,
    build_morse,
    build_twolevel,
    cost,
    costate_pairing,
    criticality_residual,
    increment_bound_check,
    increment_factor_quadrature,
    propagate_forward,
    run_gradient,
    run_monotonic,
    solve_implicit_update,
)
from monoctrl.problems import CrowdParams, MorseParams, OrientationParams

from conftest import random_trajectory

# Reference setups: model parameter tables with the stated optimization
# parameters; the vibrational problem runs on a reduced horizon at the
# documented step count so the suite stays desk-scale.
MORSE_STEPS, MORSE_HORIZON = 4000, 13100.0
CO_STEPS = 2000
ITERATIONS = 50

THETAS = {"morse": 1e-2, "co": 1e3, "mfg": 1.0, "twolevel": 1.0}


@pytest.fixture(scope="module")
def problems():
    return {
        "twolevel": build_twolevel(steps=64),
        "morse": build_morse(MorseParams(), grid_points=512, steps=MORSE_STEPS,
                             horizon=MORSE_HORIZON),
        "mfg": build_mfg(CrowdParams(), grid_points=64, steps=50),
        "co": build_co(OrientationParams(), steps=CO_STEPS),
    }


@pytest.fixture(scope="module")
def coarse_problems():
    return {
        "twolevel": build_twolevel(steps=32),
        "morse": build_morse(MorseParams(), grid_points=128, steps=128, horizon=1000.0),
        "mfg": build_mfg(CrowdParams(), grid_points=32, steps=16),
        "co": build_co(OrientationParams(), steps=128),
    }


def _start(problem):
    # The pair-control problem's descent record runs at the reference
    # theta = 1e3, whose whole-trajectory fixed point contracts from
    # moderate fields; the strong-field default start belongs to the
    # comparison runs, which use the single-sweep inner solver.
    if problem.name == "co":
        return ControlTrajectory.constant(problem.grid, np.array([0.5, 0.5]))
    return problem.default_control()


@pytest.fixture(scope="module")
def monotonic_records(problems):
    records = {}
    for name, problem in problems.items():
        cfg = MonotonicConfig(theta_init=THETAS[name], outer_max=ITERATIONS)
        records[name] = run_monotonic(problem, _start(problem), cfg)
    return records


@pytest.fixture(scope="module")
def gradient_records(problems):
    cfg = LineSearchConfig(max_iterations=ITERATIONS)
    return {"morse": run_gradient(problems["morse"], _start(problems["morse"]), cfg)}


def test_criterion_1_quantified_monotonic_descent(problems, monotonic_records):
    """Every accepted step drops the cost by at least theta ||dv||^2."""
    for name, record in monotonic_records.items():
        costs = np.append(record.costs(), record.final_cost)
        for row, j_next in zip(record.rows, costs[1:]):
            slack = 1e-9 * (1 + abs(row.cost))
            drop = j_next - row.cost
            assert drop <= -row.theta * row.update_norm**2 + slack, (name, row.iteration)
        assert len(record.rows) >= 1
    print("\nACCEPTANCE 1 PASS: quantified monotonic descent on all four problems "
          f"({', '.join(f'{n}: J->{r.final_cost:.6g}' for n, r in monotonic_records.items())})")


def test_criterion_2_factorization_identity(problems):
    """dot(factor, dv) equals the pairing increment on random tuples."""
    rng = np.random.default_rng(20)
    worst = 0.0
    for problem in problems.values():
        for _ in range(100):
            t = rng.uniform(0, problem.grid.horizon)
            v_old, v_new = problem.sample_control(rng), problem.sample_control(rng)
            x, y = problem.sample_state(rng), problem.sample_costate(rng)
            p_new = costate_pairing(problem, t, v_new, x, y)
            p_old = costate_pairing(problem, t, v_old, x, y)
            scale = 1e-10 * (1 + abs(p_new) + abs(p_old))
            diff = np.asarray(v_new) - np.asarray(v_old)
            for factor in (problem.increment_factor(t, v_new, v_old, x, y),
                           increment_factor_quadrature(problem, t, v_new, v_old, x, y)):
                err = abs(problem.control_dot(factor, diff, state=x) - (p_new - p_old))
                assert err <= scale, problem.name
                worst = max(worst, err / scale)
    print(f"\nACCEPTANCE 2 PASS: factorization identity, 100 tuples/problem "
          f"(worst {worst:.3f} of allowance)")


def test_criterion_3_increment_bound(problems):
    """Cost change bounded by the increment-density quadrature, 10 pairs each."""
    rng = np.random.default_rng(21)
    worst = -np.inf
    for problem in problems.values():
        for _ in range(10):
            v = random_trajectory(problem, rng, scale=0.3)
            v_new = v.with_values(v.values + 0.2 * random_trajectory(problem, rng).values)
            lhs, rhs = increment_bound_check(problem, v, v_new)
            excess = (lhs - rhs) / (1 + abs(lhs))
            assert excess <= 1e-8, problem.name
            worst = max(worst, excess)
    print(f"\nACCEPTANCE 3 PASS: increment bound, 10 pairs/problem (worst excess {worst:.2e})")


def test_criterion_4_adjoint_gradient(coarse_problems):
    """Central differences match the assembled gradient to 1e-5 relative."""
    from monoctrl.core import interval_adjoints, interval_states
    from monoctrl.propagators import propagate_adjoint

    rng = np.random.default_rng(22)
    eps = 1e-5
    worst = 0.0
    for problem in coarse_problems.values():
        v = random_trajectory(problem, rng, scale=0.3)
        x = propagate_forward(problem, v)
        y = propagate_adjoint(problem, v, x)
        x_int, y_int = interval_states(problem, x), interval_adjoints(problem, y)
        mids = v.grid.midpoints()
        for _ in range(10):
            d = random_trajectory(problem, rng)
            predicted = sum(
                problem.control_dot(
                    problem.increment_factor(mids[n], v.values[n], v.values[n],
                                             x_int[n], y_int[n]),
                    d.values[n], state=x_int[n])
                for n in range(v.grid.step_count)
            ) * v.grid.dt
            vp = v.with_values(v.values + eps * d.values)
            vm = v.with_values(v.values - eps * d.values)
            fd = (cost(problem, vp, propagate_forward(problem, vp))
                  - cost(problem, vm, propagate_forward(problem, vm))) / (2 * eps)
            rel = abs(fd - predicted) / (abs(fd) + abs(predicted) + 1e-300)
            assert rel <= 1e-5, problem.name
            worst = max(worst, rel)
    print(f"\nACCEPTANCE 4 PASS: adjoint gradient vs central differences "
          f"(worst relative {worst:.2e})")


def test_criterion_5_update_solver_agreement(problems):
    """Closed forms agree with the generic fixed point; the pair-control
    problem's fixed point satisfies its residual at theta = 1e3."""
    rng = np.random.default_rng(23)
    worst = 0.0
    for name in ("twolevel", "morse", "mfg"):
        problem = problems[name]
        theta = 10.0 if name != "mfg" else 1.0
        for _ in range(100):
            t = rng.uniform(0, problem.grid.horizon)
            v = problem.sample_control(rng)
            x, y = problem.sample_state(rng), problem.sample_costate(rng)
            closed = problem.closed_form_update(t, v, x, y, theta)
            generic = solve_implicit_update(problem, t, v, x, y, theta,
                                            picard_tol=1e-13, picard_max=500,
                                            use_closed_form=False)
            gap = problem.control_norm(np.asarray(closed) - np.asarray(generic), state=x)
            assert gap <= 1e-10, name
            worst = max(worst, gap)
    co = problems["co"]
    worst_res = 0.0
    for _ in range(100):
        t = rng.uniform(0, co.grid.horizon)
        v = co.sample_control(rng)
        x, y = co.sample_state(rng), co.sample_costate(rng)
        v_new = solve_implicit_update(co, t, v, x, y, 1e3, picard_tol=1e-13, picard_max=500)
        res = co.control_norm(co.increment_factor(t, v_new, v, x, y) + 1e3 * (v_new - v))
        assert res <= 1e-8
        worst_res = max(worst_res, res)
    print(f"\nACCEPTANCE 5 PASS: update solver (closed-form gap <= {worst:.2e}, "
          f"pair-control residual <= {worst_res:.2e} at theta=1e3)")


def test_criterion_6_conservation(problems, monotonic_records):
    """Norm drift (unitary schemes) and mass drift (parabolic) over full runs."""
    drifts = {}
    for name in ("twolevel", "morse", "co"):
        problem = problems[name]
        x = propagate_forward(problem, monotonic_records[name].final_control)
        norms = np.sqrt(np.sum(np.abs(x.states) ** 2, axis=1) * problem.space_weight)
        drifts[name] = float(np.max(np.abs(norms - norms[0])))
        assert drifts[name] <= 1e-8, name
    problem = problems["mfg"]
    x = propagate_forward(problem, monotonic_records["mfg"].final_control)
    masses = np.sum(x.states, axis=1) * problem.space_weight
    drifts["mfg"] = float(np.max(np.abs(masses - masses[0])))
    assert drifts["mfg"] <= 1e-8
    detail = ", ".join(f"{k}: {v:.2e}" for k, v in drifts.items())
    print(f"\nACCEPTANCE 6 PASS: conservation over full runs ({detail})")


def test_criterion_7_criticality_at_stop(problems):
    """A run stopped by stop_tol has a criticality residual within
    10 * theta_final * stop_tol."""
    problem = problems["twolevel"]
    cfg = MonotonicConfig(theta_init=1.0, outer_max=500, stop_tol=1e-8)
    record = run_monotonic(problem, _start(problem), cfg)
    assert record.status == "converged"
    residual = criticality_residual(problem, record.final_control)
    bound = 10 * record.final_theta * 1e-8
    assert residual <= bound
    print(f"\nACCEPTANCE 7 PASS: criticality at stop "
          f"(residual {residual:.2e} <= {bound:.2e} after {len(record.rows)} iterations)")


def test_criterion_8_exponential_oracle_equivalence():
    """Unitary-scheme cost and terminal state match the per-step
    matrix-exponential oracle at 4096 steps."""
    steps = 4096
    cn = build_twolevel(steps=steps)
    oracle = build_twolevel(steps=steps, scheme=SchemeTag.EXPM_ORACLE)
    rng = np.random.default_rng(24)
    v = random_trajectory(cn, rng, scale=0.5)
    x_cn = propagate_forward(cn, v)
    x_or = propagate_forward(oracle, v)
    state_err = float(np.max(np.abs(x_cn.terminal - x_or.terminal)))
    j_cn, j_or = cost(cn, v, x_cn), cost(oracle, v, x_or)
    rel = abs(j_cn - j_or) / (1 + abs(j_or))
    assert state_err <= 1e-6
    assert rel <= 1e-6
    # the in-library oracle is itself pinned to a literal loop
    state = oracle.initial_state()
    for n in range(16):
        state = expm(-1j * (2.0 / 16) * (oracle.h0 + 0.1 * oracle.coupling)) @ state
    check = propagate_forward(build_twolevel(steps=16, scheme=SchemeTag.EXPM_ORACLE),
                              ControlTrajectory.constant(build_twolevel(steps=16).grid, 0.1))
    assert np.max(np.abs(check.terminal - state)) < 1e-12
    print(f"\nACCEPTANCE 8 PASS: exponential-oracle equivalence at N={steps} "
          f"(terminal {state_err:.2e}, cost rel {rel:.2e})")


# Comparison runs pit both solvers against identical starts and budgets.
# The criterion pins the 50-iteration window, not the proximal weight, so
# each comparison seeds theta at the problem's curvature scale (penalty
# weight for the scalar problem, fixed-point contraction threshold for the
# pair-control problem); at the descent-criterion thetas the monotone
# solver's 50-iteration travel is throttled to a crawl and the window would
# measure the throttle, not the solvers.
COMPARE_CONFIG = """
[run]
problem = {problem}
solver = both
iterations = {iterations}
output_dir = {out}

[grid]
{grid}

[monotonic]
{monotonic}
"""

COMPARE_SETUPS = {
    "morse": dict(monotonic="theta_init = 1.0",
                  grid=f"space_points = 512\ntime_steps = {MORSE_STEPS}\n"
                       f"horizon = {MORSE_HORIZON}"),
    "co": dict(monotonic="theta_init = 100.0\ninner_solver = sweep",
               grid=f"time_steps = {CO_STEPS}"),
    "mfg": dict(monotonic="theta_init = 1.0", grid="space_points = 64\ntime_steps = 50"),
}


def _read_compare(out_dir):
    values = {}
    for line in (out_dir / "compare.txt").read_text().splitlines():
        key, _, raw = line.partition(" = ")
        values[key] = raw
    return values


def test_criterion_9_solver_comparison(tmp_path):
    """Figure-style comparison through cmd_compare: the monotone solver ends
    at or below the gradient baseline (up to round-off; both may converge to
    the same critical point) on the vibrational and orientation problems;
    the crowd problem's report records who led early and whether the
    monotone solver overtook, without asserting a winner."""
    from monoctrl.cli import main

    reports = {}
    for name, setup in COMPARE_SETUPS.items():
        out = tmp_path / name
        cfg_path = tmp_path / f"{name}.ini"
        cfg_path.write_text(COMPARE_CONFIG.format(
            problem=name, iterations=ITERATIONS, out=out,
            monotonic=setup["monotonic"], grid=setup["grid"],
        ))
        assert main(["compare", str(cfg_path)]) == 0
        reports[name] = _read_compare(out)

    for name in ("morse", "co"):
        j_mono = float(reports[name]["monotonic_final_J"])
        j_grad = float(reports[name]["gradient_final_J"])
        assert j_mono <= j_grad + 1e-11 * (1 + abs(j_grad)), (
            f"{name}: monotonic {j_mono!r} vs gradient {j_grad!r}"
        )
    assert reports["mfg"]["gradient_leads_early"] in ("yes", "no")
    assert "monotonic_overtakes_at" in reports["mfg"]
    print("\nACCEPTANCE 9 PASS: comparisons "
          f"(morse {reports['morse']['monotonic_final_J']} <= "
          f"{reports['morse']['gradient_final_J']}; "
          f"co {reports['co']['monotonic_final_J']} <= "
          f"{reports['co']['gradient_final_J']}; "
          f"mfg leads_early={reports['mfg']['gradient_leads_early']}, "
          f"overtakes={reports['mfg']['monotonic_overtakes_at']})")


def test_criterion_10_line_search_economy(gradient_records):
    """Mean cost evaluations per gradient iteration on the vibrational
    problem lie in [2, 6]."""
    rows = gradient_records["morse"].rows
    evals = [row.cost_evaluations for row in rows if row.cost_evaluations]
    mean = float(np.mean(evals))
    assert 2.0 <= mean <= 6.0, evals
    print(f"\nACCEPTANCE 10 PASS: line-search economy (mean {mean:.2f} evaluations/iteration)")
