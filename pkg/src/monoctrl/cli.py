"""Command-line front end: run, compare, selftest.

Outputs are plain CSV/text files so runs diff cleanly; the same config and
seed produce byte-identical output.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checks import run_suite
from .config import RunConfig, load_config
from .core import cost
from .errors import ConfigError
from .gradient import run_gradient
from .monotonic import RunRecord, run as run_monotonic
from .problems import build_problem
from .propagators import propagate_forward

CSV_HEADER = "iter,J,update_norm,theta,picard_iters,descent_residual,solver"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_convergence(path: Path, records: list[RunRecord]):
    lines = [CSV_HEADER]
    for record in records:
        for row in record.rows:
            lines.append(",".join([
                str(row.iteration),
                _fmt(float(row.cost)),
                _fmt(float(row.update_norm)),
                _fmt(row.theta if row.theta is None else float(row.theta)),
                _fmt(row.picard_iterations),
                _fmt(row.descent_residual if row.descent_residual is None else float(row.descent_residual)),
                record.solver,
            ]))
    path.write_text("\n".join(lines) + "\n")


def _write_final_control(path: Path, problem, record: RunRecord):
    v = record.final_control
    times = v.grid.nodes()
    lines = []
    if v.values.ndim == 1:
        lines.append("t,v")
        for t, val in zip(times, v.values):
            lines.append(f"{_fmt(float(t))},{_fmt(float(val))}")
    elif v.values.shape[1] == 2 and problem.control_shape == (2,):
        lines.append("t,v1,v2")
        for t, row in zip(times, v.values):
            lines.append(f"{_fmt(float(t))},{_fmt(float(row[0]))},{_fmt(float(row[1]))}")
    else:
        header = "t," + ",".join(f"z={z:.8g}" for z in problem.z)
        lines.append(header)
        for t, row in zip(times, v.values):
            lines.append(_fmt(float(t)) + "," + ",".join(_fmt(float(u)) for u in row))
    path.write_text("\n".join(lines) + "\n")


def _cost_parts(problem, record: RunRecord) -> tuple[float, float]:
    x = propagate_forward(problem, record.final_control)
    terminal = problem.terminal_cost(x.terminal)
    total = cost(problem, record.final_control, x)
    return total - terminal, terminal


def _summary_lines(problem, cfg: RunConfig, records: list[RunRecord]) -> list[str]:
    lines = [
        f"monoctrl {__version__}",
        f"problem = {problem.name}",
        f"time_steps = {problem.grid.step_count}",
        f"horizon = {problem.grid.horizon!r}",
        "",
    ]
    for record in records:
        lines.append(f"[{record.solver}]")
        lines.append(f"iterations = {len(record.rows)}")
        lines.append(f"status = {record.status}")
        lines.append(f"final_J = {record.final_cost!r}")
        if record.rows:
            lines.append(f"final_update_norm = {record.rows[-1].update_norm!r}")
        if record.solver == "monotonic":
            lines.append(f"theta_final = {record.final_theta!r}")
        if record.solver == "gradient":
            evals = [row.cost_evaluations for row in record.rows if row.cost_evaluations]
            if evals:
                lines.append(f"mean_cost_evaluations = {float(np.mean(evals))!r}")
        if cfg.report_both_costs:
            running, terminal = _cost_parts(problem, record)
            lines.append(f"running_cost_part = {running!r}")
            lines.append(f"terminal_cost_part = {terminal!r}")
            lines.append(f"terminal_observable = {-terminal!r}")
        lines.append("")
    return lines


def _execute(cfg: RunConfig) -> tuple[object, list[RunRecord]]:
    problem = build_problem(
        cfg.problem,
        space_points=cfg.space_points,
        time_steps=cfg.time_steps,
        horizon=cfg.horizon,
        overrides=cfg.problem_overrides,
    )
    v0 = problem.default_control()
    records = []
    if cfg.solver in ("monotonic", "both"):
        records.append(run_monotonic(problem, v0, cfg.monotonic))
    if cfg.solver in ("gradient", "both"):
        records.append(run_gradient(problem, v0, cfg.linesearch))
    return problem, records


def cmd_run(config_path: str, out_dir: str | None = None, seed: int | None = None) -> int:
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if out_dir is not None:
        cfg.output_dir = out_dir
    if seed is not None:
        cfg.seed = seed
    try:
        problem, records = _execute(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # solver failure
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_convergence(out / "convergence.csv", records)
    _write_final_control(out / "final_control.csv", problem, records[0])
    summary = _summary_lines(problem, cfg, records)
    (out / "summary.txt").write_text("\n".join(summary) + "\n")
    for record in records:
        print(f"{record.solver}: status={record.status} final_J={record.final_cost!r}")
    return 0


def _compare_text(mono: RunRecord, grad: RunRecord) -> list[str]:
    lines = [
        f"monotonic_final_J = {mono.final_cost!r}",
        f"gradient_final_J = {grad.final_cost!r}",
    ]
    gap = mono.final_cost - grad.final_cost
    if abs(gap) <= 1e-10 * (1.0 + abs(grad.final_cost)):
        lines.append("lower_final_J = tie")
    elif gap < 0:
        lines.append("lower_final_J = monotonic")
    else:
        lines.append("lower_final_J = gradient")
    n = min(len(mono.rows), len(grad.rows))
    j_mono = [mono.rows[k].cost for k in range(n)]
    j_grad = [grad.rows[k].cost for k in range(n)]
    leads = [k for k in range(n) if j_grad[k] < j_mono[k]]
    gradient_leads_early = bool(leads and leads[0] <= max(1, n // 10))
    lines.append(f"gradient_leads_early = {'yes' if gradient_leads_early else 'no'}")
    overtake = None
    if leads:
        after = [k for k in range(leads[0] + 1, n) if j_mono[k] <= j_grad[k]]
        overtake = after[0] if after else None
        lines.append(f"monotonic_overtakes_at = {overtake if overtake is not None else 'never'}")
    else:
        lines.append("monotonic_overtakes_at = led-throughout")
    return lines


def cmd_compare(config_path: str, out_dir: str | None = None, seed: int | None = None) -> int:
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    cfg.solver = "both"
    if out_dir is not None:
        cfg.output_dir = out_dir
    if seed is not None:
        cfg.seed = seed
    try:
        problem, records = _execute(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_convergence(out / "convergence.csv", records)
    _write_final_control(out / "final_control.csv", problem, records[0])
    (out / "summary.txt").write_text("\n".join(_summary_lines(problem, cfg, records)) + "\n")
    compare = _compare_text(records[0], records[1])
    (out / "compare.txt").write_text("\n".join(compare) + "\n")
    for line in compare:
        print(line)
    return 0


def cmd_selftest(seed: int = 0) -> int:
    results = run_suite(seed=seed)
    width = max(len(r.problem) for r in results)
    failures = 0
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        if not r.passed:
            failures += 1
        print(f"{mark}  {r.problem:<{width}}  {r.name:<24} {r.detail}")
    print(f"{len(results) - failures}/{len(results)} checks passed")
    return 0 if failures == 0 else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="monoctrl",
                                     description="Monotonic control-update solver")
    parser.add_argument("--version", action="version", version=f"monoctrl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="optimize a named problem from a config file")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory override")
    p_run.add_argument("--seed", type=int, default=None)

    p_cmp = sub.add_parser("compare", help="run both solvers with identical budgets")
    p_cmp.add_argument("config")
    p_cmp.add_argument("--out", default=None)
    p_cmp.add_argument("--seed", type=int, default=None)

    p_self = sub.add_parser("selftest", help="run the invariant suite on all problems")
    p_self.add_argument("--seed", type=int, default=0)

    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config, args.out, args.seed)
    if args.command == "compare":
        return cmd_compare(args.config, args.out, args.seed)
    return cmd_selftest(args.seed)


if __name__ == "__main__":
    sys.exit(main())
