"""Command-line entry point.

Subcommands:
  simulate         run one scenario, write metrics report(s) and the span trace
  sweep            scale the sync payload across a comm/comp ratio range and
                   emit a (rho, speedup) CSV comparing both policies
  equivalence      run the schedule-neutrality suite for the SGD oracle
  validate-config  parse and validate a scenario file

Exit codes: 0 success, 1 validation/usage error, 2 runtime error,
3 equivalence failure.  All outputs are deterministic functions of the
config and flags.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .comm import Architecture
from .equivalence import LossKind, SgdConfig, check_neutrality
from .engine import trace_to_chrome_json, trace_to_json
from .errors import ConfigError, DeadlockError, InvalidTraceError
from .metrics import measure, report
from .scenario import load_config
from .scheduler import (
    Policy,
    SchedulePlan,
    schedule_crossover,
    schedule_sequential,
    simulate,
)
from .workload import TensorSpec, comp_time

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_EQUIVALENCE = 3

REPORT_FILES = {"json": "metrics.json", "csv": "metrics.csv", "table": "metrics.txt"}

NS_PER_S = 10**9


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _cmd_simulate(args) -> int:
    scenario = load_config(args.config)
    plan = scenario.plan(args.iters)
    trace = simulate(plan)
    metrics = measure(trace, plan, scenario=scenario.name)

    out = Path(args.out)
    _write(out / "trace.json", trace_to_json(trace))
    for fmt in args.format or ["json"]:
        if fmt == "chrome-trace":
            _write(out / "trace_chrome.json", trace_to_chrome_json(trace))
        else:
            _write(out / REPORT_FILES[fmt], report(metrics, fmt))
    print(f"{scenario.name}: policy={plan.policy.value} "
          f"makespan_ns={trace.makespan} spans={len(trace.spans)} -> {out}")
    return EXIT_OK


def _ratio_points(lo: Fraction, hi: Fraction, steps: int) -> list[Fraction]:
    if steps == 1:
        return [lo]
    step = (hi - lo) / (steps - 1)
    return [lo + k * step for k in range(steps)]


def _payload_for_ratio(plan: SchedulePlan, rho: Fraction) -> int:
    """Gradient bytes that make the fused sync last rho * comp, exactly as possible."""
    cluster = plan.cluster
    comp = comp_time(plan.jobs[0])
    target = rho * comp
    w = cluster.workers
    if cluster.architecture is Architecture.RING_ALLREDUCE:
        if w < 2:
            raise ConfigError("sweep: ring_allreduce needs workers >= 2 to have "
                              "any communication to scale")
        latency = 2 * (w - 1) * cluster.latency_per_message
        per_byte = Fraction(2 * (w - 1) * NS_PER_S, w * cluster.bandwidth_bytes_per_sec)
    else:
        latency = 2 * cluster.latency_per_message
        per_byte = Fraction(2 * NS_PER_S, cluster.bandwidth_bytes_per_sec)
    if target < latency:
        raise ConfigError(
            f"sweep: ratio {float(rho):g} unreachable, per-message latency alone "
            f"is {latency} ns but the target sync time is {float(target):g} ns")
    return round((target - latency) / per_byte)


def _with_payload(job, payload_bytes: int):
    """Replace a job's tensors with one synthetic payload tensor of the given size."""
    return replace(job, tensors=(TensorSpec("payload", payload_bytes),))


def _cmd_sweep(args) -> int:
    if args.steps < 2:
        raise ConfigError("--steps must be >= 2")
    lo, hi = Fraction(str(args.ratio_min)), Fraction(str(args.ratio_max))
    if not 0 < lo <= hi <= 4:
        raise ConfigError("--ratio-min/--ratio-max must satisfy 0 < min <= max <= 4")

    scenario = load_config(args.config)
    plan = scenario.plan(args.iters)
    if len({comp_time(j) for j in plan.jobs}) != 1:
        raise ConfigError("sweep requires homogeneous jobs (equal compute time)")

    rows = []
    for rho in _ratio_points(lo, hi, args.steps):
        payload = _payload_for_ratio(plan, rho)
        jobs = tuple(_with_payload(job, payload) for job in plan.jobs)
        cross_span = schedule_crossover(
            SchedulePlan(Policy.CROSSOVER, jobs, plan.cluster)).makespan
        seq_span = schedule_sequential(
            SchedulePlan(Policy.SEQUENTIAL, jobs, plan.cluster)).makespan
        speedup = Fraction(seq_span, cross_span)
        rows.append(f"{float(rho)!r},{float(speedup)!r}")

    out = Path(args.out) / "sweep.csv"
    _write(out, "rho,speedup\n" + "\n".join(rows) + "\n")
    print(f"{scenario.name}: {args.steps} ratio points "
          f"[{float(lo):g}, {float(hi):g}] -> {out}")
    return EXIT_OK


_EQUIV_JOB_COUNTS = (1, 2, 3)
_EQUIV_WORKER_COUNTS = (1, 2, 4)


def _equiv_configs(n_jobs: int, workers: int, seed: int) -> list[SgdConfig]:
    losses = (LossKind.LEAST_SQUARES, LossKind.LOGISTIC)
    return [
        SgdConfig(
            learning_rate=0.05,
            workers=workers,
            loss=losses[j % 2],
            dataset_seed=seed * 1000 + n_jobs * 100 + workers * 10 + j,
        )
        for j in range(n_jobs)
    ]


def _cmd_equivalence(args) -> int:
    if args.iters < 1:
        raise ConfigError("--iters must be >= 1")
    perturb = None
    if args.perturb:
        try:
            job_s, iter_s = args.perturb.split(":")
            perturb = (int(job_s), int(iter_s))
        except ValueError:
            raise ConfigError("--perturb expects JOB_INDEX:ITERATION") from None

    worst = 0.0
    failure = None
    for n_jobs in _EQUIV_JOB_COUNTS:
        for workers in _EQUIV_WORKER_COUNTS:
            configs = _equiv_configs(n_jobs, workers, args.seed)
            seeds = [args.seed + 31 * j for j in range(n_jobs)]
            active = perturb if perturb and perturb[0] < n_jobs else None
            rep = check_neutrality(configs, args.iters, seeds, perturb=active)
            print(f"jobs={n_jobs} workers={workers} iters={args.iters}: "
                  f"max deviation {rep.max_abs_deviation:g}")
            worst = max(worst, rep.max_abs_deviation)
            if rep.first_divergence is not None and failure is None:
                failure = (n_jobs, workers, rep.first_divergence)

    print(f"max absolute trajectory deviation: {worst:g}")
    if failure is not None:
        n_jobs, workers, (job, iteration, coord) = failure
        print(f"FAIL: trajectories diverge at jobs={n_jobs} workers={workers} "
              f"job_index={job} iteration={iteration} coordinate={coord}",
              file=sys.stderr)
        return EXIT_EQUIVALENCE
    print("PASS: interleaved trajectories identical to isolated runs")
    return EXIT_OK


def _cmd_validate(args) -> int:
    scenario = load_config(args.config)
    print(f"OK: {scenario.name}: {len(scenario.jobs)} job(s), "
          f"policy={scenario.policy.value}, "
          f"architecture={scenario.cluster.architecture.value}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="colosim",
        description="Deterministic simulator for co-located training jobs that "
                    "overlap gradient synchronization with compute.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scenario and write reports")
    sim.add_argument("--config", required=True, help="scenario JSON file")
    sim.add_argument("--out", default="out", help="output directory")
    sim.add_argument("--format", action="append",
                     choices=["json", "csv", "table", "chrome-trace"],
                     help="metrics/trace formats (repeatable; default json)")
    sim.add_argument("--iters", type=int, default=None,
                     help="override every job's iteration count")
    sim.set_defaults(func=_cmd_simulate)

    sweep = sub.add_parser("sweep", help="speedup curve over comm/comp ratios")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--out", default="out")
    sweep.add_argument("--ratio-min", type=float, default=0.1)
    sweep.add_argument("--ratio-max", type=float, default=2.0)
    sweep.add_argument("--steps", type=int, default=20)
    sweep.add_argument("--iters", type=int, default=None)
    sweep.set_defaults(func=_cmd_sweep)

    eq = sub.add_parser("equivalence", help="SGD schedule-neutrality suite")
    eq.add_argument("--seed", type=int, default=0)
    eq.add_argument("--iters", type=int, default=100)
    eq.add_argument("--perturb", default=None, metavar="JOB:ITER",
                    help="test hook: nudge one update by 1 ulp to force a failure")
    eq.set_defaults(func=_cmd_equivalence)

    val = sub.add_parser("validate-config", help="check a scenario file")
    val.add_argument("--config", required=True)
    val.set_defaults(func=_cmd_validate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (DeadlockError, InvalidTraceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
