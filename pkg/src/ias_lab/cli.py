"""Command-line entry point: ``ias-lab <command> [options]``."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from . import Lab, new_lab
from .lab.config import load_config
from .lab.exceptions import DataError, DegenerateDesign, IASLabError
from .lab.fgka import brute_force_twcv
from .lab.reports import (
    IMPROVED_THROUGHPUT_NOTE,
    assignment_table,
    render_report,
    render_text,
    throughput_table,
    time_cost_table,
)
from .lab.store import (
    ResultStore,
    load_model,
    read_points_csv,
    read_workload_csv,
    write_profile_csv,
    write_workload_csv,
)
from .models.clustering import FgkaResult
from .models.interference import QuadraticInterferenceModel
from .models.scheduling import Policy

logger = logging.getLogger(__name__)

POLICY_CHOICES = [p.value for p in Policy]


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--experiment", help="experiment name (subdirectory of the output directory)")
    common.add_argument("--jobs", type=int, default=1, help="worker threads for compare")
    common.add_argument("--no-timestamp", action="store_true", help="omit generated_at from JSON outputs")
    common.add_argument("--debug", action="store_true", help="log at DEBUG level")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="ias-lab", description="Interference-aware VM scheduling lab")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", parents=[common], help="generate a workload CSV")
    gen.add_argument("--tasks", type=int, help="number of tasks")

    fit = sub.add_parser("profile-fit", parents=[common], help="profile the world and fit the model")
    fit.add_argument("--samples", type=int, help="number of profile samples")
    fit.add_argument("--mode", choices=["single", "batch"], help="profiling mode")
    fit.add_argument(
        "--unit-runtime", action="store_true", help="replay single-mode applications with a 1 s base runtime"
    )

    run = sub.add_parser("schedule-run", parents=[common], help="schedule one workload and simulate it")
    run.add_argument("--policy", choices=POLICY_CHOICES, default=Policy.FGKA_PP.value)
    run.add_argument("--workload", help="workload CSV (generated from the seed when omitted)")
    run.add_argument("--model", help="model JSON (defaults to the profile-fit output)")

    compare = sub.add_parser("compare", parents=[common], help="A/B comparison over seeded trials")
    compare.add_argument("--policy", action="append", choices=POLICY_CHOICES, help="policy to include (repeatable)")
    compare.add_argument("--trials", type=int, help="number of trials")
    compare.add_argument("--model", help="model JSON (fitted from profiling when omitted)")

    cluster = sub.add_parser("cluster", parents=[common], help="cluster a CSV of points")
    cluster.add_argument("--points", required=True, help="points CSV")
    cluster.add_argument("--k", type=int, required=True, help="number of clusters")
    cluster.add_argument("--algorithm", choices=["fgka", "kmeans"], default="fgka")
    cluster.add_argument("--check", action="store_true", help="report the exhaustive optimum (small inputs)")
    return parser


def config_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Dotted-path config values set by command-line flags."""
    overrides: Dict[str, Any] = {
        "seed": args.seed,
        "output_dir": args.out,
        "experiment_name": args.experiment,
        "timestamp": False if args.no_timestamp else None,
    }
    if args.command == "gen":
        overrides["workload.task_count"] = args.tasks
    elif args.command == "profile-fit":
        overrides["profiling.samples"] = args.samples
        overrides["profiling.mode"] = args.mode
        overrides["profiling.unit_runtime"] = True if args.unit_runtime else None
    elif args.command == "compare":
        overrides["experiment.trials"] = args.trials
        overrides["experiment.policies"] = args.policy
    return overrides


def _store(lab: Lab) -> ResultStore:
    c = lab.config
    return ResultStore(c.output_dir, c.experiment_name, timestamp=c.timestamp)


def cmd_gen(lab: Lab, args: argparse.Namespace) -> List[Path]:
    tasks = lab.generate_workload()
    path = write_workload_csv(_store(lab).path("gen", "workload.csv"), tasks)
    logger.info("generated %d tasks", len(tasks))
    return [path]


def cmd_profile_fit(lab: Lab, args: argparse.Namespace) -> List[Path]:
    store = _store(lab)
    samples = lab.profile()
    written = [write_profile_csv(store.path("profile-fit", "profile.csv"), samples)]
    try:
        model, report = lab.fit(samples)
    except DegenerateDesign:
        logger.error("the profile design is degenerate; increase profiling.backgrounds or profiling.samples")
        raise
    written.append(store.write_model(store.path("profile-fit", "model.json"), model, report))
    written.append(store.write_json(store.path("profile-fit", "fit_report.json"), report.to_dict()))
    logger.info("fit finished (%s), sse %.6g", report.termination.value, report.final_sse)
    return written


def _model_for(policy: Policy, path: Path) -> Optional[QuadraticInterferenceModel]:
    if policy == Policy.ROUND_ROBIN:
        return None
    if policy == Policy.KMEANS_PP and not path.is_file():
        return None
    return load_model(path)


def cmd_schedule_run(lab: Lab, args: argparse.Namespace) -> List[Path]:
    store = _store(lab)
    policy = Policy(args.policy)
    model_path = Path(args.model) if args.model else store.path("profile-fit", "model.json")
    model = _model_for(policy, model_path)
    tasks = read_workload_csv(args.workload, lab.config.workload) if args.workload else lab.generate_workload()
    if not tasks:
        raise DataError("the workload is empty; nothing to schedule")

    decision = lab.schedule(tasks, model, policy)
    metrics = lab.simulate(decision.assignment, tasks)
    base = ("schedule-run", policy.value)
    return [
        store.write_json(store.path(*base, "decision.json"), decision.report.to_dict()),
        store.write_json(store.path(*base, "metrics.json"), metrics.to_dict()),
    ]


def cmd_compare(lab: Lab, args: argparse.Namespace) -> List[Path]:
    store = _store(lab)
    model = load_model(args.model) if args.model else None
    table = lab.compare(model, jobs=args.jobs)

    written = []
    for trial in table.trials:
        for policy, metrics in trial.metrics.items():
            path = store.path("compare", f"trial-{trial.trial:03d}", policy, "metrics.json")
            written.append(store.write_json(path, metrics.to_dict()))
    written.append(store.write_json(store.path("compare", "comparison.json"), table.to_dict()))

    summary_rows = [
        [
            s.policy,
            s.trials,
            s.makespan_median,
            s.makespan_iqr,
            s.throughput_median,
            s.throughput_iqr,
            s.normalized_throughput_median,
            s.normalized_throughput_iqr,
            s.cost_median,
            s.cost_iqr,
        ]
        for s in (table.summaries[p] for p in table.policies)
    ]
    summary_header = [
        "policy", "trials", "makespan_median", "makespan_iqr", "throughput_median", "throughput_iqr",
        "normalized_throughput_median", "normalized_throughput_iqr", "cost_median", "cost_iqr",
    ]
    written.append(store.write_csv(store.path("compare", "summary.csv"), summary_header, summary_rows))

    tables = {
        "table1": ("Scheduling tasks to VMs with CPU utilization (trial 0)", assignment_table(table), ""),
        "table2": ("Normalized throughput", throughput_table(table), IMPROVED_THROUGHPUT_NOTE),
        "table3": ("Completion time and cost", time_cost_table(table), ""),
    }
    for name, (title, (header, rows), note) in tables.items():
        written.append(store.write_csv(store.path("compare", f"{name}.csv"), header, rows))
        written.append(store.write_text(store.path("compare", f"{name}.txt"), render_text(title, header, rows, note)))
    report = render_report(table)
    written.append(store.write_text(store.path("compare", "report.txt"), report))
    sys.stdout.write(report)
    return written


def cmd_cluster(lab: Lab, args: argparse.Namespace) -> List[Path]:
    store = _store(lab)
    points = read_points_csv(args.points)
    outcome = lab.cluster(points, args.k, args.algorithm)
    solution = outcome.best if isinstance(outcome, FgkaResult) else outcome

    result: Dict[str, Any] = {"algorithm": args.algorithm, "k": args.k, "points": len(points), "solution": solution.to_dict()}
    written = [
        store.write_csv(
            store.path("cluster", "labels.csv"), ["index", "label"], list(enumerate(solution.labels))
        )
    ]
    if isinstance(outcome, FgkaResult):
        result.update({"generations": outcome.generations, "stop_reason": outcome.stop_reason.value})
        trace_rows = [[g.generation, g.best_twcv, g.mean_twcv, g.legal_fraction] for g in outcome.trace]
        written.append(
            store.write_csv(
                store.path("cluster", "trace.csv"),
                ["generation", "best_twcv", "mean_twcv", "legal_fraction"],
                trace_rows,
            )
        )
    if args.check:
        optimum, _ = brute_force_twcv(points, args.k)
        result["optimal_twcv"] = optimum
    written.append(store.write_json(store.path("cluster", "result.json"), result))
    return written


COMMANDS = {
    "gen": cmd_gen,
    "profile-fit": cmd_profile_fit,
    "schedule-run": cmd_schedule_run,
    "compare": cmd_compare,
    "cluster": cmd_cluster,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command and return its exit status."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.debug else logging.INFO,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config, config_overrides(args))
        lab = new_lab(config, debug=args.debug)
        for path in COMMANDS[args.command](lab, args):
            print(path)
    except IASLabError as e:
        logger.error("%s", e)
        return e.exit_code
    except ValueError as e:
        logger.error("invalid arguments: %s", e)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
