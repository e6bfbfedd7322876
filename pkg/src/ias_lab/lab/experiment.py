"""Seeded A/B comparison of scheduling policies on the simulator."""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..models.clustering import FgkaParams
from ..models.config import ProfilingConfig
from ..models.interference import FitReport, LMOptions, QuadraticInterferenceModel
from ..models.rng import RngStream
from ..models.scheduling import Assignment, Policy, SchedulerParams
from ..models.simulation import (
    ComparisonRatios,
    ComparisonTable,
    PolicySummary,
    SimMetrics,
    TrialResult,
    WorkloadSpec,
    WorldSpec,
)
from ..models.task import TaskProfile
from .predictor import lm_fit
from .profiling import build_profile_dataset
from .scheduler import round_robin_assignment, schedule, vm_layout
from .sim import gen_workload, run_sim

logger = logging.getLogger(__name__)

MODEL_POLICIES = frozenset({Policy.FGKA_PP})


def fit_world_model(
    world: WorldSpec,
    workload: WorkloadSpec,
    rng: RngStream,
    *,
    profiling: Optional[ProfilingConfig] = None,
    lm: Optional[LMOptions] = None,
) -> Tuple[QuadraticInterferenceModel, FitReport]:
    """Profile the simulated world and fit a model from zero."""
    samples = build_profile_dataset(world, workload, profiling, rng.derive("profile"))
    return lm_fit(samples, QuadraticInterferenceModel.zeros(), lm)


def run_trial(
    trial: int,
    tasks: Sequence[TaskProfile],
    world: WorldSpec,
    policies: Sequence[Policy],
    model: Optional[QuadraticInterferenceModel],
    rng: RngStream,
    *,
    scheduler: Optional[SchedulerParams] = None,
    fgka: Optional[FgkaParams] = None,
) -> TrialResult:
    """Schedule and simulate one workload under every policy.

    Every policy schedules from the same ``"schedule"`` stream, so the
    k-means++ placement is also a candidate of FGKA++.
    """
    vms = vm_layout(world.hosts)
    reference = run_sim(round_robin_assignment(tasks, vms), tasks, world) if tasks else None
    reference_tp = reference.throughput if reference is not None else None

    metrics: Dict[str, SimMetrics] = {}
    predicted: Dict[str, Optional[float]] = {}
    for policy in policies:
        key = Policy(policy).value
        if not tasks:
            metrics[key] = run_sim(Assignment(mapping={}, policy_tag=policy), tasks, world)
            predicted[key] = None
            continue
        decision = schedule(
            tasks,
            vms,
            model,
            scheduler,
            rng.derive("schedule"),
            policy=policy,
            fgka_params=fgka,
        )
        metrics[key] = run_sim(decision.assignment, tasks, world, reference_throughput=reference_tp)
        predicted[key] = decision.predicted_makespan_s
    return TrialResult(trial=trial, metrics=metrics, predicted_makespan=predicted)


def _median_iqr(values: Sequence[float]) -> Tuple[float, float]:
    q1, median, q3 = np.percentile(np.asarray(values, dtype=float), [25, 50, 75])
    return float(median), float(q3 - q1)


def summarize(policy: str, results: Sequence[TrialResult]) -> PolicySummary:
    rows = [r.metrics[policy] for r in results]
    makespan = _median_iqr([m.makespan for m in rows])
    throughput = _median_iqr([m.throughput for m in rows])
    normalized = _median_iqr([m.normalized_throughput for m in rows])
    cost = _median_iqr([m.cost for m in rows])
    return PolicySummary(
        policy=policy,
        trials=len(rows),
        makespan_median=makespan[0],
        makespan_iqr=makespan[1],
        throughput_median=throughput[0],
        throughput_iqr=throughput[1],
        normalized_throughput_median=normalized[0],
        normalized_throughput_iqr=normalized[1],
        cost_median=cost[0],
        cost_iqr=cost[1],
    )


def _ratio(numerator: float, denominator: float) -> float:
    if denominator == 0:
        return 1.0
    return numerator / denominator


def compare_ratios(
    summaries: Dict[str, PolicySummary], results: Sequence[TrialResult]
) -> Optional[ComparisonRatios]:
    """FGKA++ relative to k-means++; None unless both ran.

    Makespan and cost ratios are k-means++ over FGKA++, throughput is
    FGKA++ over k-means++, so values above 1 favour FGKA++.
    """
    fg, km = Policy.FGKA_PP.value, Policy.KMEANS_PP.value
    if fg not in summaries or km not in summaries:
        return None
    wins = sum(
        1 for r in results if r.metrics[fg].normalized_throughput >= r.metrics[km].normalized_throughput
    )
    return ComparisonRatios(
        makespan_ratio=_ratio(summaries[km].makespan_median, summaries[fg].makespan_median),
        throughput_ratio=_ratio(summaries[fg].throughput_median, summaries[km].throughput_median),
        cost_ratio=_ratio(summaries[km].cost_median, summaries[fg].cost_median),
        improved_throughput=summaries[fg].normalized_throughput_median
        - summaries[km].normalized_throughput_median,
        normalized_throughput_win_fraction=wins / len(results) if results else 0.0,
    )


def ab_experiment(
    workload: WorkloadSpec,
    world: WorldSpec,
    policies: Sequence[Policy],
    model: Optional[QuadraticInterferenceModel],
    trials: int,
    rng: RngStream,
    *,
    scheduler: Optional[SchedulerParams] = None,
    fgka: Optional[FgkaParams] = None,
    profiling: Optional[ProfilingConfig] = None,
    lm: Optional[LMOptions] = None,
    fit_model: bool = True,
    jobs: int = 1,
) -> ComparisonTable:
    """Compare policies over ``trials`` seeded workloads.

    Trial ``t`` draws its workload and schedules from ``rng.derive("trial", t)``,
    so results do not depend on ``jobs`` or execution order. When no model is
    given and a policy needs one, the model is fitted from profiling runs
    first (unless ``fit_model`` is false).

    Returns:
        Per-trial metrics, per-policy median/IQR summaries and FGKA++ ratios
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    policies = [Policy(p) for p in policies]

    source = "provided"
    if model is None:
        if any(p in MODEL_POLICIES for p in policies):
            if not fit_model:
                raise ValueError("policies need a model but fitting is disabled")
            model, report = fit_world_model(world, workload, rng, profiling=profiling, lm=lm)
            logger.info("fitted model: sse %.4g over %d samples", report.final_sse, report.n_samples)
            source = "fitted"
        else:
            source = "none"

    def one(t: int) -> TrialResult:
        stream = rng.derive("trial", t)
        tasks = gen_workload(workload, stream.derive("workload"))
        return run_trial(t, tasks, world, policies, model, stream, scheduler=scheduler, fgka=fgka)

    if jobs == 1:
        results: List[TrialResult] = [one(t) for t in range(trials)]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, range(trials)))

    keys = [p.value for p in policies]
    summaries = {key: summarize(key, results) for key in keys}
    ratios = compare_ratios(summaries, results)
    if ratios is not None:
        logger.info(
            "FGKA++ vs k-means++: makespan ratio %.3f, throughput ratio %.3f, nt wins %.0f%%",
            ratios.makespan_ratio,
            ratios.throughput_ratio,
            100 * ratios.normalized_throughput_win_fraction,
        )
    return ComparisonTable(
        policies=tuple(keys),
        trials=tuple(results),
        summaries=summaries,
        ratios=ratios,
        model_source=source,
    )
