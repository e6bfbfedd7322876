"""Discrete-event co-location simulator.

Hosts carry two VMs. Each VM runs its queue one task at a time, first in
first out. A running task is slowed by the task currently running on the
sibling VM of the same host; whenever that partner changes, the remaining
work is rescaled to the new rate.
"""

import logging
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError

from ..models.interference import (
    ALPHA2,
    BETA_CROSS,
    BETA_WITHIN2,
    GAMMA2,
    QuadraticInterferenceModel,
    beta_cross_index,
)
from ..models.common import N_COEFFICIENTS
from ..models.rng import RngLike, RngStream, as_generator
from ..models.scheduling import Assignment, FeatureScales
from ..models.simulation import (
    INR_PER_SECOND,
    ArrivalLaw,
    SimMetrics,
    TaskRecord,
    WorkloadSpec,
    WorldConfig,
    WorldSpec,
)
from ..models.task import FileKind, TaskProfile
from .exceptions import ConfigError, UnmappedTask
from .predictor import design_matrix
from .scheduler import feature_vector, host_pairs, round_robin_assignment, vm_layout

logger = logging.getLogger(__name__)

_KINDS = list(FileKind)
_VALIDATION_SAMPLES = 512


def gen_workload(spec: WorkloadSpec, rng: RngLike) -> List[TaskProfile]:
    """Draw ``spec.task_count`` tasks with independent attributes.

    Base runtime is ``runtime_rates[kind] * data_size``. Batch arrivals are
    all at 0; Poisson arrivals accumulate exponential gaps.
    """
    n = spec.task_count
    if n == 0:
        return []
    gen = as_generator(rng)
    weights = np.array([spec.file_kind_weights.get(kind, 0.0) for kind in _KINDS], dtype=float)
    kinds = gen.choice(len(_KINDS), size=n, p=weights / weights.sum())
    sizes = gen.uniform(*spec.data_size_range, size=n)
    processes = gen.integers(spec.process_count_range[0], spec.process_count_range[1] + 1, size=n)
    io = gen.uniform(*spec.io_rate_range, size=n)
    if spec.arrival == ArrivalLaw.POISSON:
        arrivals = np.cumsum(gen.exponential(1.0 / spec.poisson_rate, size=n))
    else:
        arrivals = np.zeros(n)

    width = max(3, len(str(n)))
    tasks = []
    for i in range(n):
        kind = _KINDS[int(kinds[i])]
        size = float(sizes[i])
        tasks.append(
            TaskProfile(
                id=f"task-{i + 1:0{width}d}",
                file_kind=kind,
                data_size=size,
                process_count=int(processes[i]),
                io_rate=float(io[i]),
                arrival_time=float(arrivals[i]),
                base_runtime=spec.runtime_rates[kind] * size,
            )
        )
    return tasks


def _multipliers(world: WorldSpec, F_self: np.ndarray, F_other: np.ndarray) -> np.ndarray:
    g = design_matrix(F_self, F_other) @ world.hidden_model.to_vector()
    return 1.0 + world.interference_scale * g


def interference_multiplier(
    task: TaskProfile, co_resident_tasks: Sequence[TaskProfile], world: WorldSpec
) -> float:
    """Slowdown factor of ``task`` next to ``co_resident_tasks`` on the sibling VM."""
    f_self = feature_vector(task, world.feature_scales).as_array()
    f_other = np.zeros_like(f_self)
    for other in co_resident_tasks:
        f_other = f_other + feature_vector(other, world.feature_scales).as_array()
    return float(_multipliers(world, f_self[None, :], f_other[None, :])[0])


def ground_truth_runtime(task: TaskProfile, co_resident_tasks: Sequence[TaskProfile], world: WorldSpec) -> float:
    """Runtime of ``task`` while the sibling VM runs ``co_resident_tasks`` throughout.

    With no co-residents the hidden model contributes nothing and the result
    is ``task.base_runtime`` exactly.
    """
    if not co_resident_tasks:
        return task.base_runtime
    return task.base_runtime * interference_multiplier(task, co_resident_tasks, world)


def compute_cost(metrics: Union[SimMetrics, float]) -> float:
    """Billed cost in INR: makespan seconds at the per-second rate, to 2 decimals."""
    makespan = metrics.makespan if isinstance(metrics, SimMetrics) else float(metrics)
    return round(makespan * INR_PER_SECOND, 2)


class _Running:
    __slots__ = ("index", "start", "finish", "multiplier")

    def __init__(self, index: int, start: float, finish: float, multiplier: float) -> None:
        self.index = index
        self.start = start
        self.finish = finish
        self.multiplier = multiplier


def _check_assignment(assignment: Assignment, tasks: Sequence[TaskProfile], vm_ids: Sequence[str]) -> None:
    known = set(vm_ids)
    task_ids = [t.id for t in tasks]
    missing = [tid for tid in task_ids if tid not in assignment.mapping]
    unknown = sorted({vm for tid, vm in assignment.mapping.items() if vm not in known})
    extra = sorted(set(assignment.mapping) - set(task_ids))
    if len(set(task_ids)) != len(task_ids):
        raise UnmappedTask("task ids must be unique", context={"tasks": len(task_ids)})
    if missing or unknown or extra:
        raise UnmappedTask(
            "assignment does not place every task on a known VM",
            context={"missing": missing, "unknown_vms": unknown, "extra": extra},
        )


def execute(assignment: Assignment, tasks: Sequence[TaskProfile], world: WorldSpec) -> List[TaskRecord]:
    """Run the event loop and return one record per task in ``tasks`` order.

    Raises:
        UnmappedTask: If the assignment is not total over ``tasks``
    """
    vms = vm_layout(world.hosts)
    _check_assignment(assignment, tasks, [vm.vm_id for vm in vms])
    sibling: Dict[str, str] = {}
    host_of: Dict[str, str] = {}
    for host, (a, b) in host_pairs(vms).items():
        sibling[a.vm_id], sibling[b.vm_id] = b.vm_id, a.vm_id
        host_of[a.vm_id] = host_of[b.vm_id] = host

    features = np.array([feature_vector(t, world.feature_scales).p for t in tasks], dtype=float).reshape(-1, 5)
    zero = np.zeros(5)
    queues: Dict[str, List[int]] = {vm.vm_id: [] for vm in vms}
    for i, task in enumerate(tasks):
        queues[assignment.mapping[task.id]].append(i)
    heads = {vm_id: 0 for vm_id in queues}
    running: Dict[str, Optional[_Running]] = {vm_id: None for vm_id in queues}
    starts: Dict[int, float] = {}
    ends: Dict[int, float] = {}
    now = 0.0
    events = 0

    while True:
        for vm_id, queue in queues.items():
            if running[vm_id] is None and heads[vm_id] < len(queue):
                idx = queue[heads[vm_id]]
                if tasks[idx].arrival_time <= now:
                    heads[vm_id] += 1
                    starts[idx] = now
                    running[vm_id] = _Running(idx, now, now + tasks[idx].base_runtime, 1.0)

        active = [vm_id for vm_id, r in running.items() if r is not None]
        if active:
            F_self = np.array([features[running[v].index] for v in active])  # type: ignore[union-attr]
            F_other = np.array(
                [features[running[sibling[v]].index] if running[sibling[v]] else zero for v in active]  # type: ignore[union-attr]
            )
            for vm_id, mult in zip(active, _multipliers(world, F_self, F_other)):
                job = running[vm_id]
                assert job is not None
                mult = float(mult)
                if mult != job.multiplier:
                    remaining_work = (job.finish - now) / job.multiplier
                    job.finish = now + remaining_work * mult
                    job.multiplier = mult

        pending = [
            tasks[queue[heads[vm_id]]].arrival_time
            for vm_id, queue in queues.items()
            if running[vm_id] is None and heads[vm_id] < len(queue)
        ]
        finishes = [running[v].finish for v in active]  # type: ignore[union-attr]
        if not finishes and not pending:
            break
        now = min(finishes + pending)
        events += 1
        for vm_id in active:
            job = running[vm_id]
            assert job is not None
            if job.finish <= now:
                ends[job.index] = job.finish
                running[vm_id] = None

    logger.debug("simulated %d tasks in %d events", len(tasks), events)
    records = []
    for i, task in enumerate(tasks):
        vm_id = assignment.mapping[task.id]
        runtime = ends[i] - starts[i]
        records.append(
            TaskRecord(
                task_id=task.id,
                vm_id=vm_id,
                host_id=host_of[vm_id],
                start=starts[i],
                end=ends[i],
                base_runtime=task.base_runtime,
                cpu_utilization=(features[i, 0] + features[i, 1]) / 100.0 * runtime,
            )
        )
    return records


def run_sim(
    assignment: Assignment,
    tasks: Sequence[TaskProfile],
    world: WorldSpec,
    *,
    reference_throughput: Optional[float] = None,
) -> SimMetrics:
    """Execute an assignment and compute its metrics.

    Normalized throughput is measured against the round-robin placement of
    the same tasks on the same world. Pass ``reference_throughput`` to reuse
    an already simulated reference.

    Raises:
        UnmappedTask: If the assignment is not total over ``tasks``
    """
    records = execute(assignment, tasks, world)
    completed = len(records)
    makespan = max((r.end for r in records), default=0.0)
    throughput = completed / makespan if makespan > 0 else 0.0

    if reference_throughput is None:
        reference = round_robin_assignment(tasks, vm_layout(world.hosts))
        if tasks and reference.key() != assignment.key():
            ref_records = execute(reference, tasks, world)
            ref_makespan = max(r.end for r in ref_records)
            reference_throughput = completed / ref_makespan if ref_makespan > 0 else 0.0
        else:
            reference_throughput = throughput
    normalized = throughput / reference_throughput if reference_throughput > 0 and throughput > 0 else 1.0

    return SimMetrics(
        completed=completed,
        makespan=makespan,
        throughput=throughput,
        normalized_throughput=normalized,
        cost=compute_cost(makespan),
        per_task=tuple(records),
    )


# --- world construction ------------------------------------------------------


def random_hidden_model(rng: RngLike) -> QuadraticInterferenceModel:
    """Random non-negative ground truth acting only through the co-located load.

    I/O against I/O and CPU against CPU dominate the cross block; the
    intercept and every term of the running task alone are zero.
    """
    gen = as_generator(rng)
    theta = np.zeros(N_COEFFICIENTS)
    theta[ALPHA2] = gen.uniform(0.0, 5.0, size=5)
    theta[BETA_CROSS] = gen.uniform(0.0, 0.05, size=25)
    theta[beta_cross_index(2, 2)] = gen.uniform(0.8, 1.2)
    theta[beta_cross_index(0, 0)] = gen.uniform(3.0, 5.0)
    theta[BETA_WITHIN2] = gen.uniform(0.0, 0.01, size=10)
    theta[GAMMA2] = gen.uniform(0.0, 0.01, size=5)
    return QuadraticInterferenceModel.from_vector(theta)


def _heaviest_task(spec: WorkloadSpec) -> TaskProfile:
    return TaskProfile(
        id="heaviest",
        file_kind=FileKind.PDF,
        data_size=spec.data_size_range[1],
        process_count=spec.process_count_range[1],
        io_rate=spec.io_rate_range[1],
        base_runtime=1.0,
    )


def calibrate_interference_scale(
    hidden: QuadraticInterferenceModel,
    spec: WorkloadSpec,
    scales: Optional[FeatureScales] = None,
    max_multiplier: float = 3.0,
) -> float:
    """Scale that maps the largest possible slowdown onto ``max_multiplier``.

    With non-negative coefficients the slowdown is largest when both tasks
    take the top of every attribute range.
    """
    scales = scales or FeatureScales()
    top = feature_vector(_heaviest_task(spec), scales).as_array()
    g_max = float(design_matrix(top[None, :], top[None, :])[0] @ hidden.to_vector())
    if g_max <= 0:
        return 1.0
    return (max_multiplier - 1.0) / g_max


def sample_multipliers(world: WorldSpec, spec: WorkloadSpec, rng: RngLike, samples: int = _VALIDATION_SAMPLES) -> np.ndarray:
    """Slowdown factors of random task pairs drawn from ``spec``."""
    tasks = gen_workload(spec.model_copy(update={"task_count": 2 * samples, "arrival": ArrivalLaw.BATCH}), rng)
    F = np.array([feature_vector(t, world.feature_scales).p for t in tasks])
    return _multipliers(world, F[:samples], F[samples:])


def build_world(
    config: WorldConfig,
    workload: WorkloadSpec,
    scales: Optional[FeatureScales] = None,
    seed: int = 0,
) -> WorldSpec:
    """Resolve a world configuration into a validated ``WorldSpec``.

    Raises:
        ConfigError: If the hidden model is not a pure co-location model or
            sampled slowdowns fall outside ``[1, max_multiplier]``
    """
    scales = scales or FeatureScales()
    stream = RngStream(seed=seed).derive("world")
    hidden = config.hidden_model or random_hidden_model(stream.derive("hidden"))
    scale = config.interference_scale or calibrate_interference_scale(hidden, workload, scales, config.max_multiplier)
    try:
        world = WorldSpec(
            hosts=config.hosts,
            hidden_model=hidden,
            interference_scale=scale,
            feature_scales=scales,
            seed=seed,
        )
    except ValidationError as e:
        raise ConfigError("invalid world configuration", context={"errors": e.error_count()}) from e

    sampled = sample_multipliers(world, workload, stream.derive("validate"))
    low, high = float(sampled.min()), float(sampled.max())
    if low < 1.0 - 1e-12:
        raise ConfigError("hidden model speeds tasks up", context={"min_multiplier": low})
    if config.interference_scale is None and high > config.max_multiplier * (1 + 1e-9):
        raise ConfigError("calibrated multipliers exceed the configured maximum", context={"max_multiplier": high})
    if high > config.max_multiplier:
        logger.warning("sampled slowdown %.3f exceeds max_multiplier %.3f", high, config.max_multiplier)
    logger.debug("world: %d hosts, interference scale %.4g, slowdowns in [%.3f, %.3f]", world.hosts, scale, low, high)
    return world

