"""Interference-aware scheduling.

Tasks are featurized and clustered with one cluster per VM. Each clustering
becomes a candidate assignment, the interference model predicts every
candidate's makespan, and the lowest prediction is committed.
"""

import logging
from collections import OrderedDict
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..models.clustering import ClusterSolution, FgkaParams
from ..models.features import FeatureVector, Point
from ..models.interference import QuadraticInterferenceModel
from ..models.rng import RngLike, RngStream
from ..models.scheduling import (
    Assignment,
    AssignmentScore,
    CandidateScore,
    DecisionReport,
    FeatureScales,
    Policy,
    SchedulerParams,
    ScheduleDecision,
    VmDescriptor,
)
from ..models.task import TaskProfile
from .exceptions import InvalidTopology, KTooLarge, UnmappedTask
from .fgka import fgka_run, kmeanspp_baseline
from .predictor import design_matrix

logger = logging.getLogger(__name__)

_EXHAUSTIVE_LIMIT = 2**16
_EXHAUSTIVE_CHUNK = 4096

HostPair = Tuple[VmDescriptor, VmDescriptor]


def feature_vector(task: TaskProfile, scales: Optional[FeatureScales] = None) -> FeatureVector:
    """Controllers of a single task."""
    s = scales or FeatureScales()
    return FeatureVector(
        p=(
            s.kappa1 * task.process_count,
            s.kappa2 * task.data_size,
            task.io_rate,
            s.kappa4 * task.data_size,
            float(task.process_count),
        )
    )


def featurize(task: TaskProfile, scales: Optional[FeatureScales] = None) -> Point:
    """Clustering pattern of a task (its five controllers)."""
    return Point(coords=feature_vector(task, scales).p)


def aggregate_features(tasks: Sequence[TaskProfile], scales: Optional[FeatureScales] = None) -> FeatureVector:
    """Coordinate-wise sum of the tasks' controllers; zero when empty."""
    if not tasks:
        return FeatureVector.zeros()
    total = np.sum([feature_vector(t, scales).as_array() for t in tasks], axis=0)
    return FeatureVector.from_array(total)


def vm_layout(hosts: int) -> List[VmDescriptor]:
    """Idle VMs for ``hosts`` hosts, two per host, ids ``h<i>-vm<j>``."""
    return [VmDescriptor(vm_id=f"h{h}-vm{v}", host_id=f"h{h}") for h in range(hosts) for v in range(2)]


def host_pairs(vms: Sequence[VmDescriptor]) -> "OrderedDict[str, HostPair]":
    """Group VMs by host in order of first appearance.

    Raises:
        InvalidTopology: If a host does not carry exactly two VMs or a VM id repeats
    """
    grouped: "OrderedDict[str, List[VmDescriptor]]" = OrderedDict()
    seen = set()
    for vm in vms:
        if vm.vm_id in seen:
            raise InvalidTopology("duplicate VM id", context={"vm_id": vm.vm_id})
        seen.add(vm.vm_id)
        grouped.setdefault(vm.host_id, []).append(vm)
    bad = {host: len(members) for host, members in grouped.items() if len(members) != 2}
    if bad:
        raise InvalidTopology("every host needs exactly two VMs", context={"hosts": bad})
    return OrderedDict((host, (members[0], members[1])) for host, members in grouped.items())


def round_robin_assignment(
    batch: Sequence[TaskProfile],
    vms: Sequence[VmDescriptor],
    *,
    offset: int = 0,
    policy_tag: Policy = Policy.ROUND_ROBIN,
) -> Assignment:
    """Task i goes to ``vms[(i + offset) % len(vms)]``."""
    k = len(vms)
    return Assignment(
        mapping={task.id: vms[(i + offset) % k].vm_id for i, task in enumerate(batch)},
        policy_tag=policy_tag,
    )


def _vm_order(vms: Sequence[VmDescriptor]) -> List[int]:
    host_index: Dict[str, int] = {}
    slot: List[int] = []
    per_host: Dict[str, int] = {}
    for vm in vms:
        host_index.setdefault(vm.host_id, len(host_index))
        slot.append(per_host.get(vm.host_id, 0))
        per_host[vm.host_id] = slot[-1] + 1
    return sorted(
        range(len(vms)),
        key=lambda i: (vms[i].current_load.p[2], slot[i], host_index[vms[i].host_id]),
    )


def match_clusters(
    solution: ClusterSolution,
    batch: Sequence[TaskProfile],
    vms: Sequence[VmDescriptor],
    *,
    policy_tag: Policy,
) -> Assignment:
    """Turn a clustering into an assignment.

    Clusters ordered by aggregate I/O rate (descending, lower label first on
    ties) are matched to VMs ordered by resident I/O load (ascending), then
    slot within the host, then host order.
    """
    if solution.k != len(vms) or solution.n_points != len(batch):
        raise ValueError("solution must have one label per task and one cluster per VM")
    io = np.zeros(solution.k)
    for task, label in zip(batch, solution.labels):
        io[label - 1] += task.io_rate
    cluster_order = sorted(range(solution.k), key=lambda j: (-io[j], j))
    vm_for_cluster = {cluster: vms[v] for cluster, v in zip(cluster_order, _vm_order(vms))}
    return Assignment(
        mapping={task.id: vm_for_cluster[label - 1].vm_id for task, label in zip(batch, solution.labels)},
        policy_tag=policy_tag,
    )


def _dedupe(candidates: Sequence[Assignment]) -> List[Assignment]:
    seen = set()
    unique = []
    for candidate in candidates:
        key = candidate.key()
        if key not in seen:
            seen.add(key)
            unique.append(candidate)
    return unique


def _padding_candidates(
    batch: Sequence[TaskProfile], vms: Sequence[VmDescriptor], policy: Policy, limit: int
) -> List[Assignment]:
    rotations = []
    for offset in range(min(len(vms), limit)):
        tag = Policy.ROUND_ROBIN if offset == 0 else policy
        rotations.append(round_robin_assignment(batch, vms, offset=offset, policy_tag=tag))
    return _dedupe(rotations)


def _substream(rng: RngLike, name: str) -> RngLike:
    # A shared generator is consumed in call order instead
    return rng.derive(name) if isinstance(rng, RngStream) else rng


def generate_candidates(
    batch: Sequence[TaskProfile],
    vms: Sequence[VmDescriptor],
    params: Optional[SchedulerParams] = None,
    rng: RngLike = None,  # type: ignore[assignment]
    *,
    policy: Policy = Policy.FGKA_PP,
    fgka_params: Optional[FgkaParams] = None,
) -> List[Assignment]:
    """Candidate assignments of ``batch`` onto ``vms`` for one policy.

    ``fgka_pp`` yields the best FGKA++ solution, the k-means++ baseline
    clustering and the next best distinct solutions of the final population
    (M slots between them), then a round-robin guard. ``kmeans_pp`` yields
    the baseline clustering alone. Both draw the baseline from the
    ``"kmeans"`` child of ``rng``, so on one stream the ``fgka_pp`` pool
    contains the ``kmeans_pp`` placement. ``round_robin`` yields one
    candidate. With more VMs than tasks every task is placed alone, one
    rotation per candidate.

    Args:
        batch: Tasks to place
        vms: Available VMs (two per host)
        params: Feature scales and the number M of population candidates
        rng: Random stream for clustering
        policy: Which candidate generator to run
        fgka_params: Genetic algorithm settings

    Returns:
        De-duplicated candidates, at most M + 2 of them
    """
    params = params or SchedulerParams()
    if not batch:
        raise ValueError("cannot schedule an empty batch")
    if not vms:
        raise ValueError("at least one VM is required")
    host_pairs(vms)
    limit = params.top_m + 2

    if policy == Policy.ROUND_ROBIN:
        return [round_robin_assignment(batch, vms)]
    if rng is None:
        raise ValueError(f"policy {policy.value} needs a random stream")

    points = [featurize(task, params.scales) for task in batch]
    try:
        baseline = kmeanspp_baseline(points, len(vms), _substream(rng, "kmeans"))
        if policy == Policy.KMEANS_PP:
            return [match_clusters(baseline, batch, vms, policy_tag=policy)]
        result = fgka_run(points, len(vms), fgka_params or FgkaParams(), _substream(rng, "fgka"))
    except KTooLarge:
        logger.debug("%d VMs for %d tasks: padding with singleton placements", len(vms), len(batch))
        return _padding_candidates(batch, vms, policy, limit)

    tagged = [(result.best, policy)]
    if params.top_m > 0:
        tagged.append((baseline, Policy.KMEANS_PP))
    labelings = {s.labels for s, _ in tagged}
    for solution in sorted(result.population.solutions, key=lambda s: s.twcv):
        if len(tagged) >= params.top_m + 1:
            break
        if solution.labels not in labelings:
            labelings.add(solution.labels)
            tagged.append((solution, policy))

    candidates = [match_clusters(s, batch, vms, policy_tag=tag) for s, tag in tagged]
    candidates.append(round_robin_assignment(batch, vms))
    return _dedupe(candidates)[:limit]


def _check_total(assignment: Assignment, batch: Sequence[TaskProfile], vms: Sequence[VmDescriptor]) -> None:
    vm_ids = {vm.vm_id for vm in vms}
    task_ids = {task.id for task in batch}
    missing = sorted(task_ids - set(assignment.mapping))
    extra = sorted(set(assignment.mapping) - task_ids)
    unknown = sorted({vm for vm in assignment.mapping.values() if vm not in vm_ids})
    if missing or extra or unknown:
        raise UnmappedTask(
            "assignment is not a total map of the batch onto known VMs",
            context={"missing": missing, "extra": extra, "unknown_vms": unknown},
        )


def score_assignment(
    assignment: Assignment,
    batch: Sequence[TaskProfile],
    vms: Sequence[VmDescriptor],
    model: QuadraticInterferenceModel,
    scales: Optional[FeatureScales] = None,
) -> AssignmentScore:
    """Predicted makespan of an assignment; lower is better.

    Each host is predicted symmetrically as the larger of the two VM
    orderings, and the score is the largest host prediction. Negative
    predictions are clamped to 0 and flagged.

    Raises:
        UnmappedTask: If the assignment does not cover the batch exactly
        InvalidTopology: If a host does not carry exactly two VMs
    """
    pairs = host_pairs(vms)
    _check_total(assignment, batch, vms)
    by_vm: Dict[str, List[TaskProfile]] = {vm.vm_id: [] for vm in vms}
    for task in batch:
        by_vm[assignment.mapping[task.id]].append(task)

    F1 = np.array([(aggregate_features(by_vm[a.vm_id], scales) + a.current_load).p for a, _ in pairs.values()])
    F2 = np.array([(aggregate_features(by_vm[b.vm_id], scales) + b.current_load).p for _, b in pairs.values()])
    theta = model.to_vector()
    forward = design_matrix(F1, F2) @ theta
    backward = design_matrix(F2, F1) @ theta
    raw = np.maximum(forward, backward)

    negative = bool(np.any(raw < 0))
    if negative:
        logger.warning("model predicted a negative runtime; clamping to 0")
    per_host = {host: max(float(v), 0.0) for host, v in zip(pairs, raw)}
    return AssignmentScore(makespan=max(per_host.values()), per_host=per_host, negative_prediction=negative)


def schedule(
    batch: Sequence[TaskProfile],
    vms: Sequence[VmDescriptor],
    model: Optional[QuadraticInterferenceModel],
    params: Optional[SchedulerParams] = None,
    rng: RngLike = None,  # type: ignore[assignment]
    *,
    policy: Policy = Policy.FGKA_PP,
    fgka_params: Optional[FgkaParams] = None,
) -> ScheduleDecision:
    """Generate candidates, score them and commit the lowest prediction.

    Ties go to the earliest candidate. A policy that yields a single
    candidate commits it unconditionally, and then ``model`` may be None.

    Returns:
        The committed assignment with a report of every candidate
    """
    params = params or SchedulerParams()
    candidates = generate_candidates(batch, vms, params, rng, policy=policy, fgka_params=fgka_params)
    if model is None and len(candidates) > 1:
        raise ValueError(f"policy {policy.value} needs a fitted model to rank {len(candidates)} candidates")

    rows: List[CandidateScore] = []
    warnings: List[str] = []
    best_index, best_value = 0, np.inf
    for index, candidate in enumerate(candidates):
        predicted: Optional[float] = None
        if model is not None:
            score = score_assignment(candidate, batch, vms, model, params.scales)
            predicted = score.makespan
            if score.negative_prediction:
                warnings.append(f"candidate {index}: negative prediction clamped to 0")
            if predicted < best_value:
                best_index, best_value = index, predicted
        rows.append(
            CandidateScore(
                candidate_index=index,
                policy_tag=candidate.policy_tag,
                mapping=candidate.mapping,
                predicted_makespan_s=predicted,
            )
        )

    chosen = candidates[best_index]
    logger.info(
        "%s committed candidate %d of %d (predicted makespan %s)",
        policy.value,
        best_index,
        len(candidates),
        rows[best_index].predicted_makespan_s,
    )
    report = DecisionReport(policy=policy, candidates=tuple(rows), chosen_index=best_index, warnings=tuple(warnings))
    return ScheduleDecision(assignment=chosen, report=report, predicted_makespan_s=rows[best_index].predicted_makespan_s)


def exhaustive_schedule(
    batch: Sequence[TaskProfile],
    vms: Sequence[VmDescriptor],
    model: QuadraticInterferenceModel,
    scales: Optional[FeatureScales] = None,
) -> Tuple[Dict[str, str], AssignmentScore]:
    """Best of all K^N assignments by predicted makespan (small batches only).

    Assignments are enumerated in lexicographic VM order, last task fastest,
    and the first one reaching the minimum wins.
    """
    k, n = len(vms), len(batch)
    if not batch:
        raise ValueError("cannot schedule an empty batch")
    if k**n > _EXHAUSTIVE_LIMIT:
        raise ValueError(f"{k}^{n} assignments is too many to enumerate")
    pairs = host_pairs(vms)
    position = {vm.vm_id: i for i, vm in enumerate(vms)}
    first = np.array([position[a.vm_id] for a, _ in pairs.values()])
    second = np.array([position[b.vm_id] for _, b in pairs.values()])
    load = np.array([vm.current_load.p for vm in vms], dtype=float)
    features = np.array([feature_vector(task, scales).p for task in batch], dtype=float)
    theta = model.to_vector()

    best_index, best_value = 0, np.inf
    for start in range(0, k**n, _EXHAUSTIVE_CHUNK):
        codes = np.arange(start, min(start + _EXHAUSTIVE_CHUNK, k**n))
        choice = np.stack(np.unravel_index(codes, (k,) * n), axis=1)
        # (assignments, VMs, features): per-VM sums plus the standing load
        onehot = (choice[:, :, None] == np.arange(k)[None, None, :]).astype(float)
        per_vm = np.einsum("atv,tf->avf", onehot, features) + load[None, :, :]
        F1 = per_vm[:, first, :].reshape(-1, features.shape[1])
        F2 = per_vm[:, second, :].reshape(-1, features.shape[1])
        raw = np.maximum(design_matrix(F1, F2) @ theta, design_matrix(F2, F1) @ theta)
        makespan = np.maximum(raw, 0.0).reshape(len(codes), len(pairs)).max(axis=1)
        i = int(np.argmin(makespan))
        if makespan[i] < best_value:
            best_index, best_value = start + i, float(makespan[i])

    choice = np.unravel_index(best_index, (k,) * n)
    mapping = {task.id: vms[int(v)].vm_id for task, v in zip(batch, choice)}
    score = score_assignment(Assignment(mapping=mapping, policy_tag=Policy.FGKA_PP), batch, vms, model, scales)
    return mapping, score
