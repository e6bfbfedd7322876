"""Interference profiling: observe runtimes next to known background load."""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..models.config import ProfilingConfig, ProfilingMode
from ..models.features import FeatureVector
from ..models.interference import ProfileSample
from ..models.rng import RngLike, as_generator
from ..models.scheduling import Assignment, Policy
from ..models.simulation import ArrivalLaw, WorkloadSpec, WorldSpec
from ..models.task import TaskProfile
from .scheduler import aggregate_features, feature_vector
from .sim import execute, gen_workload, ground_truth_runtime

logger = logging.getLogger(__name__)

GroupPair = Tuple[Sequence[TaskProfile], Sequence[TaskProfile]]

_MIN_RUNTIME = 1e-9


def profile_workloads(
    app: TaskProfile,
    backgrounds: Sequence[Optional[TaskProfile]],
    world: WorldSpec,
) -> List[ProfileSample]:
    """Run ``app`` on VM1 against each background replayed on VM2.

    A ``None`` background is an idle sibling VM.
    """
    f_app = feature_vector(app, world.feature_scales)
    samples = []
    for background in backgrounds:
        if background is None:
            f_bg, runtime = FeatureVector.zeros(), ground_truth_runtime(app, [], world)
        else:
            f_bg = feature_vector(background, world.feature_scales)
            runtime = ground_truth_runtime(app, [background], world)
        samples.append(ProfileSample(features_vm1=f_app, features_vm2=f_bg, observed_runtime=runtime))
    return samples


def profile_batches(pairs: Sequence[GroupPair], world: WorldSpec) -> List[ProfileSample]:
    """Simulate task groups side by side on one host.

    The response is the completion time of the VM1 group; the features are
    the aggregated controllers of each group.
    """
    host = world.model_copy(update={"hosts": 1})
    samples = []
    for vm1_tasks, vm2_tasks in pairs:
        if not vm1_tasks:
            raise ValueError("every profiling pair needs at least one task on VM1")
        tasks = [t.model_copy(update={"arrival_time": 0.0}) for t in (*vm1_tasks, *vm2_tasks)]
        mapping = {t.id: "h0-vm0" for t in vm1_tasks}
        mapping.update({t.id: "h0-vm1" for t in vm2_tasks})
        records = execute(Assignment(mapping=mapping, policy_tag=Policy.ROUND_ROBIN), tasks, host)
        finish = max(r.end for r in records if r.vm_id == "h0-vm0")
        samples.append(
            ProfileSample(
                features_vm1=aggregate_features(vm1_tasks, world.feature_scales),
                features_vm2=aggregate_features(vm2_tasks, world.feature_scales),
                observed_runtime=finish,
            )
        )
    return samples


def _add_noise(samples: List[ProfileSample], sigma: float, gen: np.random.Generator) -> List[ProfileSample]:
    if sigma <= 0:
        return samples
    noise = gen.normal(0.0, sigma, size=len(samples))
    return [
        s.model_copy(update={"observed_runtime": max(s.observed_runtime + float(e), _MIN_RUNTIME)})
        for s, e in zip(samples, noise)
    ]


def build_profile_dataset(
    world: WorldSpec,
    workload: WorkloadSpec,
    profiling: Optional[ProfilingConfig] = None,
    rng: RngLike = None,  # type: ignore[assignment]
) -> List[ProfileSample]:
    """Collect ``profiling.samples`` observations from randomly drawn tasks.

    ``single`` mode pairs one application task with a background from a
    fixed pool (or an idle sibling); with ``unit_runtime`` the response is
    exactly quadratic in the features. ``batch`` mode simulates random groups
    of up to ``max_group_size`` tasks on each VM, which matches the
    aggregated load the scheduler predicts for.
    """
    profiling = profiling or ProfilingConfig()
    if rng is None:
        raise ValueError("profiling needs an explicit random stream")
    gen = as_generator(rng)
    batch_spec = workload.model_copy(update={"arrival": ArrivalLaw.BATCH})

    if profiling.mode == ProfilingMode.SINGLE:
        pool = gen_workload(batch_spec.model_copy(update={"task_count": profiling.backgrounds}), gen)
        apps = gen_workload(batch_spec.model_copy(update={"task_count": profiling.samples}), gen)
        if profiling.unit_runtime:
            apps = [app.model_copy(update={"base_runtime": 1.0}) for app in apps]
        picks = gen.integers(0, len(pool) + 1, size=len(apps))
        samples = []
        for app, pick in zip(apps, picks):
            background = pool[pick] if pick < len(pool) else None
            samples.extend(profile_workloads(app, [background], world))
    else:
        pairs = []
        for _ in range(profiling.samples):
            n1 = int(gen.integers(1, profiling.max_group_size + 1))
            n2 = int(gen.integers(0, profiling.max_group_size + 1))
            group = gen_workload(batch_spec.model_copy(update={"task_count": n1 + n2}), gen)
            pairs.append((group[:n1], group[n1:]))
        samples = profile_batches(pairs, world)

    logger.info("collected %d %s profile samples", len(samples), ProfilingMode(profiling.mode).value)
    return _add_noise(samples, profiling.noise_sigma, gen)
