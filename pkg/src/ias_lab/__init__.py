"""Interference-aware VM scheduling lab.

Fits a quadratic interference model, clusters tasks with FGKA++ and
compares scheduling policies on a deterministic co-location simulator.
"""

import logging
from typing import List, Optional, Sequence, Tuple, Union

from .lab.config import load_config
from .lab.exceptions import IASLabError
from .lab.experiment import ab_experiment
from .lab.fgka import fgka_run, kmeanspp_baseline
from .lab.predictor import OnlinePredictor, lm_fit
from .lab.profiling import build_profile_dataset
from .lab.scheduler import schedule, vm_layout
from .lab.sim import build_world, gen_workload, run_sim
from .models.clustering import ClusterSolution, FgkaResult
from .models.config import ExperimentConfig
from .models.features import Point
from .models.interference import FitReport, ProfileSample, QuadraticInterferenceModel
from .models.rng import RngStream
from .models.scheduling import Assignment, Policy, ScheduleDecision
from .models.simulation import ComparisonTable, SimMetrics, WorldSpec
from .models.task import TaskProfile

__version__ = "0.1.0"

logger = logging.getLogger(__name__)


def new_lab(config: Optional[ExperimentConfig] = None, *, debug: bool = False) -> "Lab":
    """Create a lab bound to one configuration.

    Args:
        config: Experiment configuration (defaults when omitted)
        debug: Enable DEBUG logging for the package

    Returns:
        Lab instance
    """
    if debug:
        logging.getLogger(__name__).setLevel(logging.DEBUG)
    return Lab(config or ExperimentConfig())


class Lab:
    """Every lab operation, wired to one configuration and seed.

    Each operation draws from its own named stream derived from the
    configured seed, so results do not depend on call order.
    """

    def __init__(self, config: ExperimentConfig) -> None:
        self.config = config
        self._world: Optional[WorldSpec] = None

    def rng(self, *names: object) -> RngStream:
        return RngStream(seed=self.config.seed).derive(*names)

    @property
    def world(self) -> WorldSpec:
        """The simulated world, built on first use."""
        if self._world is None:
            c = self.config
            self._world = build_world(c.world, c.workload, c.scheduler.scales, c.seed)
        return self._world

    def generate_workload(self) -> List[TaskProfile]:
        return gen_workload(self.config.workload, self.rng("workload"))

    def profile(self) -> List[ProfileSample]:
        c = self.config
        return build_profile_dataset(self.world, c.workload, c.profiling, self.rng("profile"))

    def fit(self, samples: Sequence[ProfileSample]) -> Tuple[QuadraticInterferenceModel, FitReport]:
        """Fit a model from zero coefficients with the configured LM options."""
        return lm_fit(samples, QuadraticInterferenceModel.zeros(), self.config.lm)

    def online_predictor(self, model: QuadraticInterferenceModel) -> OnlinePredictor:
        """Windowed refitting seeded with ``model``, sized by ``profiling.window_size``."""
        return OnlinePredictor(model, opts=self.config.lm, window_size=self.config.profiling.window_size)

    def schedule(
        self,
        tasks: Sequence[TaskProfile],
        model: Optional[QuadraticInterferenceModel],
        policy: Union[Policy, str],
    ) -> ScheduleDecision:
        policy = Policy(policy)
        return schedule(
            tasks,
            vm_layout(self.world.hosts),
            model,
            self.config.scheduler,
            self.rng("schedule"),
            policy=policy,
            fgka_params=self.config.fgka,
        )

    def simulate(self, assignment: Assignment, tasks: Sequence[TaskProfile]) -> SimMetrics:
        return run_sim(assignment, tasks, self.world)

    def compare(self, model: Optional[QuadraticInterferenceModel] = None, *, jobs: int = 1) -> ComparisonTable:
        c = self.config
        return ab_experiment(
            c.workload,
            self.world,
            c.experiment.policies,
            model,
            c.experiment.trials,
            self.rng("compare"),
            scheduler=c.scheduler,
            fgka=c.fgka,
            profiling=c.profiling,
            lm=c.lm,
            fit_model=c.experiment.fit_model,
            jobs=jobs,
        )

    def cluster(self, points: Sequence[Point], k: int, algorithm: str = "fgka") -> Union[FgkaResult, ClusterSolution]:
        """Cluster points with FGKA++ (``fgka``) or the k-means++ baseline (``kmeans``)."""
        if algorithm == "fgka":
            return fgka_run(points, k, self.config.fgka, self.rng("cluster", "fgka"))
        if algorithm == "kmeans":
            return kmeanspp_baseline(points, k, self.rng("cluster", "kmeans"))
        raise ValueError(f"unknown clustering algorithm {algorithm!r}")


__all__ = [
    "IASLabError",
    "Lab",
    "load_config",
    "new_lab",
    "__version__",
]
