"""Clustering solution, population and GA parameter models."""

from enum import Enum
from typing import Optional, Tuple

from pydantic import Field, model_validator

from ..models import IASModel


class ClusterSolution(IASModel):
    """A chromosome b_1..b_N of 1-based cluster labels plus derived data.

    ``centroids``, ``sizes`` and ``twcv`` are caches computed from the labels
    and the clustered points when the solution is built; an empty cluster
    has centroid ``None``.
    """

    labels: Tuple[int, ...] = Field(min_length=1)
    k: int = Field(ge=1)
    centroids: Tuple[Optional[Tuple[float, ...]], ...]
    sizes: Tuple[int, ...]
    twcv: float = Field(ge=0, allow_inf_nan=False)

    @model_validator(mode='after')
    def check_consistency(self) -> "ClusterSolution":
        if any(label < 1 or label > self.k for label in self.labels):
            raise ValueError(f"labels must lie in [1, {self.k}]")
        if len(self.centroids) != self.k or len(self.sizes) != self.k:
            raise ValueError("centroids and sizes need one entry per cluster")
        if sum(self.sizes) != len(self.labels):
            raise ValueError("cluster sizes must add up to the number of points")
        return self

    @property
    def n_points(self) -> int:
        return len(self.labels)

    @property
    def non_empty(self) -> int:
        return sum(1 for s in self.sizes if s > 0)

    @property
    def legality(self) -> float:
        """e(S): fraction of non-empty clusters, in (0, 1]."""
        return self.non_empty / self.k

    @property
    def legal(self) -> bool:
        return self.non_empty == self.k


class FitnessContext(IASModel):
    """Generation-wide quantities the fitness of one solution depends on."""

    twcv_max: float = Field(ge=0)
    f_min_legal: Optional[float] = Field(default=None, gt=0)


class Population(IASModel):
    """One generation of the genetic search."""

    solutions: Tuple[ClusterSolution, ...] = Field(min_length=2)
    fitness: Tuple[float, ...]
    generation: int = Field(ge=0)
    best_so_far: ClusterSolution
    best_fitness: float = Field(gt=0)

    @model_validator(mode='after')
    def check_fitness(self) -> "Population":
        if len(self.fitness) != len(self.solutions):
            raise ValueError("one fitness value per solution is required")
        if any(not (f > 0) or f == float("inf") for f in self.fitness):
            raise ValueError("fitness values must be finite and > 0")
        return self

    @property
    def size(self) -> int:
        return len(self.solutions)


class FgkaParams(IASModel):
    """Genetic search parameters."""

    population_size: int = Field(default=20, ge=2)
    max_generations: int = Field(default=50, ge=1)
    stall_generations: int = Field(default=10, ge=1)
    mutation_rate: float = Field(default=1.0, ge=0.0, le=1.0)
    elitism: bool = False


class GenerationStats(IASModel):
    """One row of the run trace."""

    generation: int
    best_twcv: float
    mean_twcv: float
    legal_fraction: float


class StopReason(str, Enum):
    MAX_GENERATIONS = "max_generations"
    STALL = "stall"


class FgkaResult(IASModel):
    """Outcome of ``fgka_run``."""

    best: ClusterSolution
    best_fitness: float
    population: Population
    trace: Tuple[GenerationStats, ...]
    generations: int
    stop_reason: StopReason
