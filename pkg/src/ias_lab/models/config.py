"""Experiment configuration model.

Every field has a default, so ``ExperimentConfig()`` is the bundled
benchmark: two hosts, twenty tasks, thirty trials.
"""

from enum import Enum
from typing import Literal, Tuple

from pydantic import Field, field_validator

from ..models import IASModel
from .clustering import FgkaParams
from .interference import LMOptions
from .rng import U64_MAX
from .scheduling import Policy, SchedulerParams
from .simulation import WorkloadSpec, WorldConfig

SCHEMA_VERSION = 1


class ProfilingMode(str, Enum):
    SINGLE = "single"
    BATCH = "batch"


class ProfilingConfig(IASModel):
    """How interference profiles are collected before fitting.

    ``unit_runtime`` replays single-mode applications with a base runtime
    of one second, so the observed runtime is the slowdown factor itself.
    """

    mode: ProfilingMode = ProfilingMode.BATCH
    backgrounds: int = Field(default=120, ge=1)
    samples: int = Field(default=400, ge=1)
    max_group_size: int = Field(default=10, ge=1)
    noise_sigma: float = Field(default=0.0, ge=0)
    window_size: int = Field(default=1000, ge=1)
    unit_runtime: bool = False


class ExperimentSettings(IASModel):
    """A/B experiment settings."""

    trials: int = Field(default=30, ge=1)
    policies: Tuple[Policy, ...] = (Policy.KMEANS_PP, Policy.FGKA_PP, Policy.ROUND_ROBIN)
    fit_model: bool = True

    @field_validator('policies')
    @classmethod
    def validate_policies(cls, v: Tuple[Policy, ...]) -> Tuple[Policy, ...]:
        if not v:
            raise ValueError("at least one policy is required")
        if len(set(v)) != len(v):
            raise ValueError("policies must be distinct")
        return v


class ExperimentConfig(IASModel):
    """Root configuration document."""

    schema_version: Literal[1] = SCHEMA_VERSION
    experiment_name: str = Field(default="default", pattern=r"^[A-Za-z0-9_.-]+$")
    seed: int = Field(default=2024, ge=0, le=U64_MAX)
    output_dir: str = "results"
    timestamp: bool = True
    world: WorldConfig = WorldConfig()
    workload: WorkloadSpec = WorkloadSpec()
    fgka: FgkaParams = FgkaParams()
    lm: LMOptions = LMOptions()
    scheduler: SchedulerParams = SchedulerParams()
    profiling: ProfilingConfig = ProfilingConfig()
    experiment: ExperimentSettings = ExperimentSettings()
