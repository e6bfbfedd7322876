"""Workload, world and metric models for the co-location simulator."""

from enum import Enum
from typing import Dict, Literal, Optional, Tuple

from pydantic import Field, field_validator, model_validator

from ..models import IASModel
from .interference import ALPHA1, BETA_WITHIN1, GAMMA1, INTERCEPT, QuadraticInterferenceModel
from .scheduling import FeatureScales
from .task import FileKind

#: Billing rate of the cost model.
INR_PER_SECOND = 1.0


class ArrivalLaw(str, Enum):
    BATCH = "batch"
    POISSON = "poisson"


def _default_kind_weights() -> Dict[FileKind, float]:
    return {FileKind.PDF: 1.0, FileKind.IMAGE: 1.0, FileKind.TEXT: 1.0}


def _default_runtime_rates() -> Dict[FileKind, float]:
    # seconds of interference-free work per MB
    return {FileKind.PDF: 0.4, FileKind.IMAGE: 0.25, FileKind.TEXT: 0.1}


class WorkloadSpec(IASModel):
    """Laws the workload generator draws task attributes from."""

    task_count: int = Field(default=20, ge=0)
    file_kind_weights: Dict[FileKind, float] = Field(default_factory=_default_kind_weights)
    data_size_range: Tuple[float, float] = (1.0, 100.0)
    process_count_range: Tuple[int, int] = (1, 8)
    io_rate_range: Tuple[float, float] = (0.0, 200.0)
    runtime_rates: Dict[FileKind, float] = Field(default_factory=_default_runtime_rates)
    arrival: ArrivalLaw = ArrivalLaw.BATCH
    poisson_rate: float = Field(default=1.0, gt=0)

    @field_validator('file_kind_weights')
    @classmethod
    def validate_weights(cls, v: Dict[FileKind, float]) -> Dict[FileKind, float]:
        if any(w < 0 for w in v.values()) or sum(v.values()) <= 0:
            raise ValueError("file kind weights must be non-negative with a positive sum")
        return v

    @field_validator('runtime_rates')
    @classmethod
    def validate_rates(cls, v: Dict[FileKind, float]) -> Dict[FileKind, float]:
        missing = set(FileKind) - set(v)
        if missing:
            raise ValueError(f"runtime rates missing for {sorted(k.value for k in missing)}")
        if any(r <= 0 for r in v.values()):
            raise ValueError("runtime rates must be > 0")
        return v

    @model_validator(mode='after')
    def validate_ranges(self) -> "WorkloadSpec":
        lo, hi = self.data_size_range
        if not 0 < lo <= hi:
            raise ValueError("data_size_range must satisfy 0 < low <= high")
        plo, phi = self.process_count_range
        if not 1 <= plo <= phi:
            raise ValueError("process_count_range must satisfy 1 <= low <= high")
        ilo, ihi = self.io_rate_range
        if not 0 <= ilo <= ihi or ihi <= 0:
            raise ValueError("io_rate_range must satisfy 0 <= low <= high and high > 0")
        return self


class WorldConfig(IASModel):
    """User-facing world settings; ``build_world`` turns them into a WorldSpec."""

    hosts: int = Field(default=2, ge=1)
    vms_per_host: Literal[2] = 2
    interference_scale: Optional[float] = Field(default=None, gt=0)
    max_multiplier: float = Field(default=3.0, gt=1)
    hidden_model: Optional[QuadraticInterferenceModel] = None


class WorldSpec(IASModel):
    """Simulated cluster with a hidden ground-truth interference function.

    The hidden model only carries co-location terms: its intercept and every
    block that depends on the running task alone are zero, so a task next to
    an idle sibling VM runs at its base runtime.
    """

    hosts: int = Field(default=2, ge=1)
    vms_per_host: Literal[2] = 2
    hidden_model: QuadraticInterferenceModel = QuadraticInterferenceModel()
    interference_scale: float = Field(default=1.0, gt=0, allow_inf_nan=False)
    feature_scales: FeatureScales = FeatureScales()
    seed: int = Field(default=0, ge=0)

    @field_validator('hidden_model')
    @classmethod
    def validate_hidden(cls, v: QuadraticInterferenceModel) -> QuadraticInterferenceModel:
        vec = v.to_vector()
        if vec[INTERCEPT] != 0.0:
            raise ValueError("hidden model intercept must be 0")
        if vec[ALPHA1].any() or vec[BETA_WITHIN1].any() or vec[GAMMA1].any():
            raise ValueError("hidden model must not carry terms of the running task alone")
        return v


class TaskRecord(IASModel):
    """Execution record of one task."""

    task_id: str
    vm_id: str
    host_id: str
    start: float
    end: float
    base_runtime: float
    cpu_utilization: float

    @property
    def runtime(self) -> float:
        return self.end - self.start


class SimMetrics(IASModel):
    """Metrics of one simulated run."""

    completed: int = Field(ge=0)
    makespan: float = Field(ge=0)
    throughput: float = Field(ge=0)
    normalized_throughput: float = Field(gt=0)
    cost: float = Field(ge=0)
    per_task: Tuple[TaskRecord, ...] = ()


class PolicySummary(IASModel):
    """Median and inter-quartile range of a policy's metrics over trials."""

    policy: str
    trials: int
    makespan_median: float
    makespan_iqr: float
    throughput_median: float
    throughput_iqr: float
    normalized_throughput_median: float
    normalized_throughput_iqr: float
    cost_median: float
    cost_iqr: float


class ComparisonRatios(IASModel):
    """FGKA++ against k-means++ on the same trials."""

    makespan_ratio: float
    throughput_ratio: float
    cost_ratio: float
    improved_throughput: float
    normalized_throughput_win_fraction: float


class TrialResult(IASModel):
    trial: int
    metrics: Dict[str, SimMetrics]
    predicted_makespan: Dict[str, Optional[float]] = Field(default_factory=dict)


class ComparisonTable(IASModel):
    """Outcome of an A/B experiment."""

    policies: Tuple[str, ...]
    trials: Tuple[TrialResult, ...]
    summaries: Dict[str, PolicySummary]
    ratios: Optional[ComparisonRatios] = None
    model_source: str = "provided"
