"""Scheduling models: policies, VMs, assignments and decision reports."""

from enum import Enum
from typing import Dict, Optional, Tuple

from pydantic import Field

from ..models import IASModel
from .features import FeatureVector


class Policy(str, Enum):
    """Assignment policy that produced a candidate."""

    FGKA_PP = "fgka_pp"
    KMEANS_PP = "kmeans_pp"
    ROUND_ROBIN = "round_robin"


POLICY_LABELS: Dict[Policy, str] = {
    Policy.KMEANS_PP: "K-means ++",
    Policy.FGKA_PP: "Fast Genetic K-means ++",
    Policy.ROUND_ROBIN: "Round Robin",
}


class FeatureScales(IASModel):
    """Constants mapping task attributes onto controllers."""

    kappa1: float = Field(default=10.0, gt=0)
    kappa2: float = Field(default=0.5, gt=0)
    kappa4: float = Field(default=0.01, gt=0)


class SchedulerParams(IASModel):
    """Scheduler settings."""

    scales: FeatureScales = FeatureScales()
    top_m: int = Field(default=5, ge=0)


class VmDescriptor(IASModel):
    """A VM slot on a host. Hosts carry exactly two VMs."""

    vm_id: str = Field(min_length=1)
    host_id: str = Field(min_length=1)
    current_load: FeatureVector = FeatureVector()


class Assignment(IASModel):
    """Total mapping of a batch's task ids onto VM ids."""

    mapping: Dict[str, str]
    policy_tag: Policy

    def key(self) -> Tuple[Tuple[str, str], ...]:
        """Order-independent identity used for de-duplication."""
        return tuple(sorted(self.mapping.items()))

    def tasks_on(self, vm_id: str) -> Tuple[str, ...]:
        return tuple(task_id for task_id, vm in self.mapping.items() if vm == vm_id)


class AssignmentScore(IASModel):
    """Predicted makespan of an assignment and the per-host predictions."""

    makespan: float = Field(ge=0)
    per_host: Dict[str, float]
    negative_prediction: bool = False


class CandidateScore(IASModel):
    """One row of the decision report."""

    candidate_index: int
    policy_tag: Policy
    mapping: Dict[str, str]
    predicted_makespan_s: Optional[float] = None


class DecisionReport(IASModel):
    """Every candidate a scheduling decision considered, for audit."""

    policy: Policy
    candidates: Tuple[CandidateScore, ...]
    chosen_index: int
    warnings: Tuple[str, ...] = ()


class ScheduleDecision(IASModel):
    """Committed assignment plus its report."""

    assignment: Assignment
    report: DecisionReport
    predicted_makespan_s: Optional[float] = None
