"""Task model for the lab."""

from enum import Enum

from pydantic import Field

from ..models import IASModel


class FileKind(str, Enum):
    """Kind of file a task processes."""

    PDF = "pdf"
    IMAGE = "image"
    TEXT = "text"


class TaskProfile(IASModel):
    """A schedulable job.

    ``base_runtime`` is the interference-free runtime. Only the simulator
    reads it; schedulers work from the observable attributes.
    """

    id: str = Field(min_length=1)
    file_kind: FileKind
    data_size: float = Field(gt=0, allow_inf_nan=False)
    process_count: int = Field(ge=1)
    io_rate: float = Field(ge=0, allow_inf_nan=False)
    arrival_time: float = Field(default=0.0, ge=0, allow_inf_nan=False)
    base_runtime: float = Field(gt=0, allow_inf_nan=False)
