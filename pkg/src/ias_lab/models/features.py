"""Feature vector and clustering point models."""

from typing import Sequence, Tuple

import numpy as np
from pydantic import Field, field_validator

from ..models import IASModel
from .common import FEATURE_DIM, ensure_finite, ensure_non_negative


class FeatureVector(IASModel):
    """The five per-VM controllers feeding the interference model.

    p1: VMM CPU utilization (percent of one core)
    p2: application data-processing CPU (percent)
    p3: I/O request rate (requests/second)
    p4: cost-rate load index
    p5: job count
    """

    p: Tuple[float, float, float, float, float] = (0.0, 0.0, 0.0, 0.0, 0.0)

    @field_validator('p', mode='before')
    @classmethod
    def validate_p(cls, v: Sequence[float]) -> Tuple[float, ...]:
        """Require five finite, non-negative entries."""
        if len(v) != FEATURE_DIM:
            raise ValueError(f"feature vector needs {FEATURE_DIM} entries, got {len(v)}")
        return ensure_non_negative(v, name="feature")

    @classmethod
    def zeros(cls) -> "FeatureVector":
        return cls()

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "FeatureVector":
        return cls(p=tuple(float(x) for x in values))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.p, dtype=float)

    def __add__(self, other: "FeatureVector") -> "FeatureVector":
        return FeatureVector(p=tuple(a + b for a, b in zip(self.p, other.p)))


class Point(IASModel):
    """A clustering pattern.

    Featurized tasks are five-dimensional; the clustering operators accept
    any fixed dimension so they can be exercised on small 1-D data sets.
    """

    coords: Tuple[float, ...]
    weight: float = Field(default=1.0, gt=0, allow_inf_nan=False)

    @field_validator('coords', mode='before')
    @classmethod
    def validate_coords(cls, v: Sequence[float]) -> Tuple[float, ...]:
        if isinstance(v, (int, float)):
            v = (v,)
        if len(v) == 0:
            raise ValueError("a point needs at least one coordinate")
        return ensure_finite(v, name="coordinate")

    @property
    def dim(self) -> int:
        return len(self.coords)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)
