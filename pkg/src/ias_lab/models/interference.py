"""Interference model, profiling sample and fitting option models."""

from enum import Enum
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import Field, field_validator

from ..models import IASModel
from .common import FEATURE_DIM, N_COEFFICIENTS, ensure_finite, ensure_shape
from .features import FeatureVector

#: Strict i<j controller pairs in lexicographic order.
WITHIN_PAIRS: List[Tuple[int, int]] = list(combinations(range(FEATURE_DIM), 2))

#: Tag written next to serialized coefficient vectors.
FLATTENING_ORDER = "c|alpha1|alpha2|beta_cross_row_major|beta_within1_lex|beta_within2_lex|gamma1|gamma2"

# Slices of the flattened parameter vector
INTERCEPT = 0
ALPHA1 = slice(1, 6)
ALPHA2 = slice(6, 11)
BETA_CROSS = slice(11, 36)
BETA_WITHIN1 = slice(36, 46)
BETA_WITHIN2 = slice(46, 56)
GAMMA1 = slice(56, 61)
GAMMA2 = slice(61, 66)


def beta_cross_index(i: int, j: int) -> int:
    """Flat index of the cross coefficient multiplying P_VM1,i * P_VM2,j (0-based)."""
    return BETA_CROSS.start + FEATURE_DIM * i + j


class QuadraticInterferenceModel(IASModel):
    """Canonical two-VM quadratic runtime model with 66 coefficients.

    The cross block is the full 5x5 matrix of VM1 x VM2 products; within-VM
    products use strict i<j pairs and all pure squares live in ``gamma``, so
    every parameter is identifiable by least squares.
    """

    c: float = Field(default=0.0, allow_inf_nan=False)
    alpha: Tuple[Tuple[float, ...], ...] = ((0.0,) * FEATURE_DIM,) * 2
    beta_cross: Tuple[Tuple[float, ...], ...] = ((0.0,) * FEATURE_DIM,) * FEATURE_DIM
    beta_within: Tuple[Tuple[float, ...], ...] = ((0.0,) * len(WITHIN_PAIRS),) * 2
    gamma: Tuple[Tuple[float, ...], ...] = ((0.0,) * FEATURE_DIM,) * 2

    @field_validator('alpha', 'gamma', mode='before')
    @classmethod
    def validate_per_vm(cls, v: Sequence[Sequence[float]]) -> Tuple[Tuple[float, ...], ...]:
        return ensure_shape(v, (2, FEATURE_DIM), name="per-VM coefficients")

    @field_validator('beta_cross', mode='before')
    @classmethod
    def validate_cross(cls, v: Sequence[Sequence[float]]) -> Tuple[Tuple[float, ...], ...]:
        return ensure_shape(v, (FEATURE_DIM, FEATURE_DIM), name="beta_cross")

    @field_validator('beta_within', mode='before')
    @classmethod
    def validate_within(cls, v: Sequence[Sequence[float]]) -> Tuple[Tuple[float, ...], ...]:
        return ensure_shape(v, (2, len(WITHIN_PAIRS)), name="beta_within")

    @classmethod
    def zeros(cls) -> "QuadraticInterferenceModel":
        return cls()

    @classmethod
    def from_vector(cls, vector: Sequence[float]) -> "QuadraticInterferenceModel":
        """Build a model from a flat vector in the canonical order."""
        vec = np.asarray(vector, dtype=float)
        if vec.shape != (N_COEFFICIENTS,):
            raise ValueError(f"expected {N_COEFFICIENTS} coefficients, got shape {vec.shape}")
        ensure_finite(vec.tolist(), name="coefficient")
        return cls(
            c=float(vec[INTERCEPT]),
            alpha=(vec[ALPHA1].tolist(), vec[ALPHA2].tolist()),
            beta_cross=vec[BETA_CROSS].reshape(FEATURE_DIM, FEATURE_DIM).tolist(),
            beta_within=(vec[BETA_WITHIN1].tolist(), vec[BETA_WITHIN2].tolist()),
            gamma=(vec[GAMMA1].tolist(), vec[GAMMA2].tolist()),
        )

    def to_vector(self) -> np.ndarray:
        """Flatten to the canonical 66-entry order."""
        parts: List[float] = [self.c]
        parts.extend(self.alpha[0])
        parts.extend(self.alpha[1])
        for row in self.beta_cross:
            parts.extend(row)
        parts.extend(self.beta_within[0])
        parts.extend(self.beta_within[1])
        parts.extend(self.gamma[0])
        parts.extend(self.gamma[1])
        return np.asarray(parts, dtype=float)


class ProfileSample(IASModel):
    """One interference observation: both VMs' features and the app runtime."""

    features_vm1: FeatureVector
    features_vm2: FeatureVector
    observed_runtime: float = Field(gt=0, allow_inf_nan=False)


class DampingMode(str, Enum):
    """Damping matrix D of the LM normal equations."""

    IDENTITY = "identity"
    DIAGONAL = "diagonal"


class LambdaPolicy(str, Enum):
    """How the damping parameter reacts to accepted and rejected steps."""

    MULTIPLICATIVE = "multiplicative"
    GAIN_RATIO = "gain_ratio"


class TerminationReason(str, Enum):
    GRAD_TOL = "grad_tol"
    STEP_TOL = "step_tol"
    MAX_ITER = "max_iter"
    LAMBDA_OVERFLOW = "lambda_overflow"


class LMOptions(IASModel):
    """Levenberg-Marquardt fitting options."""

    lambda0: float = Field(default=1e-3, gt=0)
    lambda_up: float = Field(default=10.0, gt=1)
    lambda_down: float = Field(default=10.0, gt=1)
    lambda_max: float = Field(default=1e16, gt=0)
    lambda_policy: LambdaPolicy = LambdaPolicy.MULTIPLICATIVE
    damping_mode: DampingMode = DampingMode.DIAGONAL
    weights: Optional[Tuple[float, ...]] = None
    max_iter: int = Field(default=200, ge=1)
    grad_tol: float = Field(default=1e-8, gt=0)
    step_tol: float = Field(default=1e-10, gt=0)
    allow_underdetermined: bool = False

    @field_validator('weights')
    @classmethod
    def validate_weights(cls, v: Optional[Tuple[float, ...]]) -> Optional[Tuple[float, ...]]:
        if v is None:
            return v
        values = ensure_finite(v, name="weight")
        if any(w <= 0 for w in values):
            raise ValueError("weights must all be > 0")
        return values


class FitReport(IASModel):
    """Summary of one ``lm_fit`` run."""

    iterations: int
    accepted_steps: int
    initial_sse: float
    final_sse: float
    final_lambda: float
    termination: TerminationReason
    sse_history: Tuple[float, ...]
    design_rank: int
    n_samples: int
    n_parameters: int = N_COEFFICIENTS
