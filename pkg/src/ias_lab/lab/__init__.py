"""Lab module exports."""

from .exceptions import (
    ConfigError,
    DataError,
    DegenerateDesign,
    DimensionMismatch,
    EmptyCluster,
    IASLabError,
    InsufficientData,
    InvalidTopology,
    KTooLarge,
    ModelNotFound,
    NonPositiveFitness,
    SingularSystem,
    StoreError,
    UnmappedTask,
)

__all__ = [
    "ConfigError",
    "DataError",
    "DegenerateDesign",
    "DimensionMismatch",
    "EmptyCluster",
    "IASLabError",
    "InsufficientData",
    "InvalidTopology",
    "KTooLarge",
    "ModelNotFound",
    "NonPositiveFitness",
    "SingularSystem",
    "StoreError",
    "UnmappedTask",
]
