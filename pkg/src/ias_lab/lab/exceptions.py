"""Lab exception classes."""

from typing import Any, Dict, Optional


class IASLabError(Exception):
    """Base exception for lab errors."""

    #: Process exit status the CLI reports for this error family.
    exit_code = 1

    def __init__(self, message: str, *, context: Optional[Dict[str, Any]] = None) -> None:
        """Initialize lab error.

        Args:
            message: Error message
            context: Values that locate the failure (sizes, paths, parameters)
        """
        super().__init__(message)
        self.message = message
        self.context = dict(context) if context else {}

    def __str__(self) -> str:
        """String representation of the error."""
        if not self.context:
            return self.message
        details = ", ".join(f"{k}={v}" for k, v in sorted(self.context.items()))
        return f"{self.message} ({details})"


class DataError(IASLabError):
    """Inputs are valid values but cannot support the requested computation."""

    exit_code = 3


class DimensionMismatch(DataError):
    """Raised when two vectors of different length are combined."""


class EmptyCluster(DataError):
    """Raised when a centroid of an empty point set is requested."""


class KTooLarge(DataError):
    """Raised when more clusters than points are requested."""


class NonPositiveFitness(DataError):
    """Raised when roulette-wheel selection sees a fitness <= 0."""


class SingularSystem(DataError):
    """Raised when the damped normal matrix cannot be solved."""


class InsufficientData(DataError):
    """Raised when a fit has fewer samples than parameters."""


class DegenerateDesign(DataError):
    """Raised when a rank-deficient design admits no accepted LM step."""


class UnmappedTask(DataError):
    """Raised when an assignment does not place every task on a known VM."""


class InvalidTopology(DataError):
    """Raised when a host does not carry exactly two VMs."""


class ConfigError(IASLabError):
    """Raised for invalid or unknown configuration values."""

    exit_code = 2


class StoreError(IASLabError):
    """Raised when a result-store file cannot be read or written."""

    exit_code = 4

    def __init__(self, message: str, *, path: str, context: Optional[Dict[str, Any]] = None) -> None:
        merged = dict(context or {})
        merged["path"] = path
        super().__init__(message, context=merged)
        self.path = path


class ModelNotFound(StoreError):
    """Raised when a prediction-based policy runs without a model file."""

    exit_code = 5
