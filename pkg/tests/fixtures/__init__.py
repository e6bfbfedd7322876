"""Test fixtures package."""
from .builders import LabDataBuilder, all_labelings, io_antagonist_model, naive_predict

__all__ = [
    "LabDataBuilder",
    "all_labelings",
    "io_antagonist_model",
    "naive_predict",
]
