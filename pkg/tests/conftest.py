"""Global pytest configuration and fixtures."""
import numpy as np
import pytest

from ias_lab import new_lab
from ias_lab.models.config import ExperimentConfig
from ias_lab.models.rng import RngStream
from ias_lab.models.scheduling import FeatureScales
from tests.fixtures import LabDataBuilder


@pytest.fixture
def builder():
    """Test data factory."""
    return LabDataBuilder


@pytest.fixture
def stream():
    """Fixed random stream."""
    return RngStream(seed=7)


@pytest.fixture
def gen():
    """Fixed numpy generator."""
    return np.random.default_rng(12345)


@pytest.fixture
def scales():
    return FeatureScales()


@pytest.fixture
def small_config(tmp_path):
    """Fast configuration writing into a temporary directory."""
    return ExperimentConfig.from_dict(
        {
            "seed": 11,
            "output_dir": str(tmp_path / "results"),
            "timestamp": False,
            "workload": {"task_count": 8},
            "fgka": {"population_size": 8, "max_generations": 10, "stall_generations": 5},
            "profiling": {"samples": 120, "max_group_size": 3},
            "experiment": {"trials": 3},
        }
    )


@pytest.fixture
def small_lab(small_config):
    return new_lab(small_config)


@pytest.fixture(autouse=True)
def isolate_environment(monkeypatch):
    """Keep IASLAB_ variables of the developer shell out of the tests."""
    import os

    for name in list(os.environ):
        if name.startswith("IASLAB_"):
            monkeypatch.delenv(name)
