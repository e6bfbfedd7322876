"""The bundled benchmark: two hosts, twenty tasks, thirty trials."""
import time

import pytest

from ias_lab import new_lab
from ias_lab.models.config import ExperimentConfig

pytestmark = [pytest.mark.integration, pytest.mark.slow]


@pytest.fixture(scope="module")
def timed_table():
    started = time.perf_counter()
    table = new_lab(ExperimentConfig(timestamp=False)).compare(jobs=4)
    return table, time.perf_counter() - started


@pytest.fixture(scope="module")
def table(timed_table):
    return timed_table[0]


class TestDefaultBenchmark:
    """Test the default A/B comparison end to end."""

    def test_shape(self, table):
        assert table.policies == ("kmeans_pp", "fgka_pp", "round_robin")
        assert len(table.trials) == 30
        assert table.model_source == "fitted"
        assert all(m.completed == 20 for t in table.trials for m in t.metrics.values())

    def test_fgka_median_makespan_beats_kmeans_by_ten_percent(self, table):
        assert table.summaries["fgka_pp"].makespan_median <= table.summaries["kmeans_pp"].makespan_median
        assert table.ratios is not None
        assert table.ratios.makespan_ratio >= 1.1

    def test_fgka_matches_or_beats_kmeans_throughput_in_most_trials(self, table):
        assert table.ratios is not None
        assert table.ratios.normalized_throughput_win_fraction >= 0.8

    def test_finishes_within_a_minute(self, timed_table):
        _, elapsed = timed_table
        assert elapsed < 60.0

    def test_round_robin_is_the_throughput_reference(self, table):
        assert table.summaries["round_robin"].normalized_throughput_median == pytest.approx(1.0)
