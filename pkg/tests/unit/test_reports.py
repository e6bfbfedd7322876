"""Tests for the comparison tables."""
import pytest

from ias_lab.lab.reports import (
    IMPROVED_THROUGHPUT_NOTE,
    assignment_table,
    format_inr,
    format_seconds,
    render_report,
    render_text,
    throughput_table,
    time_cost_table,
)
from ias_lab.models.simulation import (
    ComparisonRatios,
    ComparisonTable,
    PolicySummary,
    SimMetrics,
    TaskRecord,
    TrialResult,
)


def summary(policy, makespan, normalized=1.0):
    return PolicySummary(
        policy=policy,
        trials=1,
        makespan_median=makespan,
        makespan_iqr=0.0,
        throughput_median=2 / makespan,
        throughput_iqr=0.0,
        normalized_throughput_median=normalized,
        normalized_throughput_iqr=0.0,
        cost_median=round(makespan, 2),
        cost_iqr=0.0,
    )


def run(vms, utilization):
    records = tuple(
        TaskRecord(task_id=f"task-00{i + 1}", vm_id=vm, host_id=vm[:2], start=0.0, end=5.0, base_runtime=5.0, cpu_utilization=u)
        for i, (vm, u) in enumerate(zip(vms, utilization))
    )
    return SimMetrics(completed=2, makespan=5.0, throughput=0.4, normalized_throughput=1.0, cost=5.0, per_task=records)


@pytest.fixture
def table():
    trial = TrialResult(
        trial=0,
        metrics={
            "kmeans_pp": run(["h0-vm0", "h0-vm1"], [0.5, 1.25]),
            "fgka_pp": run(["h1-vm0", "h0-vm0"], [0.5, 1.0]),
        },
    )
    return ComparisonTable(
        policies=("kmeans_pp", "fgka_pp"),
        trials=(trial,),
        summaries={"kmeans_pp": summary("kmeans_pp", 31.0, 1.0), "fgka_pp": summary("fgka_pp", 13.0, 1.5)},
        ratios=ComparisonRatios(
            makespan_ratio=31 / 13,
            throughput_ratio=31 / 13,
            cost_ratio=31 / 13,
            improved_throughput=0.5,
            normalized_throughput_win_fraction=1.0,
        ),
    )


class TestFormatting:
    """Test number formatting."""

    @pytest.mark.parametrize("value, text", [(31.0, "31"), (12.5, "12.5"), (13.456, "13.46"), (0.0, "0"), (0.001, "0")])
    def test_seconds(self, value, text):
        assert format_seconds(value) == text

    @pytest.mark.parametrize("value, text", [(31.0, "31.00"), (13.0, "13.00"), (0.0, "0.00")])
    def test_inr(self, value, text):
        assert format_inr(value) == text


class TestTables:
    """Test the three report tables."""

    def test_time_cost_rows(self, table):
        header, rows = time_cost_table(table)
        assert header == ["Algorithm", "Time (s)", "Cost (INR)"]
        assert rows == [["K-means ++", "31", "31.00"], ["Fast Genetic K-means ++", "13", "13.00"]]
        assert "K-means ++ | 31 | 31.00" in render_text("t", header, rows)

    def test_assignment_columns(self, table):
        header, rows = assignment_table(table)
        assert header == [
            "Job Name",
            "K-means ++ CPU Utilization",
            "K-means ++ VM Id",
            "Fast Genetic K-means ++ CPU Utilization",
            "Fast Genetic K-means ++ VM Id",
        ]
        assert rows[1] == ["task-002", "1.25", "h0-vm1", "1.00", "h0-vm0"]

    def test_assignment_without_trials(self, table):
        empty = table.model_copy(update={"trials": ()})
        header, rows = assignment_table(empty)
        assert len(header) == 5
        assert rows == []

    def test_throughput_improvement_only_on_fgka(self, table):
        header, rows = throughput_table(table)
        assert header == ["Algorithm", "Achieved Throughput", "Improved Throughput"]
        assert rows == [["K-means ++", "1.00", ""], ["Fast Genetic K-means ++", "1.50", "0.50"]]

    def test_report_has_every_table(self, table):
        report = render_report(table)
        assert "Job Name" in report
        assert IMPROVED_THROUGHPUT_NOTE in report
        assert report.endswith("Fast Genetic K-means ++ | 13 | 13.00\n")
