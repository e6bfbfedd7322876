"""Comparison tables in text and CSV form."""

from typing import Any, List, Sequence, Tuple

from ..models.scheduling import POLICY_LABELS, Policy
from ..models.simulation import ComparisonTable

Table = Tuple[List[str], List[List[Any]]]

IMPROVED_THROUGHPUT_NOTE = (
    "Improved Throughput is the difference of median normalized throughputs "
    "(Fast Genetic K-means ++ minus K-means ++)."
)


def policy_label(policy: str) -> str:
    return POLICY_LABELS.get(Policy(policy), policy)


def format_seconds(value: float) -> str:
    """Two decimals with trailing zeros dropped: 31.0 -> '31', 12.5 -> '12.5'."""
    text = f"{value:.2f}".rstrip("0").rstrip(".")
    return text if text not in ("", "-0") else "0"


def format_inr(value: float) -> str:
    return f"{value:.2f}"


def assignment_table(table: ComparisonTable, trial: int = 0) -> Table:
    """Per-job VM placement and CPU utilization of one trial, per policy."""
    header = ["Job Name"]
    for policy in table.policies:
        label = policy_label(policy)
        header += [f"{label} CPU Utilization", f"{label} VM Id"]
    if not table.trials:
        return header, []
    result = table.trials[trial]
    records = {policy: {r.task_id: r for r in result.metrics[policy].per_task} for policy in table.policies}
    first = table.policies[0]
    rows = []
    for record in result.metrics[first].per_task:
        row: List[Any] = [record.task_id]
        for policy in table.policies:
            r = records[policy][record.task_id]
            row += [f"{r.cpu_utilization:.2f}", r.vm_id]
        rows.append(row)
    return header, rows


def throughput_table(table: ComparisonTable) -> Table:
    """Median normalized throughput per policy plus the FGKA++ improvement."""
    header = ["Algorithm", "Achieved Throughput", "Improved Throughput"]
    rows = []
    for policy in table.policies:
        improved = ""
        if policy == Policy.FGKA_PP.value and table.ratios is not None:
            improved = f"{table.ratios.improved_throughput:.2f}"
        rows.append(
            [policy_label(policy), f"{table.summaries[policy].normalized_throughput_median:.2f}", improved]
        )
    return header, rows


def time_cost_table(table: ComparisonTable) -> Table:
    """Median completion time and billed cost per policy."""
    header = ["Algorithm", "Time (s)", "Cost (INR)"]
    rows = [
        [
            policy_label(policy),
            format_seconds(table.summaries[policy].makespan_median),
            format_inr(table.summaries[policy].cost_median),
        ]
        for policy in table.policies
    ]
    return header, rows


def render_text(title: str, header: Sequence[str], rows: Sequence[Sequence[Any]], footnote: str = "") -> str:
    lines = [title, " | ".join(header)]
    lines += [" | ".join(str(v) for v in row) for row in rows]
    if footnote:
        lines += ["", footnote]
    return "\n".join(lines) + "\n"


def render_report(table: ComparisonTable) -> str:
    """All three tables as one text document."""
    t1 = assignment_table(table)
    t2 = throughput_table(table)
    t3 = time_cost_table(table)
    parts = [
        render_text("Scheduling tasks to VMs with CPU utilization (trial 0)", *t1),
        render_text("Normalized throughput", *t2, footnote=IMPROVED_THROUGHPUT_NOTE),
        render_text("Completion time and cost", *t3),
    ]
    return "\n".join(parts)
