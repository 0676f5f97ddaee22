"""Timing harness with uncertainty, multi-run aggregation, and tool comparison."""

from __future__ import annotations

import importlib.resources
import json
import math
import time
from dataclasses import dataclass

from .errors import DomainError, TimingError
from .metrics import MetricReport

Z_95 = 1.96  # normal-approximation 95% interval half-width multiplier


@dataclass(frozen=True)
class TimingStats:
    mean_seconds: float
    std_seconds: float
    ci95_seconds: float
    repeats: int

    @property
    def single_sample(self) -> bool:
        return self.repeats == 1

    def to_json_dict(self) -> dict:
        return {
            "mean_seconds": self.mean_seconds,
            "std_seconds": self.std_seconds,
            "ci95_seconds": self.ci95_seconds,
            "repeats": self.repeats,
            "single_sample": self.single_sample,
        }

    def scaled(self, divisor: float) -> "TimingStats":
        """Same stats divided through, e.g. batch totals -> per-item averages."""
        if divisor <= 0:
            raise DomainError("divisor must be positive")
        return TimingStats(self.mean_seconds / divisor, self.std_seconds / divisor,
                           self.ci95_seconds / divisor, self.repeats)


def time_op(operation, repeats: int = 10, warmup: int = 1,
            clock=time.perf_counter) -> TimingStats:
    """Time `operation()` on a monotonic clock after unmeasured warmup runs.

    std is the unbiased sample standard deviation (0 for a single repeat);
    ci95 = 1.96 * std / sqrt(repeats).
    """
    if repeats < 1:
        raise DomainError("repeats must be >= 1")
    if warmup < 0:
        raise DomainError("warmup must be >= 0")
    for i in range(warmup):
        try:
            operation()
        except Exception as exc:
            raise TimingError(f"warmup iteration {i} failed: {exc}", iteration=i) from exc
    durations = []
    for i in range(repeats):
        start = clock()
        try:
            operation()
        except Exception as exc:
            raise TimingError(f"iteration {i} failed: {exc}", iteration=i) from exc
        durations.append(clock() - start)
    mean = sum(durations) / repeats
    if repeats > 1:
        std = math.sqrt(sum((d - mean) ** 2 for d in durations) / (repeats - 1))
    else:
        std = 0.0
    ci95 = Z_95 * std / math.sqrt(repeats)
    return TimingStats(mean, std, ci95, repeats)


@dataclass(frozen=True)
class AggregateStats:
    """Per-metric mean and unbiased std over k runs; std is None when k < 2."""

    means: dict[str, float]
    stds: dict[str, float | None]
    k: int

    def to_json_dict(self) -> dict:
        return {
            "runs": self.k,
            "metrics": {
                name: {"mean": self.means[name], "std": self.stds[name]}
                for name in sorted(self.means)
            },
        }

    def to_text(self) -> str:
        lines = [f"{'Metric':<18}{'Mean':>10}{'Std Dev':>10}   (over {self.k} runs)"]
        for name in sorted(self.means):
            std = self.stds[name]
            std_text = "undef" if std is None else f"{std:.3f}"
            lines.append(f"{name:<18}{self.means[name]:>10.3f}{std_text:>10}")
        return "\n".join(lines)


def aggregate_runs(reports: list[dict[str, float]]) -> AggregateStats:
    """Mean and unbiased std of each metric across seeded runs."""
    if not reports:
        raise DomainError("aggregate_runs needs at least one report")
    names = set(reports[0])
    for i, report in enumerate(reports[1:], start=2):
        if set(report) != names:
            raise DomainError(
                f"run {i} metric names {sorted(report)} != {sorted(names)}")
    k = len(reports)
    means = {}
    stds: dict[str, float | None] = {}
    for name in names:
        values = [r[name] for r in reports]
        mean = sum(values) / k
        means[name] = mean
        if k >= 2:
            stds[name] = math.sqrt(sum((v - mean) ** 2 for v in values) / (k - 1))
        else:
            stds[name] = None
    return AggregateStats(means=means, stds=stds, k=k)


@dataclass(frozen=True)
class ComparisonRow:
    tool_name: str
    accuracy: float
    precision: float
    recall: float
    f1: float
    source: str = "imported"
    citation: str | None = None

    def __post_init__(self):
        if self.source not in ("measured", "imported"):
            raise DomainError(f"source must be measured|imported: {self.source!r}")
        if self.source == "imported" and not self.citation:
            raise DomainError("imported comparison rows must carry a citation")
        for value in (self.accuracy, self.precision, self.recall, self.f1):
            if not 0.0 <= value <= 1.0:
                raise DomainError(f"comparison metrics must be in [0,1]: {value}")

    def to_json_dict(self) -> dict:
        return {
            "tool_name": self.tool_name,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "source": self.source,
            "citation": self.citation,
        }


def measured_row(report: MetricReport, name: str = "this-run") -> ComparisonRow:
    """Fold a metric report into a comparison row (macro P/R/F1)."""
    return ComparisonRow(
        tool_name=name,
        accuracy=report.accuracy,
        precision=report.macro_precision,
        recall=report.macro_recall,
        f1=report.macro_f1,
        source="measured",
    )


def comparison_report(measured: ComparisonRow | None,
                      imported: list[ComparisonRow]) -> list[ComparisonRow]:
    """All rows ranked by F1 descending; equal F1 falls back to name order."""
    rows = list(imported)
    if measured is not None:
        rows.append(measured)
    return sorted(rows, key=lambda r: (-r.f1, r.tool_name))


def comparison_to_text(rows: list[ComparisonRow]) -> str:
    lines = [f"{'#':>2} {'Tool':<22}{'Accuracy':>9}{'Precision':>10}{'Recall':>8}{'F1':>7}"]
    for rank, row in enumerate(rows, start=1):
        marker = " *" if row.source == "measured" else ""
        lines.append(
            f"{rank:>2} {row.tool_name + marker:<22}{row.accuracy:>9.3f}"
            f"{row.precision:>10.3f}{row.recall:>8.3f}{row.f1:>7.3f}")
    if any(r.source == "measured" for r in rows):
        lines.append("   (* = measured by this run)")
    return "\n".join(lines)


def load_imported_rows(path=None) -> list[ComparisonRow]:
    """Read comparison rows from JSON; defaults to the packaged benchmark table."""
    if path is None:
        source = importlib.resources.files("credsift").joinpath(
            "data/comparison_tools.json")
        raw = json.loads(source.read_text(encoding="utf-8"))
    else:
        with open(path, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
    rows = raw["rows"] if isinstance(raw, dict) else raw
    return [ComparisonRow(**row) for row in rows]
