"""Confusion-matrix metrics: accuracy, per-class P/R/F1, macro averages, MCC.

All counting is exact integer arithmetic; 0/0 states surface as None (an
explicit undefined marker) rather than NaN, and macro averages report how
many classes were skipped. Undefined never silently becomes zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import DomainError, UndefinedMetricError


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[actual][predicted] over class ids 0..class_count-1."""

    counts: tuple[tuple[int, ...], ...]
    class_count: int

    def __post_init__(self):
        if len(self.counts) != self.class_count:
            raise DomainError("confusion matrix row count != class_count")
        for row in self.counts:
            if len(row) != self.class_count:
                raise DomainError("confusion matrix is not square")
            if any(c < 0 for c in row):
                raise DomainError("confusion matrix entries must be >= 0")

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def binarized(self, c: int) -> tuple[int, int, int, int]:
        """Per-class (TP, FP, FN, TN) by one-vs-rest binarization."""
        tp = self.counts[c][c]
        fp = sum(self.counts[a][c] for a in range(self.class_count) if a != c)
        fn = sum(self.counts[c][p] for p in range(self.class_count) if p != c)
        tn = self.total - tp - fp - fn
        return tp, fp, fn, tn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.class_count != other.class_count:
            raise DomainError("cannot add confusion matrices of different sizes")
        summed = tuple(
            tuple(a + b for a, b in zip(ra, rb))
            for ra, rb in zip(self.counts, other.counts)
        )
        return ConfusionMatrix(summed, self.class_count)


def confusion(labels: list[int], predictions: list[int], class_count: int) -> ConfusionMatrix:
    """Count (actual, predicted) pairs into a class_count x class_count matrix."""
    if len(labels) != len(predictions):
        raise DomainError(f"{len(labels)} labels vs {len(predictions)} predictions")
    grid = [[0] * class_count for _ in range(class_count)]
    for actual, predicted in zip(labels, predictions):
        if not (0 <= actual < class_count and 0 <= predicted < class_count):
            raise DomainError(f"class id out of range: ({actual}, {predicted})")
        grid[actual][predicted] += 1
    return ConfusionMatrix(tuple(tuple(row) for row in grid), class_count)


def accuracy(cm: ConfusionMatrix) -> float:
    total = cm.total
    if total == 0:
        raise UndefinedMetricError("accuracy undefined for an empty matrix")
    trace = sum(cm.counts[i][i] for i in range(cm.class_count))
    return trace / total


def precision_recall_f1(cm: ConfusionMatrix, c: int) -> tuple[float | None, float | None, float | None]:
    """Per-class precision/recall/F1; any 0/0 yields None."""
    tp, fp, fn, _ = cm.binarized(c)
    precision = tp / (tp + fp) if (tp + fp) > 0 else None
    recall = tp / (tp + fn) if (tp + fn) > 0 else None
    if precision is None or recall is None or (precision + recall) == 0.0:
        f1 = None if (precision is None or recall is None) else 0.0
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return precision, recall, f1


def macro_average(values: list[float | None]) -> tuple[float, int]:
    """Mean over defined values; returns (mean, skipped_count)."""
    defined = [v for v in values if v is not None]
    if not defined:
        raise UndefinedMetricError("macro average undefined: every class value is undefined")
    return sum(defined) / len(defined), len(values) - len(defined)


def mcc(cm: ConfusionMatrix) -> float | None:
    """Matthews correlation; binary uses the TP/TN/FP/FN form directly.

    The multiclass correlation form reduces exactly to the binary formula at
    C = 2. Integer products are computed exactly before the square root.
    Returns None when a marginal is empty (zero denominator).
    """
    total = cm.total
    if total == 0:
        raise UndefinedMetricError("MCC undefined for an empty matrix")
    if cm.class_count == 2:
        tp, fp, fn, tn = cm.binarized(1)
        denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
        if denom == 0:
            return None
        return (tp * tn - fp * fn) / math.sqrt(denom)
    rows = [sum(cm.counts[k]) for k in range(cm.class_count)]
    cols = [sum(cm.counts[a][k] for a in range(cm.class_count))
            for k in range(cm.class_count)]
    trace = sum(cm.counts[k][k] for k in range(cm.class_count))
    numerator = total * trace - sum(r * c for r, c in zip(rows, cols))
    d1 = total * total - sum(r * r for r in rows)
    d2 = total * total - sum(c * c for c in cols)
    if d1 == 0 or d2 == 0:
        return None
    return numerator / math.sqrt(d1 * d2)


@dataclass(frozen=True)
class MetricReport:
    """Everything the evaluation prints: accuracy, per-class and macro P/R/F1, MCC."""

    accuracy: float
    precision_per_class: tuple[float | None, ...]
    recall_per_class: tuple[float | None, ...]
    f1_per_class: tuple[float | None, ...]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    skipped_precision: int
    skipped_recall: int
    skipped_f1: int
    mcc: float | None
    support: tuple[int, ...]

    @property
    def class_count(self) -> int:
        return len(self.precision_per_class)

    def scalar_metrics(self) -> dict[str, float]:
        """The aggregate row: defined scalar metrics keyed by name."""
        out = {
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
        }
        if self.mcc is not None:
            out["mcc"] = self.mcc
        return out

    def to_json_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "per_class": [
                {
                    "class_id": c,
                    "support": self.support[c],
                    "precision": self.precision_per_class[c],
                    "recall": self.recall_per_class[c],
                    "f1": self.f1_per_class[c],
                }
                for c in range(self.class_count)
            ],
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "skipped_classes": {
                "precision": self.skipped_precision,
                "recall": self.skipped_recall,
                "f1": self.skipped_f1,
            },
            "mcc": self.mcc,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    def to_text(self, class_labels: list[str] | None = None) -> str:
        def fmt(value):
            return "undef" if value is None else f"{value:.3f}"

        lines = [f"{'Metric':<12}{'Value':>8}"]
        lines.append(f"{'Accuracy':<12}{fmt(self.accuracy):>8}")
        lines.append(f"{'F1':<12}{fmt(self.macro_f1):>8}")
        lines.append(f"{'Precision':<12}{fmt(self.macro_precision):>8}")
        lines.append(f"{'Recall':<12}{fmt(self.macro_recall):>8}")
        lines.append(f"{'MCC':<12}{fmt(self.mcc):>8}")
        lines.append("")
        lines.append(f"{'Class':<22}{'N':>6}{'Prec':>8}{'Recall':>8}{'F1':>8}")
        for c in range(self.class_count):
            label = class_labels[c] if class_labels else str(c)
            lines.append(
                f"{label:<22}{self.support[c]:>6}"
                f"{fmt(self.precision_per_class[c]):>8}"
                f"{fmt(self.recall_per_class[c]):>8}"
                f"{fmt(self.f1_per_class[c]):>8}")
        return "\n".join(lines)


def build_report(cm: ConfusionMatrix) -> MetricReport:
    """Assemble the full metric report from one confusion matrix."""
    precisions, recalls, f1s = [], [], []
    for c in range(cm.class_count):
        p, r, f = precision_recall_f1(cm, c)
        precisions.append(p)
        recalls.append(r)
        f1s.append(f)
    macro_p, skip_p = macro_average(precisions)
    macro_r, skip_r = macro_average(recalls)
    macro_f, skip_f = macro_average(f1s)
    support = tuple(sum(cm.counts[c]) for c in range(cm.class_count))
    return MetricReport(
        accuracy=accuracy(cm),
        precision_per_class=tuple(precisions),
        recall_per_class=tuple(recalls),
        f1_per_class=tuple(f1s),
        macro_precision=macro_p,
        macro_recall=macro_r,
        macro_f1=macro_f,
        skipped_precision=skip_p,
        skipped_recall=skip_r,
        skipped_f1=skip_f,
        mcc=mcc(cm),
        support=support,
    )
