"""Confusion matrices, detection metrics, severity/type distributions, and
the side-by-side comparison report."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import Optional, Sequence

from .errors import LengthMismatch
from .ontology import Severity, ThreatType


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn: int
    fp: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fn, self.fp, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fn": self.fn, "fp": self.fp, "tn": self.tn}


@dataclass(frozen=True)
class MetricsReport:
    matrix: ConfusionMatrix
    accuracy: float
    precision: float
    recall: float
    f1: float
    fpr: float
    undefined: tuple[str, ...]  # metrics whose denominator was zero
    mean_confidence: Optional[float] = None
    mean_latency_ms: Optional[float] = None
    n_excluded: int = 0

    def to_dict(self) -> dict:
        return {
            "matrix": self.matrix.to_dict(),
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "fpr": self.fpr,
            "undefined": list(self.undefined),
            "mean_confidence": self.mean_confidence,
            "mean_latency_ms": self.mean_latency_ms,
            "n_excluded": self.n_excluded,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(
            matrix=ConfusionMatrix(**d["matrix"]),
            accuracy=d["accuracy"],
            precision=d["precision"],
            recall=d["recall"],
            f1=d["f1"],
            fpr=d["fpr"],
            undefined=tuple(d.get("undefined", ())),
            mean_confidence=d.get("mean_confidence"),
            mean_latency_ms=d.get("mean_latency_ms"),
            n_excluded=d.get("n_excluded", 0),
        )


def confusion(predictions: Sequence[bool], truth: Sequence[bool]) -> ConfusionMatrix:
    """Positional TP/FN/FP/TN counting over aligned boolean vectors."""
    if len(predictions) != len(truth):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(truth)} truths")
    tp = fn = fp = tn = 0
    for p, t in zip(predictions, truth):
        if t:
            if p:
                tp += 1
            else:
                fn += 1
        else:
            if p:
                fp += 1
            else:
                tn += 1
    return ConfusionMatrix(tp, fn, fp, tn)


def _ratio(num: int, den: int, name: str, undefined: list[str]) -> Fraction:
    if den == 0:
        undefined.append(name)
        return Fraction(0)
    return Fraction(num, den)


def compute_metrics(
    m: ConfusionMatrix,
    confidences: Sequence[float] = (),
    latencies_ms: Sequence[float] = (),
    n_excluded: int = 0,
) -> MetricsReport:
    """Exact-rational metric computation; zero-denominator ratios are
    reported as 0 and named in ``undefined``."""
    undefined: list[str] = []
    accuracy = _ratio(m.tp + m.tn, m.total, "accuracy", undefined)
    precision = _ratio(m.tp, m.tp + m.fp, "precision", undefined)
    recall = _ratio(m.tp, m.tp + m.fn, "recall", undefined)
    if precision + recall == 0:
        undefined.append("f1")
        f1 = Fraction(0)
    else:
        f1 = 2 * precision * recall / (precision + recall)
    fpr = _ratio(m.fp, m.fp + m.tn, "fpr", undefined)
    return MetricsReport(
        matrix=m,
        accuracy=float(accuracy),
        precision=float(precision),
        recall=float(recall),
        f1=float(f1),
        fpr=float(fpr),
        undefined=tuple(undefined),
        mean_confidence=(sum(confidences) / len(confidences)) if confidences else None,
        mean_latency_ms=(sum(latencies_ms) / len(latencies_ms)) if latencies_ms else None,
        n_excluded=n_excluded,
    )


@dataclass(frozen=True)
class SeverityDistribution:
    severity_counts: dict[Severity, int]
    type_counts: dict[ThreatType, int]

    @property
    def true_positives(self) -> int:
        return sum(self.severity_counts.values())

    def type_shares(self) -> dict[ThreatType, Fraction]:
        total = self.true_positives
        if total == 0:
            return {t: Fraction(0) for t in self.type_counts}
        return {t: Fraction(c, total) for t, c in self.type_counts.items()}

    def to_dict(self) -> dict:
        return {
            "severity_counts": {s.value: c for s, c in self.severity_counts.items()},
            "type_counts": {t.value: c for t, c in self.type_counts.items()},
        }


def severity_distribution(results, truth: Sequence[bool]) -> SeverityDistribution:
    """Severity and threat-type counts over true-positive detections only.

    ``results`` is any sequence of objects carrying a consensus outcome with
    final_is_attack / final_severity / final_type (pipeline results).
    """
    if len(results) != len(truth):
        raise LengthMismatch(f"{len(results)} results vs {len(truth)} truths")
    severity_counts = {s: 0 for s in Severity}
    type_counts: dict[ThreatType, int] = {}
    for result, is_attack in zip(results, truth):
        c = getattr(result, "consensus", result)
        if c is None or not is_attack or not c.final_is_attack:
            continue
        severity_counts[c.final_severity] += 1
        type_counts[c.final_type] = type_counts.get(c.final_type, 0) + 1
    return SeverityDistribution(severity_counts, type_counts)


# --- comparison report --------------------------------------------------------

def _pct(value: float, places: int) -> str:
    q = Decimal(1).scaleb(-places)
    return f"{Decimal(str(value * 100)).quantize(q, rounding=ROUND_HALF_UP)}%"


_ROWS = (
    ("Total Records Analyzed", lambda r: str(r.matrix.total)),
    ("Ground-Truth Attack Records", lambda r: str(r.matrix.tp + r.matrix.fn)),
    ("True Positives (TP)", lambda r: str(r.matrix.tp)),
    ("False Negatives (FN)", lambda r: str(r.matrix.fn)),
    ("False Positives (FP)", lambda r: str(r.matrix.fp)),
    ("True Negatives (TN)", lambda r: str(r.matrix.tn)),
    ("Detection Accuracy", lambda r: _pct(r.accuracy, 1)),
    ("Precision", lambda r: _pct(r.precision, 2)),
    ("Recall", lambda r: _pct(r.recall, 2)),
    ("F1-Score", lambda r: _pct(r.f1, 1)),
    ("False Positive Rate (FPR)", lambda r: _pct(r.fpr, 1)),
    ("Confidence Score (Average)", lambda r: (
        f"{r.mean_confidence:.2f}" if r.mean_confidence is not None else "-")),
    ("Response Latency (Average)", lambda r: (
        f"{r.mean_latency_ms / 1000:.1f} s" if r.mean_latency_ms is not None else "-")),
)

FOOTNOTE = (
    "All derived metrics are computed from the matrix counts; "
    "computed values are emitted even where published figures disagree "
    "with their own counts."
)


def comparison_report(named_reports: list[tuple[str, MetricsReport]]) -> tuple[str, dict]:
    """Render metric rows for each labeled report, plus a machine-readable
    document that round-trips losslessly through JSON."""
    if not named_reports:
        raise ValueError("need at least one report")
    labels = [label for label, _ in named_reports]
    widths = [max(len("Metric"), *(len(name) for name, _ in _ROWS))]
    cells: list[list[str]] = []
    for name, fn in _ROWS:
        cells.append([name] + [fn(report) for _, report in named_reports])
    for j, label in enumerate(labels, start=1):
        widths.append(max(len(label), *(len(row[j]) for row in cells)))

    def fmt(row):
        return " | ".join(cell.ljust(w) for cell, w in zip(row, widths))

    lines = [fmt(["Metric", *labels]), "-+-".join("-" * w for w in widths)]
    lines.extend(fmt(row) for row in cells)
    lines.append("")
    lines.append(FOOTNOTE)
    document = {
        "reports": [{"label": label, "metrics": r.to_dict()} for label, r in named_reports],
        "footnote": FOOTNOTE,
    }
    return "\n".join(lines), document


def dump_report(report: MetricsReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=2)


def load_report(text: str) -> MetricsReport:
    return MetricsReport.from_dict(json.loads(text))
