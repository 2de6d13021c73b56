"""Binary-classification metrics for identification quality checks.

Predicted findings are compared against hand-labeled gold findings, one
binary target at a time: each rights class and each implementation
method. Precision/recall/F1 with a zero denominator are reported as
absent (None), never as zero.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import DataError
from .rights import MethodKind, RadsFinding, RightsClass

EVAL_TARGETS = ("VDAR", "DCAR", "EmailContact", "AccountSettings", "WebformSubmission")


@dataclass(frozen=True)
class TargetMetrics:
    tp: int
    fp: int
    fn: int
    tn: int
    accuracy: float
    precision: float | None
    recall: float | None
    f1: float | None

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int, tn: int) -> "TargetMetrics":
        total = tp + fp + fn + tn
        if total == 0:
            raise DataError("cannot compute metrics over zero samples")
        accuracy = (tp + tn) / total
        precision = tp / (tp + fp) if tp + fp > 0 else None
        recall = tp / (tp + fn) if tp + fn > 0 else None
        f1 = None
        if precision is not None and recall is not None and precision + recall > 0:
            f1 = 2 * precision * recall / (precision + recall)
        return cls(tp, fp, fn, tn, accuracy, precision, recall, f1)


@dataclass
class MetricsReport:
    per_target: dict[str, TargetMetrics]

    def to_dict(self) -> dict:
        return {
            name: {
                "tp": m.tp, "fp": m.fp, "fn": m.fn, "tn": m.tn,
                "accuracy": m.accuracy, "precision": m.precision,
                "recall": m.recall, "f1": m.f1,
            }
            for name, m in self.per_target.items()
        }


def _is_positive(finding: RadsFinding, target: str) -> bool:
    if target in ("VDAR", "DCAR"):
        return finding.rights_class is RightsClass(target)
    return MethodKind(target) in finding.methods


def evaluate_classifier(predicted: list[RadsFinding], labeled: list[RadsFinding]) -> MetricsReport:
    """Score predictions against gold labels over the five standard targets."""
    pred_by_app = {f.app_id: f for f in predicted}
    gold_by_app = {f.app_id: f for f in labeled}
    if set(pred_by_app) != set(gold_by_app):
        missing = set(gold_by_app) ^ set(pred_by_app)
        raise DataError(f"predicted and labeled app sets differ: {sorted(missing)[:5]}")
    if not gold_by_app:
        raise DataError("no apps to evaluate")

    per_target: dict[str, TargetMetrics] = {}
    for target in EVAL_TARGETS:
        tp = fp = fn = tn = 0
        for app_id, gold in gold_by_app.items():
            pred = pred_by_app[app_id]
            p, g = _is_positive(pred, target), _is_positive(gold, target)
            if p and g:
                tp += 1
            elif p and not g:
                fp += 1
            elif not p and g:
                fn += 1
            else:
                tn += 1
        per_target[target] = TargetMetrics.from_counts(tp, fp, fn, tn)
    return MetricsReport(per_target=per_target)


def format_metrics_table(report: MetricsReport) -> str:
    """Aligned text rendering of a metrics report."""
    headers = ("Target", "Acc", "P", "R", "F1", "TP", "FP", "FN", "TN")
    rows = [headers]
    for name, m in report.per_target.items():
        def pct(v: float | None) -> str:
            return "-" if v is None else f"{100 * v:.2f}%"

        rows.append((name, pct(m.accuracy), pct(m.precision), pct(m.recall), pct(m.f1),
                     str(m.tp), str(m.fp), str(m.fn), str(m.tn)))
    widths = [max(len(r[i]) for r in rows) for i in range(len(headers))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
             for row in rows]
    return "\n".join(lines)
