"""Market-level aggregation and report emission.

Every proportion in a report carries its fraction (count and
denominator) so numbers stay re-derivable; percents are rounded half-up
to two decimals. Serialization is deterministic: the same report always
emits identical bytes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime
from decimal import Decimal, ROUND_HALF_UP

from .capture import DataCategory
from .completeness import (AppCompletenessResult, MissingRateHistogram,
                           aggregate_consistency, missing_rate_histogram)
from .errors import DataError
from .ledger import (AccessRequest, FeedbackBucket, MethodKind, Outcome,
                     UiDepthRecord, authenticity_summary, feedback_histogram,
                     ui_depth_histogram)
from .rights import RadsFinding, RightsClass

_TWO_PLACES = Decimal("0.01")


@dataclass(frozen=True)
class Proportion:
    count: int
    denominator: int

    @property
    def percent(self) -> Decimal | None:
        """Percentage rounded half-up to two decimals; None when undefined."""
        if self.denominator == 0:
            return None
        return (Decimal(self.count) * 100 / Decimal(self.denominator)).quantize(
            _TWO_PLACES, rounding=ROUND_HALF_UP
        )

    def __str__(self) -> str:
        if self.percent is None:
            return f"- ({self.count}/{self.denominator})"
        return f"{self.percent}% ({self.count}/{self.denominator})"

    def to_dict(self) -> dict:
        pct = self.percent
        return {
            "count": self.count,
            "denominator": self.denominator,
            "percent": None if pct is None else f"{pct}%",
        }


def aggregate_rads(findings: list[RadsFinding]) -> dict[RightsClass, Proportion]:
    """Share of apps per declaration class; classes partition the corpus."""
    if not findings:
        raise DataError("no findings to aggregate")
    total = len(findings)
    return {
        cls: Proportion(sum(1 for f in findings if f.rights_class is cls), total)
        for cls in RightsClass
    }


def aggregate_methods(findings: list[RadsFinding]) -> dict[MethodKind, Proportion]:
    """Share of right-declaring apps per method; methods are non-exclusive."""
    declaring = [f for f in findings if f.rights_class is not RightsClass.NONE]
    denominator = len(declaring)
    return {
        method: Proportion(sum(1 for f in declaring if method in f.methods), denominator)
        for method in MethodKind
    }


@dataclass
class ComplianceReport:
    market_id: str
    apps_total: int = 0
    rads: dict[RightsClass, Proportion] = field(default_factory=dict)
    methods: dict[MethodKind, Proportion] = field(default_factory=dict)
    authenticity: dict[MethodKind, dict[Outcome, Proportion]] = field(default_factory=dict)
    feedback: dict[MethodKind, dict[FeedbackBucket, Proportion]] = field(default_factory=dict)
    ui_depth: dict[str, Proportion] = field(default_factory=dict)
    consistency: dict[DataCategory, Proportion] = field(default_factory=dict)
    missing_rate: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "market_id": self.market_id,
            "apps_total": self.apps_total,
            "rads": {c.value: p.to_dict() for c, p in self.rads.items()},
            "methods": {m.value: p.to_dict() for m, p in self.methods.items()},
            "authenticity": {
                m.value: {o.value: p.to_dict() for o, p in table.items()}
                for m, table in self.authenticity.items()
            },
            "feedback": {
                m.value: {b.value: p.to_dict() for b, p in table.items()}
                for m, table in self.feedback.items()
            },
            "ui_depth": {k: p.to_dict() for k, p in self.ui_depth.items()},
            "consistency": {c.value: p.to_dict() for c, p in self.consistency.items()},
            "missing_rate": self.missing_rate,
        }


def missing_rate_section(hist: MissingRateHistogram) -> dict:
    return {
        "total": hist.total,
        "skipped_no_collection": hist.skipped,
        "complete": Proportion(hist.complete, hist.total).to_dict(),
        "bands": [
            {"band": label, **Proportion(count, hist.total).to_dict()}
            for label, count in hist.bands
        ],
        "exceeding": {
            f"{threshold:g}": Proportion(count, hist.total).to_dict()
            for threshold, count in sorted(hist.exceeding.items())
        },
    }


def build_report(market_id: str,
                 findings: list[RadsFinding] | None = None,
                 requests: list[AccessRequest] | None = None,
                 ui_depths: list[UiDepthRecord] | None = None,
                 results: list[AppCompletenessResult] | None = None,
                 horizon: datetime | None = None,
                 thresholds: tuple[float, ...] = (0.4, 0.8)) -> ComplianceReport:
    """Assemble a market report from whatever audit stages have run."""
    report = ComplianceReport(market_id=market_id)

    if findings:
        report.apps_total = len(findings)
        report.rads = aggregate_rads(findings)
        report.methods = aggregate_methods(findings)

    if requests:
        summary = authenticity_summary(requests)
        report.authenticity = {
            method: {
                Outcome.FAILURE: Proportion(auth.failure, auth.total),
                Outcome.VIEW_INFORMATION: Proportion(auth.view_information, auth.total),
                Outcome.OBTAIN_DATA_COPY: Proportion(auth.obtain_data_copy, auth.total),
            }
            for method, auth in summary.items()
        }
        if horizon is None:
            raise DataError("a horizon timestamp is required to bucket feedback durations")
        buckets = feedback_histogram(requests, horizon)
        report.feedback = {
            method: {
                bucket: Proportion(count, sum(table.values()))
                for bucket, count in table.items()
            }
            for method, table in buckets.items()
        }

    if ui_depths:
        counts = ui_depth_histogram(ui_depths)
        total = sum(counts.values())
        report.ui_depth = {key: Proportion(count, total) for key, count in counts.items()}

    if results:
        report.consistency = {
            category: Proportion(agg.matched, agg.collected)
            for category, agg in aggregate_consistency(results).items()
        }
        report.missing_rate = missing_rate_section(missing_rate_histogram(results, thresholds))

    return report


def emit_report(report: ComplianceReport, fmt: str = "json") -> str:
    """Serialize a report; markdown tables mirror the JSON content."""
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    if fmt == "markdown":
        return _to_markdown(report)
    raise DataError(f"unknown report format {fmt!r}")


def _md_table(headers: list[str], rows: list[list[str]]) -> list[str]:
    lines = ["| " + " | ".join(headers) + " |",
             "| " + " | ".join("---" for _ in headers) + " |"]
    lines.extend("| " + " | ".join(row) + " |" for row in rows)
    return lines


def _to_markdown(report: ComplianceReport) -> str:
    lines = [f"# Compliance report: {report.market_id}", ""]
    lines.append(f"Apps analyzed: {report.apps_total}")
    lines.append("")

    if report.rads:
        lines.append("## Right-of-access declarations")
        lines += _md_table(
            ["Class", "Share"],
            [[c.value, str(report.rads[c])] for c in RightsClass if c in report.rads],
        )
        lines.append("")

    if report.methods:
        lines.append("## Implementation methods (among declaring apps)")
        lines += _md_table(
            ["Method", "Share"],
            [[m.value, str(report.methods[m])] for m in MethodKind if m in report.methods],
        )
        lines.append("")

    if report.authenticity:
        lines.append("## Authenticity of implementation methods")
        rows = []
        for method in MethodKind:
            table = report.authenticity.get(method)
            if not table:
                continue
            for outcome in Outcome:
                rows.append([method.value, outcome.value, str(table[outcome])])
        lines += _md_table(["Method", "Outcome", "Share"], rows)
        lines.append("")

    if report.feedback:
        lines.append("## Feedback duration")
        rows = []
        for method in MethodKind:
            table = report.feedback.get(method)
            if not table:
                continue
            for bucket in FeedbackBucket:
                rows.append([method.value, bucket.value, str(table[bucket])])
        lines += _md_table(["Method", "Bucket", "Share"], rows)
        lines.append("")

    if report.ui_depth:
        lines.append("## Settings UI depth")
        lines += _md_table(
            ["Depth", "Share"],
            [[key, str(report.ui_depth[key])] for key in ("2", "3", "4", "5", "NotFound")
             if key in report.ui_depth],
        )
        lines.append("")

    if report.consistency:
        lines.append("## Per-category consistency (among collecting apps)")
        lines += _md_table(
            ["Category", "Share"],
            [[c.value, str(report.consistency[c])] for c in DataCategory if c in report.consistency],
        )
        lines.append("")

    if report.missing_rate:
        section = report.missing_rate
        lines.append("## Missing rate")
        lines.append(f"Copies judged: {section['total']} "
                     f"(skipped, nothing collected: {section['skipped_no_collection']})")
        rows = [["complete (=0)", _prop_str(section["complete"])]]
        rows += [[band["band"], _prop_str(band)] for band in section["bands"]]
        for threshold, prop in section["exceeding"].items():
            rows.append([f"exceeding {threshold}", _prop_str(prop)])
        lines += _md_table(["Bucket", "Share"], rows)
        lines.append("")

    return "\n".join(lines).rstrip("\n") + "\n"


def _prop_str(prop_dict: dict) -> str:
    pct = prop_dict["percent"] if prop_dict["percent"] is not None else "-"
    return f"{pct} ({prop_dict['count']}/{prop_dict['denominator']})"
