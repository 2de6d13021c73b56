from __future__ import annotations

import json
import random
from datetime import datetime, timedelta, timezone
from decimal import Decimal

import pytest

from rads_audit.capture import DataCategory
from rads_audit.completeness import AppCompletenessResult, ConsistencyStatus
from rads_audit.errors import DataError
from rads_audit.ledger import AccessRequest, AccessRight, Outcome, UiDepthRecord
from rads_audit.report import (ComplianceReport, Proportion, aggregate_methods,
                               aggregate_rads, build_report, emit_report)
from rads_audit.rights import MethodKind, RadsFinding, RightsClass


def findings_with_counts(vdar: int, dcar: int, none: int) -> list[RadsFinding]:
    out = []
    for i in range(vdar):
        out.append(RadsFinding(f"v{i}", RightsClass.VDAR, frozenset({MethodKind.EMAIL_CONTACT})))
    for i in range(dcar):
        out.append(RadsFinding(f"d{i}", RightsClass.DCAR, frozenset({MethodKind.ACCOUNT_SETTINGS})))
    for i in range(none):
        out.append(RadsFinding(f"n{i}", RightsClass.NONE))
    return out


# --- proportions ----------------------------------------------------------------

def test_proportion_half_up_two_decimals():
    assert str(Proportion(327, 600)) == "54.50% (327/600)"
    assert Proportion(85, 600).percent == Decimal("14.17")
    assert Proportion(188, 600).percent == Decimal("31.33")


def test_proportion_half_up_boundary():
    # 1/800 = 0.125% exactly; half-up gives 0.13, not banker's 0.12.
    assert Proportion(1, 800).percent == Decimal("0.13")


def test_proportion_zero_denominator_absent():
    p = Proportion(0, 0)
    assert p.percent is None
    assert p.to_dict()["percent"] is None


# --- rads aggregation --------------------------------------------------------------

def test_market_class_shares():
    shares = aggregate_rads(findings_with_counts(85, 327, 188))
    assert str(shares[RightsClass.VDAR]) == "14.17% (85/600)"
    assert str(shares[RightsClass.DCAR]) == "54.50% (327/600)"
    assert str(shares[RightsClass.NONE]) == "31.33% (188/600)"


def test_all_none_market():
    shares = aggregate_rads(findings_with_counts(0, 0, 7))
    assert shares[RightsClass.VDAR].count == 0
    assert shares[RightsClass.DCAR].count == 0
    assert shares[RightsClass.NONE].percent == Decimal("100.00")


def test_small_market_shares():
    shares = aggregate_rads(findings_with_counts(1, 1, 2))
    assert shares[RightsClass.VDAR].percent == Decimal("25.00")
    assert shares[RightsClass.DCAR].percent == Decimal("25.00")
    assert shares[RightsClass.NONE].percent == Decimal("50.00")


def test_classes_partition_the_corpus():
    rng = random.Random(6)
    for _ in range(20):
        findings = findings_with_counts(rng.randint(0, 20), rng.randint(0, 20), rng.randint(1, 20))
        shares = aggregate_rads(findings)
        assert sum(p.count for p in shares.values()) == len(findings)
        total_pct = sum(p.percent for p in shares.values())
        assert abs(total_pct - 100) <= Decimal("0.01")


def test_empty_market_rejected():
    with pytest.raises(DataError):
        aggregate_rads([])


# --- method aggregation --------------------------------------------------------------

def test_method_share_among_declaring_apps():
    findings = []
    for i in range(282):
        findings.append(RadsFinding(f"e{i}", RightsClass.DCAR, frozenset({MethodKind.EMAIL_CONTACT})))
    for i in range(127):
        findings.append(RadsFinding(f"o{i}", RightsClass.VDAR, frozenset()))
    findings += [RadsFinding(f"x{i}", RightsClass.NONE) for i in range(100)]
    shares = aggregate_methods(findings)
    assert str(shares[MethodKind.EMAIL_CONTACT]) == "68.95% (282/409)"


def test_methods_not_exclusive():
    findings = [
        RadsFinding("a", RightsClass.DCAR,
                    frozenset({MethodKind.EMAIL_CONTACT, MethodKind.ACCOUNT_SETTINGS})),
        RadsFinding("b", RightsClass.VDAR, frozenset({MethodKind.EMAIL_CONTACT})),
    ]
    shares = aggregate_methods(findings)
    assert shares[MethodKind.EMAIL_CONTACT].percent == Decimal("100.00")
    assert shares[MethodKind.ACCOUNT_SETTINGS].percent == Decimal("50.00")


def test_no_declaring_apps_guarded():
    shares = aggregate_methods([RadsFinding("a", RightsClass.NONE)])
    assert shares[MethodKind.EMAIL_CONTACT].denominator == 0
    assert shares[MethodKind.EMAIL_CONTACT].percent is None


def test_cross_market_pool():
    assert Proportion(709, 1104).percent == Decimal("64.22")
    assert Proportion(753, 1104).percent == Decimal("68.21")
    assert Proportion(114, 1104).percent == Decimal("10.33")


# --- report assembly and emission -------------------------------------------------------

T0 = datetime(2024, 3, 1, tzinfo=timezone.utc)


def sample_report() -> ComplianceReport:
    findings = findings_with_counts(2, 3, 1)
    requests = [
        AccessRequest("r1", "d0", MethodKind.ACCOUNT_SETTINGS, AccessRight.OBTAIN_COPY, T0,
                      feedback_at=T0 + timedelta(hours=3), outcome=Outcome.OBTAIN_DATA_COPY),
        AccessRequest("r2", "d1", MethodKind.EMAIL_CONTACT, AccessRight.OBTAIN_COPY, T0),
    ]
    ui = [UiDepthRecord("d0", 3), UiDepthRecord("d1", None)]
    per_cat = {c: ConsistencyStatus.NOT_COLLECTED for c in DataCategory}
    per_cat[DataCategory.IP_ADDRESS] = ConsistencyStatus.MATCHED_CONSISTENT
    per_cat[DataCategory.SSID] = ConsistencyStatus.ABSENT_FROM_COPY
    results = [AppCompletenessResult("d0", per_cat, 0.5)]
    return build_report("testmarket", findings=findings, requests=requests, ui_depths=ui,
                        results=results, horizon=T0 + timedelta(days=30))


def test_empty_market_report_is_valid():
    report = build_report("empty-market")
    doc = emit_report(report, "json")
    parsed = json.loads(doc)
    assert parsed["market_id"] == "empty-market"
    assert parsed["apps_total"] == 0
    md = emit_report(report, "markdown")
    assert "empty-market" in md


def test_report_json_round_trips():
    report = sample_report()
    doc = emit_report(report, "json")
    assert json.loads(doc) == report.to_dict()


def test_emission_is_byte_identical():
    report = sample_report()
    assert emit_report(report, "json") == emit_report(report, "json")
    assert emit_report(report, "markdown") == emit_report(report, "markdown")
    rebuilt = sample_report()
    assert emit_report(rebuilt, "json") == emit_report(report, "json")


def test_markdown_mirrors_json_proportions():
    report = sample_report()
    md = emit_report(report, "markdown")
    parsed = json.loads(emit_report(report, "json"))
    rads_row = parsed["rads"]["DCAR"]
    expected = f'{rads_row["percent"]} ({rads_row["count"]}/{rads_row["denominator"]})'
    assert expected in md


def test_every_printed_proportion_rederivable():
    parsed = json.loads(emit_report(sample_report(), "json"))

    def walk(node):
        if isinstance(node, dict):
            if set(node) >= {"count", "denominator", "percent"}:
                count, denom, pct = node["count"], node["denominator"], node["percent"]
                if denom == 0:
                    assert pct is None
                else:
                    from decimal import ROUND_HALF_UP
                    expected = (Decimal(count) * 100 / Decimal(denom)).quantize(
                        Decimal("0.01"), rounding=ROUND_HALF_UP)
                    assert pct == f"{expected}%"
            for value in node.values():
                walk(value)
        elif isinstance(node, list):
            for item in node:
                walk(item)

    walk(parsed)


def test_unknown_format_rejected():
    with pytest.raises(DataError):
        emit_report(build_report("m"), "pdf")


def test_feedback_requires_horizon():
    requests = [AccessRequest("r1", "a", MethodKind.EMAIL_CONTACT, AccessRight.OBTAIN_COPY, T0)]
    with pytest.raises(DataError, match="horizon"):
        build_report("m", requests=requests)
