from __future__ import annotations

import random

import pytest

from rads_audit.capture import CapturedProfile, DataCategory
from rads_audit.completeness import (AppCompletenessResult, ConsistencyStatus,
                                     aggregate_consistency, compare,
                                     missing_rate_histogram, pair_location)
from rads_audit.errors import DataError

IP = DataCategory.IP_ADDRESS
LOC = DataCategory.LOCATION
SSID = DataCategory.SSID


def profile_of(app_id="app", **values) -> CapturedProfile:
    by_cat = {DataCategory(k): set(v) for k, v in values.items()}
    return CapturedProfile(
        app_id=app_id, values=by_cat, collected=frozenset(by_cat),
    )


# --- compare -----------------------------------------------------------------

def test_exact_agreement():
    profile = profile_of(IPAddress={"1.2.3.4"})
    result = compare(profile, {IP: [("ip", "1.2.3.4")]})
    assert result.per_category[IP] is ConsistencyStatus.MATCHED_CONSISTENT
    assert result.missing_rate == 0.0


def test_one_of_four_matching():
    profile = profile_of(
        IPAddress={"1.2.3.4"}, SSID={"Net"}, AndroidID={"aa"}, MccMnc={"310260"},
    )
    result = compare(profile, {IP: [("ip", "1.2.3.4")]})
    assert result.missing_rate == pytest.approx(0.75)
    assert result.per_category[SSID] is ConsistencyStatus.ABSENT_FROM_COPY


def test_not_collected_categories_ignored():
    profile = profile_of(SSID={"Net"})
    result = compare(profile, {IP: [("ip", "9.9.9.9")]})
    assert result.per_category[IP] is ConsistencyStatus.NOT_COLLECTED
    assert result.per_category[SSID] is ConsistencyStatus.ABSENT_FROM_COPY
    assert result.missing_rate == 1.0


def test_present_but_mismatch():
    profile = profile_of(IPAddress={"1.2.3.4"})
    result = compare(profile, {IP: [("ip", "5.6.7.8")]})
    assert result.per_category[IP] is ConsistencyStatus.PRESENT_BUT_MISMATCH


def test_copy_values_canonicalized_before_match():
    profile = profile_of(AndroidID={"a1b2c3"})
    result = compare(profile, {DataCategory.ANDROID_ID: [("android_id", "A1-B2-C3")]})
    assert result.per_category[DataCategory.ANDROID_ID] is ConsistencyStatus.MATCHED_CONSISTENT


def test_unparseable_copy_value_cannot_match():
    profile = profile_of(IPAddress={"1.2.3.4"})
    result = compare(profile, {IP: [("ip", "not-an-ip")]})
    assert result.per_category[IP] is ConsistencyStatus.PRESENT_BUT_MISMATCH


def test_empty_profile_flagged():
    result = compare(CapturedProfile(app_id="a"), {})
    assert result.no_collection is True
    assert result.missing_rate is None


def test_location_lat_lon_pairing_matches():
    profile = profile_of(Location={"48.1371,11.5754"})
    extraction = {LOC: [("profile.latitude", "48.1371"), ("profile.longitude", "11.5754")]}
    result = compare(profile, extraction)
    assert result.per_category[LOC] is ConsistencyStatus.MATCHED_CONSISTENT


def test_lenient_ip_prefix_match():
    profile = profile_of(IPAddress={"1.2.3.4"})
    extraction = {IP: [("ip", "1.2.3.99")]}
    strict = compare(profile_of(IPAddress={"1.2.3.4"}), extraction)
    lenient = compare(profile, extraction, lenient_ip=True)
    assert strict.per_category[IP] is ConsistencyStatus.PRESENT_BUT_MISMATCH
    assert lenient.per_category[IP] is ConsistencyStatus.MATCHED_CONSISTENT


def test_any_one_agreement_suffices_for_multivalued_captures():
    profile = profile_of(IPAddress={"1.2.3.4", "10.0.0.1"})
    result = compare(profile, {IP: [("ip", "10.0.0.1")]})
    assert result.per_category[IP] is ConsistencyStatus.MATCHED_CONSISTENT


def test_collected_but_valueless_category_cannot_match():
    profile = CapturedProfile(app_id="a", values={}, collected=frozenset({SSID}),
                              flagged=frozenset({SSID}))
    result = compare(profile, {SSID: [("ssid", "Net")]})
    assert result.per_category[SSID] is ConsistencyStatus.PRESENT_BUT_MISMATCH


def test_compare_ignores_entry_order():
    profile = profile_of(IPAddress={"1.2.3.4"})
    entries = [("a", "9.9.9.9"), ("b", "1.2.3.4"), ("c", "8.8.8.8")]
    rng = random.Random(1)
    baseline = compare(profile, {IP: list(entries)}).per_category[IP]
    for _ in range(5):
        shuffled = entries[:]
        rng.shuffle(shuffled)
        assert compare(profile, {IP: shuffled}).per_category[IP] is baseline


def test_result_serialization_round_trip():
    profile = profile_of(IPAddress={"1.2.3.4"}, SSID={"Net"})
    result = compare(profile, {IP: [("ip", "1.2.3.4")]})
    clone = AppCompletenessResult.from_dict(result.to_dict())
    assert clone.per_category == result.per_category
    assert clone.missing_rate == result.missing_rate


# --- pair_location ------------------------------------------------------------

def test_pairing_by_shared_prefix():
    candidates = pair_location([("profile.latitude", "48.1371"),
                                ("profile.longitude", "11.5754")])
    assert candidates.full == {"48.1371,11.5754"}
    assert candidates.partial == set()


def test_single_location_entry_canonicalized():
    candidates = pair_location([("location", "48.1371,11.5754")])
    assert candidates.full == {"48.1371,11.5754"}


def test_unpaired_latitude_stays_partial():
    candidates = pair_location([("profile.latitude", "48.13713")])
    assert candidates.full == set()
    assert candidates.partial == {"48.1371"}


def test_mismatched_prefixes_do_not_pair():
    candidates = pair_location([("a.latitude", "1.0"), ("b.longitude", "2.0")])
    assert candidates.full == set()
    assert candidates.partial == {"1.0000", "2.0000"}


def test_repeated_halves_pair_in_order():
    entries = [("s.lat", "1.0"), ("s.lat", "2.0"), ("s.lon", "3.0")]
    candidates = pair_location(entries)
    assert candidates.full == {"1.0000,3.0000"}
    assert candidates.partial == {"2.0000"}


def test_partials_match_by_substring():
    profile = profile_of(Location={"48.1371,11.5754"})
    result = compare(profile, {LOC: [("gps.latitude", "48.13713")]})
    assert result.per_category[LOC] is ConsistencyStatus.MATCHED_CONSISTENT


def test_latency_is_not_latitude():
    candidates = pair_location([("metrics.latency", "15.0")])
    # Neither a recognizable coordinate pair nor a lat/lon half; it can
    # only survive as an opaque partial value.
    assert candidates.full == set()


# --- aggregation ---------------------------------------------------------------

def result_with(app_id: str, statuses: dict[DataCategory, ConsistencyStatus]) -> AppCompletenessResult:
    per_category = {c: statuses.get(c, ConsistencyStatus.NOT_COLLECTED) for c in DataCategory}
    collected = [s for s in per_category.values() if s is not ConsistencyStatus.NOT_COLLECTED]
    missing = [s for s in collected
               if s in (ConsistencyStatus.PRESENT_BUT_MISMATCH, ConsistencyStatus.ABSENT_FROM_COPY)]
    rate = len(missing) / len(collected) if collected else None
    return AppCompletenessResult(app_id, per_category, rate, no_collection=not collected)


def test_aggregate_thirteen_of_twentyseven():
    results = []
    for i in range(13):
        results.append(result_with(f"m{i}", {IP: ConsistencyStatus.MATCHED_CONSISTENT}))
    for i in range(14):
        results.append(result_with(f"x{i}", {IP: ConsistencyStatus.PRESENT_BUT_MISMATCH}))
    for i in range(7):
        results.append(result_with(f"n{i}", {SSID: ConsistencyStatus.MATCHED_CONSISTENT}))
    agg = aggregate_consistency(results)[IP]
    assert (agg.matched, agg.collected) == (13, 27)
    assert agg.proportion == pytest.approx(13 / 27)


def test_aggregate_guards_zero_denominator():
    results = [result_with("a", {IP: ConsistencyStatus.MATCHED_CONSISTENT})]
    agg = aggregate_consistency(results)[SSID]
    assert agg.collected == 0
    assert agg.proportion is None


def test_aggregate_two_of_two():
    results = [result_with(f"a{i}", {SSID: ConsistencyStatus.MATCHED_CONSISTENT}) for i in range(2)]
    assert aggregate_consistency(results)[SSID].proportion == 1.0


def test_aggregate_permutation_invariant():
    rng = random.Random(2)
    statuses = [ConsistencyStatus.MATCHED_CONSISTENT, ConsistencyStatus.PRESENT_BUT_MISMATCH,
                ConsistencyStatus.ABSENT_FROM_COPY, ConsistencyStatus.NOT_COLLECTED]
    results = [result_with(f"a{i}", {IP: rng.choice(statuses), SSID: rng.choice(statuses)})
               for i in range(20)]
    base = aggregate_consistency(results)
    for _ in range(5):
        shuffled = results[:]
        rng.shuffle(shuffled)
        assert aggregate_consistency(shuffled) == base


# --- missing-rate histogram ------------------------------------------------------

def rate_result(app_id: str, rate: float | None) -> AppCompletenessResult:
    return AppCompletenessResult(app_id, {}, rate, no_collection=rate is None)


def test_histogram_complete_share():
    results = [rate_result("z", 0.0)] + [rate_result(f"a{i}", 0.9) for i in range(33)]
    hist = missing_rate_histogram(results)
    assert hist.total == 34
    assert hist.complete == 1
    assert hist.complete_share == pytest.approx(1 / 34)


def test_histogram_all_in_top_bucket():
    results = [rate_result(f"a{i}", 1.0) for i in range(5)]
    hist = missing_rate_histogram(results)
    assert dict(hist.bands)[">0.8"] == 5
    assert hist.exceeding[0.8] == 5


def test_histogram_one_result_per_band():
    results = [rate_result("a", 0.0), rate_result("b", 0.5), rate_result("c", 0.9)]
    hist = missing_rate_histogram(results, thresholds=(0.4, 0.8))
    assert dict(hist.bands) == {"=0": 1, "(0,0.4]": 0, "(0.4,0.8]": 1, ">0.8": 1}


def test_histogram_exceeding_counts_are_cumulative():
    results = [rate_result("a", 0.5), rate_result("b", 0.85), rate_result("c", 0.95)]
    hist = missing_rate_histogram(results, thresholds=(0.4, 0.8))
    assert hist.exceeding[0.4] == 3
    assert hist.exceeding[0.8] == 2


def test_histogram_skips_undefined_rates():
    results = [rate_result("a", 0.5), rate_result("b", None)]
    hist = missing_rate_histogram(results)
    assert hist.total == 1
    assert hist.skipped == 1


def test_histogram_threshold_validation():
    with pytest.raises(DataError):
        missing_rate_histogram([rate_result("a", 0.5)], thresholds=(0.0, 1.5))


def test_histogram_boundary_rates_inclusive_upper():
    results = [rate_result("a", 0.4), rate_result("b", 0.8)]
    hist = missing_rate_histogram(results, thresholds=(0.4, 0.8))
    assert dict(hist.bands) == {"=0": 0, "(0,0.4]": 1, "(0.4,0.8]": 1, ">0.8": 0}
    assert hist.exceeding[0.4] == 1  # only the 0.8 result exceeds 0.4
    assert hist.exceeding[0.8] == 0


# --- monotonicity -----------------------------------------------------------------

def test_adding_matching_entry_never_raises_rate():
    profile = profile_of(IPAddress={"1.2.3.4"}, SSID={"Net"})
    base_extraction = {IP: [("ip", "9.9.9.9")]}
    before = compare(profile, base_extraction).missing_rate
    extended = {IP: [("ip", "9.9.9.9")], SSID: [("ssid", "Net")]}
    after = compare(profile, extended).missing_rate
    assert after <= before


def test_removing_entry_never_lowers_rate():
    profile = profile_of(IPAddress={"1.2.3.4"}, SSID={"Net"})
    extraction = {IP: [("ip", "1.2.3.4")], SSID: [("ssid", "Net")]}
    full = compare(profile, extraction).missing_rate
    reduced = compare(profile, {IP: [("ip", "1.2.3.4")]}).missing_rate
    assert reduced >= full
