"""Comparison of data-copy extractions against runtime-captured profiles.

For each category an app actually collected, the copy either contains a
value matching a captured one (consistent), contains only non-matching
values, or omits the category entirely. The missing rate is the share
of collected categories the copy fails to account for.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .capture import CapturedProfile, DataCategory, canonicalize, round_coordinate
from .copy_parser import CategoryExtraction
from .errors import DataError


class ConsistencyStatus(Enum):
    NOT_COLLECTED = "NotCollected"
    MATCHED_CONSISTENT = "MatchedConsistent"
    PRESENT_BUT_MISMATCH = "PresentButMismatch"
    ABSENT_FROM_COPY = "AbsentFromCopy"


MISSING_STATUSES = {ConsistencyStatus.PRESENT_BUT_MISMATCH, ConsistencyStatus.ABSENT_FROM_COPY}
DEFAULT_THRESHOLDS = (0.4, 0.8)

_LAT_RE = re.compile(r"(^|[^a-z])lat(itude)?([^a-z]|$)", re.IGNORECASE)
_LON_RE = re.compile(r"(^|[^a-z])(lng|lon(gitude)?)([^a-z]|$)", re.IGNORECASE)


@dataclass
class AppCompletenessResult:
    app_id: str
    per_category: dict[DataCategory, ConsistencyStatus]
    missing_rate: float | None
    no_collection: bool = False

    def to_dict(self) -> dict:
        return {
            "app_id": self.app_id,
            "per_category": {c.value: s.value for c, s in
                             sorted(self.per_category.items(), key=lambda i: i[0].value)},
            "missing_rate": self.missing_rate,
            "no_collection": self.no_collection,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AppCompletenessResult":
        return cls(
            app_id=data["app_id"],
            per_category={DataCategory(c): ConsistencyStatus(s)
                          for c, s in data.get("per_category", {}).items()},
            missing_rate=data.get("missing_rate"),
            no_collection=bool(data.get("no_collection", False)),
        )


@dataclass
class LocationCandidates:
    """Canonical location values recombined from copy entries.

    Full values compare by equality; partial (unpaired) halves can only
    match as substrings of a captured "lat,lon" value.
    """

    full: set[str] = field(default_factory=set)
    partial: set[str] = field(default_factory=set)


def pair_location(entries: list[tuple[str, str]], decimals: int = 4) -> LocationCandidates:
    """Recombine latitude/longitude halves split across copy fields.

    Halves are paired when their descriptions share a prefix (the
    description minus its final segment), in order of appearance.
    """
    out = LocationCandidates()
    lats: dict[str, list[str]] = {}
    lons: dict[str, list[str]] = {}
    for description, value in entries:
        leaf = description.rsplit(".", 1)[-1]
        prefix = description.rsplit(".", 1)[0] if "." in description else ""
        if _LAT_RE.search(leaf):
            bucket, other = lats, None
        elif _LON_RE.search(leaf):
            bucket, other = lons, None
        else:
            try:
                out.full.add(canonicalize(DataCategory.LOCATION, value, decimals))
            except DataError:
                try:
                    out.partial.add(round_coordinate(value, decimals))
                except DataError:
                    pass
            continue
        try:
            bucket.setdefault(prefix, []).append(round_coordinate(value, decimals))
        except DataError:
            continue
    for prefix, lat_values in lats.items():
        lon_values = lons.get(prefix, [])
        for lat, lon in zip(lat_values, lon_values):
            out.full.add(f"{lat},{lon}")
        out.partial.update(lat_values[len(lon_values):])
    for prefix, lon_values in lons.items():
        lat_values = lats.get(prefix, [])
        out.partial.update(lon_values[len(lat_values):])
    return out


def _ipv4_prefix(value: str) -> str | None:
    parts = value.split(".")
    return ".".join(parts[:3]) if len(parts) == 4 else None


def _category_matches(category: DataCategory, captured: set[str],
                      entries: list[tuple[str, str]], lenient_ip: bool,
                      location_decimals: int) -> bool:
    if category is DataCategory.LOCATION:
        candidates = pair_location(entries, location_decimals)
        if candidates.full & captured:
            return True
        return any(part in cap for part in candidates.partial for cap in captured)

    canonical_candidates = set()
    for _, value in entries:
        try:
            canonical_candidates.add(canonicalize(category, value, location_decimals))
        except DataError:
            continue
    if canonical_candidates & captured:
        return True
    if lenient_ip and category is DataCategory.IP_ADDRESS:
        captured_prefixes = {p for p in map(_ipv4_prefix, captured) if p}
        return any(_ipv4_prefix(c) in captured_prefixes
                   for c in canonical_candidates if _ipv4_prefix(c))
    return False


def compare(profile: CapturedProfile, extraction: CategoryExtraction, *,
            lenient_ip: bool = False, location_decimals: int = 4) -> AppCompletenessResult:
    """Judge one app's copy against its captured profile, category by category."""
    per_category: dict[DataCategory, ConsistencyStatus] = {}
    for category in DataCategory:
        if category not in profile.collected:
            per_category[category] = ConsistencyStatus.NOT_COLLECTED
            continue
        entries = extraction.get(category, [])
        if not entries:
            per_category[category] = ConsistencyStatus.ABSENT_FROM_COPY
            continue
        captured = profile.values.get(category, set())
        matched = _category_matches(category, captured, entries, lenient_ip, location_decimals)
        per_category[category] = (
            ConsistencyStatus.MATCHED_CONSISTENT if matched
            else ConsistencyStatus.PRESENT_BUT_MISMATCH
        )

    collected_count = sum(1 for s in per_category.values() if s is not ConsistencyStatus.NOT_COLLECTED)
    missing = sum(1 for s in per_category.values() if s in MISSING_STATUSES)
    if collected_count == 0:
        return AppCompletenessResult(profile.app_id, per_category, None, no_collection=True)
    return AppCompletenessResult(profile.app_id, per_category, missing / collected_count)


@dataclass(frozen=True)
class ConsistencyAggregate:
    matched: int
    collected: int

    @property
    def proportion(self) -> float | None:
        return self.matched / self.collected if self.collected else None


def aggregate_consistency(results: list[AppCompletenessResult]) -> dict[DataCategory, ConsistencyAggregate]:
    """Per-category share of apps whose copy matched, among apps that collected it."""
    if not results:
        raise DataError("no completeness results to aggregate")
    out: dict[DataCategory, ConsistencyAggregate] = {}
    for category in DataCategory:
        collected = sum(
            1 for r in results
            if r.per_category.get(category, ConsistencyStatus.NOT_COLLECTED)
            is not ConsistencyStatus.NOT_COLLECTED
        )
        matched = sum(
            1 for r in results
            if r.per_category.get(category) is ConsistencyStatus.MATCHED_CONSISTENT
        )
        out[category] = ConsistencyAggregate(matched=matched, collected=collected)
    return out


@dataclass
class MissingRateHistogram:
    total: int                      # results with a defined missing rate
    complete: int                   # missing rate exactly zero
    bands: list[tuple[str, int]]    # disjoint buckets: =0, (0,t1], ..., >tn
    exceeding: dict[float, int]     # cumulative: rate strictly above threshold
    skipped: int                    # results with no collection observed

    def band_share(self, label: str) -> float | None:
        counts = dict(self.bands)
        return counts[label] / self.total if self.total else None

    @property
    def complete_share(self) -> float | None:
        return self.complete / self.total if self.total else None


def missing_rate_histogram(results: list[AppCompletenessResult],
                           thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS) -> MissingRateHistogram:
    """Bucket missing rates by the configured thresholds.

    Emits both disjoint bands and cumulative above-threshold counts; apps
    where nothing was collected are excluded and reported separately.
    """
    if not results:
        raise DataError("no completeness results to bucket")
    cuts = sorted(set(thresholds))
    if any(not 0 < t < 1 for t in cuts):
        raise DataError(f"thresholds must lie strictly between 0 and 1: {thresholds}")
    rates = [r.missing_rate for r in results if r.missing_rate is not None]
    skipped = len(results) - len(rates)

    labels = ["=0"]
    lo = 0.0
    for t in cuts:
        labels.append(f"({lo:g},{t:g}]")
        lo = t
    labels.append(f">{lo:g}")

    band_counts = {label: 0 for label in labels}
    for rate in rates:
        if rate == 0:
            band_counts["=0"] += 1
            continue
        placed = False
        lo = 0.0
        for t in cuts:
            if lo < rate <= t:
                band_counts[f"({lo:g},{t:g}]"] += 1
                placed = True
                break
            lo = t
        if not placed:
            band_counts[f">{lo:g}"] += 1

    return MissingRateHistogram(
        total=len(rates),
        complete=band_counts["=0"],
        bands=[(label, band_counts[label]) for label in labels],
        exceeding={t: sum(1 for r in rates if r > t) for t in cuts},
        skipped=skipped,
    )
