"""Runtime-capture ingestion and per-category value canonicalization.

The hook agent streams sensitive-API observations into a CSV with the
fixed header below; this module turns those rows into per-app profiles
of canonical values that data copies are checked against.
"""
from __future__ import annotations

import csv
import io
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from decimal import Decimal, ROUND_HALF_UP
from enum import Enum
from ipaddress import ip_address
from pathlib import Path

from .errors import DataError

logger = logging.getLogger(__name__)

# Contract with the hook agent: header text is fixed, RFC-4180 quoting,
# UTF-8, UTC ISO-8601 timestamps.
CAPTURE_FIELDS = ("timestamp", "api_name", "category", "operation", "return_value", "call_stack")
CAPTURE_HEADER = ",".join(CAPTURE_FIELDS)

LOCATION_DECIMALS = 4


class DataCategory(Enum):
    IP_ADDRESS = "IPAddress"
    NET_TYPE = "NetType"
    SSID = "SSID"
    ANDROID_ID = "AndroidID"
    OAID = "OAID"
    AAID = "AAID"
    VAID = "VAID"
    MCC_MNC = "MccMnc"
    SIM_COUNTRY_CODE = "SimCountryCode"
    LOCATION = "Location"


@dataclass(frozen=True)
class CaptureRecord:
    timestamp: datetime
    api_name: str
    category: DataCategory
    operation: str
    return_value: str
    call_stack: str = ""

    def __post_init__(self):
        if not self.api_name:
            raise DataError("capture record has an empty api_name")

    def to_row(self) -> dict[str, str]:
        return {
            "timestamp": self.timestamp.astimezone(timezone.utc).isoformat().replace("+00:00", "Z"),
            "api_name": self.api_name,
            "category": self.category.value,
            "operation": self.operation,
            "return_value": self.return_value,
            "call_stack": self.call_stack,
        }


@dataclass
class CapturedProfile:
    """Canonical values observed per category for one app.

    ``values`` only lists categories that yielded at least one usable
    value; ``collected`` also covers categories seen with empty or
    unusable returns, which ``flagged`` singles out.
    """

    app_id: str
    values: dict[DataCategory, set[str]] = field(default_factory=dict)
    collected: frozenset[DataCategory] = frozenset()
    flagged: frozenset[DataCategory] = frozenset()

    def to_dict(self) -> dict:
        return {
            "app_id": self.app_id,
            "values": {c.value: sorted(vs) for c, vs in sorted(self.values.items(), key=lambda i: i[0].value)},
            "collected": sorted(c.value for c in self.collected),
            "flagged": sorted(c.value for c in self.flagged),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CapturedProfile":
        return cls(
            app_id=data["app_id"],
            values={DataCategory(k): set(v) for k, v in data.get("values", {}).items()},
            collected=frozenset(DataCategory(c) for c in data.get("collected", [])),
            flagged=frozenset(DataCategory(c) for c in data.get("flagged", [])),
        )


def parse_capture_timestamp(raw: str) -> datetime:
    text = raw.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(text)
    except ValueError as exc:
        raise DataError(f"unparseable timestamp {raw!r}") from exc
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def ingest_capture_csv(path: str | Path) -> list[CaptureRecord]:
    """Read one capture CSV, enforcing the fixed schema.

    Bad category names and bad timestamps are hard errors carrying the
    offending row number (header is row 1).
    """
    raw = Path(path).read_text(encoding="utf-8")
    return ingest_capture_text(raw, source=str(path))


def ingest_capture_text(raw: str, source: str = "<memory>") -> list[CaptureRecord]:
    first_line, _, _ = raw.partition("\n")
    if first_line.rstrip("\r") != CAPTURE_HEADER:
        raise DataError(
            f"{source}: capture header mismatch; expected {CAPTURE_HEADER!r}, "
            f"got {first_line.rstrip(chr(13))!r}"
        )
    reader = csv.DictReader(io.StringIO(raw))
    records = []
    for lineno, row in enumerate(reader, start=2):
        if row.get(None) or any(row.get(f) is None for f in CAPTURE_FIELDS):
            raise DataError(f"{source}: row {lineno} does not match the capture schema")
        try:
            category = DataCategory(row["category"])
        except ValueError as exc:
            raise DataError(f"{source}: row {lineno}: unknown category {row['category']!r}") from exc
        try:
            ts = parse_capture_timestamp(row["timestamp"])
        except DataError as exc:
            raise DataError(f"{source}: row {lineno}: {exc}") from exc
        records.append(CaptureRecord(
            timestamp=ts,
            api_name=row["api_name"],
            category=category,
            operation=row["operation"],
            return_value=row["return_value"],
            call_stack=row["call_stack"],
        ))
    return records


_NET_TYPE_SYNONYMS = {
    "wifi": "wifi", "wi-fi": "wifi", "wlan": "wifi", "802.11": "wifi",
    "cellular": "cellular", "mobile": "cellular", "cell": "cellular",
    "gsm": "cellular", "cdma": "cellular", "umts": "cellular", "hspa": "cellular",
    "edge": "cellular", "gprs": "cellular", "lte": "cellular", "nr": "cellular",
    "3g": "cellular", "4g": "cellular", "5g": "cellular",
    "ethernet": "ethernet", "lan": "ethernet", "wired": "ethernet",
}

_ID_CATEGORIES = {
    DataCategory.ANDROID_ID, DataCategory.OAID, DataCategory.AAID, DataCategory.VAID,
}


def canonicalize(category: DataCategory, raw: str, location_decimals: int = LOCATION_DECIMALS) -> str:
    """Normalize one raw value into the comparison form for its category."""
    if not raw or not raw.strip():
        raise DataError(f"empty value for {category.value}")
    text = raw.strip()

    if category is DataCategory.IP_ADDRESS:
        try:
            return str(ip_address(text))
        except ValueError as exc:
            raise DataError(f"unparseable IP address {raw!r}") from exc

    if category in _ID_CATEGORIES:
        return text.lower().replace("-", "").replace(":", "")

    if category is DataCategory.SSID:
        if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
            text = text[1:-1]
        if not text:
            raise DataError(f"empty SSID after quote stripping: {raw!r}")
        return text

    if category is DataCategory.MCC_MNC:
        digits = re.sub(r"\D", "", text)
        if not digits:
            raise DataError(f"no digits in MCC/MNC value {raw!r}")
        return digits

    if category is DataCategory.SIM_COUNTRY_CODE:
        code = text.lower()
        if not re.fullmatch(r"[a-z]{2}", code):
            raise DataError(f"SIM country code must be 2 letters, got {raw!r}")
        return code

    if category is DataCategory.NET_TYPE:
        return _NET_TYPE_SYNONYMS.get(text.lower(), "other")

    if category is DataCategory.LOCATION:
        return _canonical_location(text, location_decimals)

    raise DataError(f"no canonicalizer for category {category!r}")


def round_coordinate(value: str | float, decimals: int = LOCATION_DECIMALS) -> str:
    """Fixed-point half-up rounding used for coordinate equality."""
    try:
        quantum = Decimal(1).scaleb(-decimals)
        return str(Decimal(str(value).strip()).quantize(quantum, rounding=ROUND_HALF_UP))
    except ArithmeticError as exc:
        raise DataError(f"non-numeric coordinate {value!r}") from exc


def _canonical_location(text: str, decimals: int) -> str:
    cleaned = text.strip().strip("()[]")
    parts = [p for p in re.split(r"[,;]\s*", cleaned) if p.strip()]
    if len(parts) < 2:
        raise DataError(f"location value needs latitude and longitude: {text!r}")
    lat, lon = parts[0].strip(), parts[1].strip()
    return f"{round_coordinate(lat, decimals)},{round_coordinate(lon, decimals)}"


def build_profile(app_id: str, records: list[CaptureRecord],
                  location_decimals: int = LOCATION_DECIMALS) -> CapturedProfile:
    """Group canonical values by category, deduplicated.

    A category counts as collected from its first record even if every
    return was empty or unusable; such categories are flagged.
    """
    values: dict[DataCategory, set[str]] = {}
    collected: set[DataCategory] = set()
    flagged: set[DataCategory] = set()
    for rec in records:
        collected.add(rec.category)
        if not rec.return_value.strip():
            flagged.add(rec.category)
            continue
        try:
            canon = canonicalize(rec.category, rec.return_value, location_decimals)
        except DataError:
            logger.warning("%s: unusable %s value %r", app_id, rec.category.value, rec.return_value)
            flagged.add(rec.category)
            continue
        values.setdefault(rec.category, set()).add(canon)
    return CapturedProfile(
        app_id=app_id,
        values=values,
        collected=frozenset(collected),
        flagged=frozenset(flagged),
    )
