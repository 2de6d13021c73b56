"""Data-copy parsing: format detection, flattening, and category matching.

CSV and JSON copies are flattened into description -> values records.
Other formats get a manual-assist template instead of automated parsing,
mirroring how heterogeneous exports are audited by hand.
"""
from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

from .capture import DataCategory
from .errors import DataError


class CopyFormat(Enum):
    CSV = "CSV"
    JSON = "JSON"
    HTML = "HTML"
    TXT = "TXT"
    PDF = "PDF"


MANUAL_ASSIST_FORMATS = {CopyFormat.HTML, CopyFormat.TXT, CopyFormat.PDF}

# How far the CSV parser tolerates rows wider than the header before
# giving up on the file as malformed.
RAGGED_ROW_TOLERANCE = 0.1


@dataclass
class FlatRecord:
    """Ordered description -> values map extracted from one data copy.

    Values accumulate per description because copies routinely repeat
    fields (one row per session, say); a key never maps to an empty list.
    """

    entries: dict[str, list[str]] = field(default_factory=dict)

    def add(self, description: str, value: str):
        description = description.strip()
        if not description:
            return
        self.entries.setdefault(description, []).append(value)

    def pairs(self) -> list[tuple[str, str]]:
        return [(d, v) for d, values in self.entries.items() for v in values]

    def __len__(self) -> int:
        return sum(len(v) for v in self.entries.values())

    def to_dict(self) -> dict:
        return {"entries": self.entries}

    @classmethod
    def from_dict(cls, data: dict) -> "FlatRecord":
        rec = cls()
        for desc, values in data.get("entries", {}).items():
            for v in values:
                rec.add(desc, str(v))
        return rec


@dataclass
class DescriptorDictionary:
    """Per-category regex patterns matched against copy descriptions."""

    patterns: dict[DataCategory, list[re.Pattern]]

    def __post_init__(self):
        missing = [c.value for c in DataCategory if not self.patterns.get(c)]
        if missing:
            raise DataError(f"descriptor dictionary lacks patterns for: {', '.join(missing)}")

    @classmethod
    def load(cls, path: str | Path | None = None) -> "DescriptorDictionary":
        if path is None:
            raw = resources.files("rads_audit.data").joinpath("descriptors.json").read_text()
        else:
            raw = Path(path).read_text(encoding="utf-8")
        data = json.loads(raw)
        categories = data.get("categories", data)
        compiled: dict[DataCategory, list[re.Pattern]] = {}
        for name, patterns in categories.items():
            if name == "version":
                continue
            compiled[DataCategory(name)] = [re.compile(p, re.IGNORECASE) for p in patterns]
        return cls(patterns=compiled)


CategoryExtraction = dict[DataCategory, list[tuple[str, str]]]


def detect_format(data: bytes, declared_extension: str = "") -> CopyFormat:
    """Decide a copy's format from its extension, falling back to content sniffing."""
    ext = declared_extension.lower().lstrip(".")
    by_ext = {"csv": CopyFormat.CSV, "json": CopyFormat.JSON, "html": CopyFormat.HTML,
              "htm": CopyFormat.HTML, "txt": CopyFormat.TXT, "pdf": CopyFormat.PDF}
    if ext in by_ext:
        return by_ext[ext]

    if len(data.strip() if isinstance(data, bytes) else data) < 2:
        raise DataError("copy content too short to identify")
    if data.startswith(b"%PDF-"):
        return CopyFormat.PDF
    text = data.decode("utf-8", errors="replace").strip()
    if text.startswith(("{", "[")):
        try:
            json.loads(text)
            return CopyFormat.JSON
        except ValueError:
            pass
    if text[:1] == "<" or text.lower().startswith("<!doctype"):
        return CopyFormat.HTML
    if _looks_delimited(text):
        return CopyFormat.CSV
    return CopyFormat.TXT


def _looks_delimited(text: str) -> bool:
    lines = [ln for ln in text.splitlines() if ln.strip()][:20]
    if not lines:
        return False
    for delim in (",", ";"):
        counts = [ln.count(delim) for ln in lines]
        if counts[0] > 0 and len(set(counts)) == 1:
            return True
    return False


def _sniff_delimiter(text: str) -> str:
    sample = "\n".join(text.splitlines()[:10])
    return ";" if sample.count(";") > sample.count(",") else ","


def _mostly_unique(cells: list[str]) -> bool:
    non_blank = [c for c in cells if c.strip()]
    return bool(non_blank) and len(set(non_blank)) / len(non_blank) > 0.5


# Digits plus common numeric punctuation: covers plain numbers but also
# IPs, coordinates, and timestamps, all of which signal a data column.
_NUMERICISH_RE = re.compile(r"[\d\s.,:/+%()-]*\d[\d\s.,:/+%()-]*")


def _numeric(cell: str) -> bool:
    return bool(_NUMERICISH_RE.fullmatch(cell.strip()))


def parse_csv_copy(data: bytes | str, orientation: str | None = None,
                   delimiter: str | None = None) -> FlatRecord:
    """Flatten a delimited data copy.

    Orientation ``a`` reads the first row as descriptions with values in the
    columns below; orientation ``b`` reads each row as a description followed
    by its values. Without an explicit orientation a heuristic picks: a
    two-column table with several rows of non-numeric, mostly unique first
    cells is treated as ``b``, everything else as ``a``. One genuinely
    ambiguous shape (a single two-column row) is refused.
    """
    text = data.decode("utf-8", errors="replace") if isinstance(data, bytes) else data
    if not text.strip():
        raise DataError("empty data copy")
    delim = delimiter or _sniff_delimiter(text)
    rows = [row for row in csv.reader(io.StringIO(text), delimiter=delim)
            if any(cell.strip() for cell in row)]
    if not rows:
        raise DataError("empty data copy")

    if orientation is None:
        orientation = _choose_orientation(rows)
    if orientation not in ("a", "b"):
        raise DataError(f"orientation must be 'a' or 'b', got {orientation!r}")

    rec = FlatRecord()
    if orientation == "a":
        header = rows[0]
        ragged = sum(1 for r in rows[1:] if len(r) > len(header))
        if rows[1:] and ragged / len(rows[1:]) > RAGGED_ROW_TOLERANCE:
            raise DataError(f"{ragged} rows are wider than the header; file looks malformed")
        # Column-major so that parsing a transposed table in orientation b
        # accumulates repeated descriptions in the same order.
        for i, desc in enumerate(header):
            for row in rows[1:]:
                if i < len(row) and row[i].strip():
                    rec.add(desc, row[i].strip())
    else:
        for row in rows:
            if not row or not row[0].strip():
                continue
            for cell in row[1:]:
                if cell.strip():
                    rec.add(row[0], cell.strip())
    return rec


def _choose_orientation(rows: list[list[str]]) -> str:
    two_cols = all(len(r) == 2 for r in rows)
    if two_cols and len(rows) > 1:
        first_cells = [r[0] for r in rows]
        if not any(_numeric(c) for c in first_cells if c.strip()):
            if _mostly_unique(first_cells):
                return "b"
            raise DataError(
                "two-column table with heavily repeated non-numeric keys is "
                "ambiguous; pass an explicit orientation"
            )
    return "a"


def render_scalar(value) -> str:
    """Canonical text for a JSON scalar leaf."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def flatten_json(doc, prefix: str = "", out: FlatRecord | None = None) -> FlatRecord:
    """Depth-first flattening: object keys joined with '.', list items as '.N'.

    Null leaves are skipped; every other scalar leaf becomes one
    (description, value) pair.
    """
    rec = out if out is not None else FlatRecord()
    if isinstance(doc, dict):
        for key, value in doc.items():
            child = f"{prefix}.{key}" if prefix else str(key)
            flatten_json(value, child, rec)
    elif isinstance(doc, list):
        for i, value in enumerate(doc):
            child = f"{prefix}.{i}" if prefix else str(i)
            flatten_json(value, child, rec)
    elif doc is None:
        pass
    else:
        rec.entries.setdefault(prefix, []).append(render_scalar(doc))
    return rec


def parse_json_copy(data: bytes | str) -> FlatRecord:
    text = data.decode("utf-8", errors="replace") if isinstance(data, bytes) else data
    try:
        doc = json.loads(text)
    except ValueError as exc:
        raise DataError(f"malformed JSON copy: {exc}") from exc
    return flatten_json(doc)


def match_categories(rec: FlatRecord, dictionary: DescriptorDictionary) -> CategoryExtraction:
    """Assign flattened entries to sensitive-data categories.

    A description belongs to a category when any pattern matches any of
    its dot-separated segments; one description may land in several
    categories.
    """
    extraction: CategoryExtraction = {}
    for description, values in rec.entries.items():
        segments = description.split(".")
        for category, patterns in dictionary.patterns.items():
            if any(p.search(seg) for p in patterns for seg in segments):
                bucket = extraction.setdefault(category, [])
                bucket.extend((description, v) for v in values)
    return extraction


def extraction_to_dict(extraction: CategoryExtraction) -> dict:
    return {
        category.value: [{"description": d, "value": v} for d, v in pairs]
        for category, pairs in sorted(extraction.items(), key=lambda i: i[0].value)
    }


def extraction_from_dict(data: dict) -> CategoryExtraction:
    return {
        DataCategory(name): [(e["description"], str(e["value"])) for e in entries]
        for name, entries in data.items()
    }


def write_manual_template(out_path: str | Path, fmt: CopyFormat, source: str = ""):
    """Emit an empty record template for formats audited by hand."""
    if fmt not in MANUAL_ASSIST_FORMATS:
        raise DataError(f"{fmt.value} copies are parsed automatically; no template needed")
    template = {
        "format": fmt.value,
        "source": source,
        "note": "fill entries with description -> list of values transcribed from the copy",
        "entries": {},
    }
    Path(out_path).write_text(json.dumps(template, indent=2) + "\n", encoding="utf-8")


def load_flat_record(path: str | Path) -> FlatRecord:
    """Read a FlatRecord from a JSON file (manual template or tool output)."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot load record {path}: {exc}") from exc
    return FlatRecord.from_dict(data)
