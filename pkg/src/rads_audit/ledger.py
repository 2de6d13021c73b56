"""Append-only audit ledger for data-subject access requests.

Every human-performed audit step (opening a request, receiving feedback,
measuring settings depth) is one JSON line; replaying the file rebuilds
the full state, so campaigns stay diffable and resumable. Requests move
pending -> terminal exactly once.
"""
from __future__ import annotations

import fcntl
import json
import uuid
from dataclasses import dataclass, replace
from datetime import datetime, timedelta, timezone
from enum import Enum
from pathlib import Path

from .errors import DataError
from .rights import MethodKind


class AccessRight(Enum):
    VIEW_INFORMATION = "ViewInformation"
    OBTAIN_COPY = "ObtainCopy"


class Outcome(Enum):
    FAILURE = "Failure"
    VIEW_INFORMATION = "ViewInformation"
    OBTAIN_DATA_COPY = "ObtainDataCopy"


# Ranking used when an app tried one method several times.
_OUTCOME_RANK = {Outcome.FAILURE: 0, Outcome.VIEW_INFORMATION: 1, Outcome.OBTAIN_DATA_COPY: 2}


class FeedbackBucket(Enum):
    IMMEDIATE_VIEW = "ImmediateView"
    WITHIN_ONE_DAY = "WithinOneDay"
    TWO_TO_THREE_DAYS = "TwoToThreeDays"
    FOUR_TO_SEVEN_DAYS = "FourToSevenDays"
    OVER_SEVEN_DAYS = "OverSevenDays"
    NO_FEEDBACK = "NoFeedback"


DAY = timedelta(hours=24)
UI_DEPTH_RANGE = range(2, 6)


@dataclass(frozen=True)
class AccessRequest:
    request_id: str
    app_id: str
    method: MethodKind
    right_requested: AccessRight
    opened_at: datetime
    feedback_at: datetime | None = None
    outcome: Outcome | None = None
    immediate_view: bool = False
    notes: str = ""

    @property
    def terminal(self) -> bool:
        return self.outcome is not None


@dataclass(frozen=True)
class UiDepthRecord:
    app_id: str
    depth: int | None  # None means the declared setting could not be found

    def __post_init__(self):
        if self.depth is not None and self.depth not in UI_DEPTH_RANGE:
            raise DataError(f"UI depth must be 2..5 or NotFound, got {self.depth}")


def _ts(value: datetime) -> str:
    return value.astimezone(timezone.utc).isoformat()


def _parse_ts(raw: str) -> datetime:
    ts = datetime.fromisoformat(raw.replace("Z", "+00:00"))
    return ts if ts.tzinfo else ts.replace(tzinfo=timezone.utc)


class Ledger:
    """Event-sourced request store; optionally backed by a JSONL file."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self.requests: dict[str, AccessRequest] = {}
        self.ui_depths: dict[str, UiDepthRecord] = {}
        if self.path is not None and self.path.exists():
            self._replay()

    def _replay(self):
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    event = json.loads(line)
                except ValueError as exc:
                    raise DataError(f"{self.path}:{lineno}: bad ledger line: {exc}") from exc
                self._apply(event, f"{self.path}:{lineno}")

    def _apply(self, event: dict, where: str):
        kind = event.get("kind")
        try:
            if kind == "open":
                self._apply_open(event)
            elif kind == "feedback":
                self._apply_feedback(event)
            elif kind == "ui_depth":
                depth = event.get("depth")
                rec = UiDepthRecord(event["app_id"], None if depth == "NotFound" else int(depth))
                self.ui_depths[rec.app_id] = rec
            else:
                raise DataError(f"unknown ledger event kind {kind!r}")
        except (KeyError, ValueError) as exc:
            raise DataError(f"{where}: malformed {kind!r} event: {exc}") from exc

    def _apply_open(self, event: dict):
        req = AccessRequest(
            request_id=event["request_id"],
            app_id=event["app_id"],
            method=MethodKind(event["method"]),
            right_requested=AccessRight(event["right"]),
            opened_at=_parse_ts(event["opened_at"]),
            notes=event.get("notes", ""),
        )
        if req.request_id in self.requests:
            raise DataError(f"duplicate request id {req.request_id}")
        dup = self._find_pending(req.app_id, req.method, req.right_requested)
        if dup is not None:
            raise DataError(
                f"request {dup.request_id} for ({req.app_id}, {req.method.value}, "
                f"{req.right_requested.value}) is still pending"
            )
        self.requests[req.request_id] = req

    def _apply_feedback(self, event: dict):
        request_id = event["request_id"]
        req = self.requests.get(request_id)
        if req is None:
            raise DataError(f"unknown request id {request_id}")
        if req.terminal:
            raise DataError(f"request {request_id} is already terminal")
        feedback_at = _parse_ts(event["feedback_at"])
        if feedback_at < req.opened_at:
            raise DataError(f"feedback for {request_id} predates its opening")
        self.requests[request_id] = replace(
            req,
            feedback_at=feedback_at,
            outcome=Outcome(event["outcome"]),
            immediate_view=bool(event.get("immediate", False)),
            notes=event.get("notes", req.notes),
        )

    def _find_pending(self, app_id: str, method: MethodKind, right: AccessRight):
        for req in self.requests.values():
            if (req.app_id, req.method, req.right_requested) == (app_id, method, right) \
                    and not req.terminal:
                return req
        return None

    def _append(self, event: dict):
        if self.path is None:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as fh:
            fcntl.flock(fh, fcntl.LOCK_EX)
            try:
                fh.write(json.dumps(event, sort_keys=True) + "\n")
                fh.flush()
            finally:
                fcntl.flock(fh, fcntl.LOCK_UN)

    # -- commands ----------------------------------------------------------

    def open_request(self, app_id: str, method: MethodKind, right: AccessRight,
                     opened_at: datetime, request_id: str | None = None,
                     notes: str = "") -> AccessRequest:
        event = {
            "kind": "open",
            "request_id": request_id or uuid.uuid4().hex[:12],
            "app_id": app_id,
            "method": method.value,
            "right": right.value,
            "opened_at": _ts(opened_at),
            "notes": notes,
        }
        self._apply(event, "<new>")
        self._append(event)
        return self.requests[event["request_id"]]

    def record_feedback(self, request_id: str, feedback_at: datetime, outcome: Outcome,
                        immediate: bool = False, notes: str = "") -> AccessRequest:
        event = {
            "kind": "feedback",
            "request_id": request_id,
            "feedback_at": _ts(feedback_at),
            "outcome": outcome.value,
            "immediate": immediate,
            "notes": notes,
        }
        self._apply(event, "<new>")
        self._append(event)
        return self.requests[request_id]

    def record_ui_depth(self, app_id: str, depth: int | None) -> UiDepthRecord:
        event = {"kind": "ui_depth", "app_id": app_id,
                 "depth": "NotFound" if depth is None else depth}
        self._apply(event, "<new>")
        self._append(event)
        return self.ui_depths[app_id]


def bucket_duration(req: AccessRequest, horizon: datetime,
                    immediate_view: bool | None = None,
                    day: timedelta = DAY) -> FeedbackBucket:
    """Assign one request to its feedback-duration bucket at a horizon.

    Boundaries are half-open with upper bounds included: one day is up to
    24h, 2-3 days is (24h, 72h], 4-7 days is (72h, 168h]. ``day`` is what
    "one day" means; pass a different timedelta for calendar-day reading.
    """
    if horizon < req.opened_at:
        raise DataError("horizon predates the request opening")
    if immediate_view is None:
        immediate_view = req.immediate_view
    if immediate_view:
        return FeedbackBucket.IMMEDIATE_VIEW
    if req.feedback_at is None or req.feedback_at > horizon:
        return FeedbackBucket.NO_FEEDBACK
    delta = req.feedback_at - req.opened_at
    if delta <= day:
        return FeedbackBucket.WITHIN_ONE_DAY
    if delta <= 3 * day:
        return FeedbackBucket.TWO_TO_THREE_DAYS
    if delta <= 7 * day:
        return FeedbackBucket.FOUR_TO_SEVEN_DAYS
    return FeedbackBucket.OVER_SEVEN_DAYS


@dataclass(frozen=True)
class MethodAuthenticity:
    failure: int
    view_information: int
    obtain_data_copy: int

    @property
    def total(self) -> int:
        return self.failure + self.view_information + self.obtain_data_copy

    def proportion(self, outcome: Outcome) -> float | None:
        if self.total == 0:
            return None
        count = {
            Outcome.FAILURE: self.failure,
            Outcome.VIEW_INFORMATION: self.view_information,
            Outcome.OBTAIN_DATA_COPY: self.obtain_data_copy,
        }[outcome]
        return count / self.total


def authenticity_summary(requests: list[AccessRequest]) -> dict[MethodKind, MethodAuthenticity]:
    """Per-method outcome counts, one vote per app at its best outcome.

    Best means obtaining a copy beats viewing information beats failure;
    pending requests carry no outcome and are ignored.
    """
    best: dict[tuple[str, MethodKind], Outcome] = {}
    for req in requests:
        if not req.terminal:
            continue
        key = (req.app_id, req.method)
        current = best.get(key)
        if current is None or _OUTCOME_RANK[req.outcome] > _OUTCOME_RANK[current]:
            best[key] = req.outcome

    summary = {}
    for method in MethodKind:
        outcomes = [o for (app, m), o in best.items() if m == method]
        summary[method] = MethodAuthenticity(
            failure=sum(1 for o in outcomes if o is Outcome.FAILURE),
            view_information=sum(1 for o in outcomes if o is Outcome.VIEW_INFORMATION),
            obtain_data_copy=sum(1 for o in outcomes if o is Outcome.OBTAIN_DATA_COPY),
        )
    return summary


def feedback_histogram(requests: list[AccessRequest], horizon: datetime
                       ) -> dict[MethodKind, dict[FeedbackBucket, int]]:
    """Bucket counts per implementation method at the given horizon."""
    out: dict[MethodKind, dict[FeedbackBucket, int]] = {
        m: {b: 0 for b in FeedbackBucket} for m in MethodKind
    }
    for req in requests:
        out[req.method][bucket_duration(req, horizon)] += 1
    return out


def ui_depth_histogram(records: list[UiDepthRecord]) -> dict[str, int]:
    """Counts over depths 2..5 plus NotFound."""
    counts = {str(d): 0 for d in UI_DEPTH_RANGE}
    counts["NotFound"] = 0
    for rec in records:
        counts["NotFound" if rec.depth is None else str(rec.depth)] += 1
    return counts
