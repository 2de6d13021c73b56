"""Paragraph classification and selection of right-of-access excerpts.

Every paragraph gets exactly one of the 12 policy-content categories.
Paragraphs about user access/edit/deletion, plus contact-information
paragraphs directly adjacent to them, form the excerpt handed to the
rights identifier.
"""
from __future__ import annotations

import json
import shlex
import subprocess
import threading
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

import requests

from .errors import ClassifierError, DataError
from .policy_ingest import Paragraph


class CategoryLabel(Enum):
    """The 12 privacy-policy paragraph categories, in canonical order.

    Definition order doubles as the tie-break order for the keyword
    baseline, so do not reorder members.
    """

    FIRST_PARTY_COLLECTION_USE = "FirstPartyCollectionUse"
    THIRD_PARTY_SHARING_COLLECTION = "ThirdPartySharingCollection"
    USER_ACCESS_EDIT_DELETION = "UserAccessEditDeletion"
    DATA_RETENTION = "DataRetention"
    DATA_SECURITY = "DataSecurity"
    INTERNATIONAL_SPECIFIC_AUDIENCES = "InternationalSpecificAudiences"
    DO_NOT_TRACK = "DoNotTrack"
    POLICY_CHANGE = "PolicyChange"
    USER_CHOICE_CONTROL = "UserChoiceControl"
    INTRODUCTORY_GENERIC = "IntroductoryGeneric"
    PRACTICE_NOT_COVERED = "PracticeNotCovered"
    PRIVACY_CONTACT_INFORMATION = "PrivacyContactInformation"


class SelectionReason(Enum):
    UAED = "UAED"
    ADJACENT_PCI = "AdjacentPCI"


@dataclass(frozen=True)
class ClassifiedParagraph:
    paragraph: Paragraph
    label: CategoryLabel
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise DataError(f"classifier score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class ExcerptMember:
    paragraph: Paragraph
    label: CategoryLabel
    selection_reason: SelectionReason


@dataclass
class RadsExcerpt:
    """The access-rights-relevant slice of one app's policy, in document order."""

    app_id: str
    members: list[ExcerptMember]


Lexicon = dict[CategoryLabel, list[tuple[str, float]]]


def load_lexicon(path: str | Path | None = None) -> Lexicon:
    """Load a phrase lexicon; default is the curated one shipped with the package."""
    if path is None:
        data = json.loads(resources.files("rads_audit.data").joinpath("lexicon.json").read_text())
    else:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    categories = data.get("categories", data)
    lexicon: Lexicon = {}
    for name, entries in categories.items():
        if name == "version":
            continue
        label = CategoryLabel(name)
        lexicon[label] = [(e["phrase"].lower(), float(e.get("weight", 1.0))) for e in entries]
    if not any(lexicon.values()):
        raise DataError("lexicon has no phrases")
    return lexicon


def keyword_baseline_classify(p: Paragraph, lexicon: Lexicon) -> CategoryLabel:
    """Pick the category with the highest weighted phrase-hit count.

    Ties go to the category listed first in the canonical order; a
    paragraph hitting no phrase at all is filed as introductory/generic.
    """
    label, _ = _keyword_scores(p.text, lexicon)
    return label


def _keyword_scores(text: str, lexicon: Lexicon) -> tuple[CategoryLabel, float]:
    lowered = text.lower()
    best_label = CategoryLabel.INTRODUCTORY_GENERIC
    best_score = 0.0
    total = 0.0
    for label in CategoryLabel:  # canonical order makes ties deterministic
        score = 0.0
        for phrase, weight in lexicon.get(label, []):
            score += weight * lowered.count(phrase)
        total += score
        if score > best_score:
            best_label = label
            best_score = score
    if best_score == 0.0:
        return CategoryLabel.INTRODUCTORY_GENERIC, 0.0
    return best_label, best_score / total


class KeywordClassifier:
    """Deterministic builtin backend; pure and safe to share across threads."""

    def __init__(self, lexicon: Lexicon | None = None):
        self.lexicon = lexicon or load_lexicon()

    def classify(self, text: str) -> tuple[CategoryLabel, float]:
        return _keyword_scores(text, self.lexicon)


class ExecClassifier:
    """Line-protocol backend: one paragraph line in, one label line out.

    The child process is started lazily and kept alive; calls are
    serialized with a lock because the protocol is strictly one-in/one-out.
    """

    def __init__(self, command: str):
        self.command = command
        self._proc: subprocess.Popen | None = None
        self._lock = threading.Lock()

    def _ensure(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    shlex.split(self.command),
                    stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True, bufsize=1,
                )
            except OSError as exc:
                raise ClassifierError(f"cannot start classifier process: {exc}") from exc
        return self._proc

    def classify(self, text: str) -> tuple[CategoryLabel, float]:
        with self._lock:
            proc = self._ensure()
            line = " ".join(text.split())
            try:
                proc.stdin.write(line + "\n")
                proc.stdin.flush()
                reply = proc.stdout.readline()
            except (BrokenPipeError, OSError) as exc:
                raise ClassifierError(f"classifier process failed: {exc}") from exc
        if not reply:
            raise ClassifierError("classifier process closed its output")
        parts = reply.strip().split("\t")
        try:
            label = CategoryLabel(parts[0])
        except ValueError as exc:
            raise ClassifierError(f"classifier returned unknown label {parts[0]!r}") from exc
        score = float(parts[1]) if len(parts) > 1 else 1.0
        return label, max(0.0, min(1.0, score))

    def close(self):
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=5)


class HttpClassifier:
    """Remote backend: POST {"text": ...}, expect {"label": ..., "score": ...}."""

    def __init__(self, url: str, timeout: float = 30.0):
        self.url = url
        self.timeout = timeout
        self._session = requests.Session()

    def classify(self, text: str) -> tuple[CategoryLabel, float]:
        try:
            resp = self._session.post(self.url, json={"text": text}, timeout=self.timeout)
            resp.raise_for_status()
            payload = resp.json()
        except (requests.RequestException, ValueError) as exc:
            raise ClassifierError(f"classifier endpoint failed: {exc}") from exc
        try:
            label = CategoryLabel(payload["label"])
        except (KeyError, ValueError) as exc:
            raise ClassifierError(f"classifier endpoint returned bad payload: {payload!r}") from exc
        return label, max(0.0, min(1.0, float(payload.get("score", 1.0))))


def make_classifier(spec: str, lexicon_path: str | None = None):
    """Build a classifier handle from a CLI-style spec string.

    Accepted forms: ``builtin``, ``exec:<command>``, ``http:<url>``.
    """
    if spec == "builtin":
        return KeywordClassifier(load_lexicon(lexicon_path) if lexicon_path else None)
    if spec.startswith("exec:"):
        return ExecClassifier(spec[len("exec:"):])
    if spec.startswith("http:"):
        url = spec[len("http:"):]
        if not url.startswith(("http://", "https://")):
            url = "http:" + url
        return HttpClassifier(url)
    raise DataError(f"unknown classifier spec {spec!r}")


def classify_paragraph(p: Paragraph, classifier) -> ClassifiedParagraph:
    """Run one paragraph through a classifier handle."""
    try:
        label, score = classifier.classify(p.text)
    except ClassifierError as exc:
        exc.paragraph_index = p.index
        raise
    return ClassifiedParagraph(paragraph=p, label=label, score=score)


def extract_rads_paragraphs(classified: list[ClassifiedParagraph], app_id: str = "") -> RadsExcerpt:
    """Select access-rights paragraphs plus directly adjacent contact paragraphs.

    Adjacency means an index distance of exactly one in the source
    document, on either side. Each paragraph appears at most once.
    """
    by_index = {cp.paragraph.index: cp for cp in classified}
    uaed_indices = {
        i for i, cp in by_index.items() if cp.label is CategoryLabel.USER_ACCESS_EDIT_DELETION
    }
    members: list[ExcerptMember] = []
    for cp in sorted(classified, key=lambda c: c.paragraph.index):
        i = cp.paragraph.index
        if i in uaed_indices:
            members.append(ExcerptMember(cp.paragraph, cp.label, SelectionReason.UAED))
        elif cp.label is CategoryLabel.PRIVACY_CONTACT_INFORMATION and (
            i - 1 in uaed_indices or i + 1 in uaed_indices
        ):
            members.append(ExcerptMember(cp.paragraph, cp.label, SelectionReason.ADJACENT_PCI))
    return RadsExcerpt(app_id=app_id, members=members)


def excerpt_to_dict(excerpt: RadsExcerpt) -> dict:
    return {
        "app_id": excerpt.app_id,
        "members": [
            {
                "index": m.paragraph.index,
                "text": m.paragraph.text,
                "span": list(m.paragraph.span),
                "label": m.label.value,
                "selection_reason": m.selection_reason.value,
            }
            for m in excerpt.members
        ],
    }


def excerpt_from_dict(data: dict) -> RadsExcerpt:
    members = [
        ExcerptMember(
            paragraph=Paragraph(index=m["index"], text=m["text"], span=tuple(m.get("span", (0, 0)))),
            label=CategoryLabel(m["label"]),
            selection_reason=SelectionReason(m["selection_reason"]),
        )
        for m in data.get("members", [])
    ]
    return RadsExcerpt(app_id=data.get("app_id", ""), members=members)
