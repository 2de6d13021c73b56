"""Rights identification: prompt assembly, answer parsing, and the decision rule.

The two-question prompt asks (1) whether the policy promises a copy of
the user's personal data and (2) whether it lets users access or view
their personal information. Question 1 affirmative wins outright; an
affirmative only on question 2 downgrades to the vague access right.
"""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

from .errors import ExternalServiceError, LlmParseError
from .llm import LlmHandle
from .paragraphs import RadsExcerpt

logger = logging.getLogger(__name__)


class RightsClass(Enum):
    DCAR = "DCAR"
    VDAR = "VDAR"
    NONE = "None"


class MethodKind(Enum):
    EMAIL_CONTACT = "EmailContact"
    ACCOUNT_SETTINGS = "AccountSettings"
    WEBFORM_SUBMISSION = "WebformSubmission"


METHOD_CODES = {
    1: MethodKind.EMAIL_CONTACT,
    2: MethodKind.ACCOUNT_SETTINGS,
    3: MethodKind.WEBFORM_SUBMISSION,
}


@dataclass(frozen=True)
class PromptEnvelope:
    system_text: str
    user_text: str
    excerpt_text: str


@dataclass(frozen=True)
class RightAnswer:
    right: int
    methods: frozenset[int]

    def __post_init__(self):
        if self.right not in (0, 1):
            raise LlmParseError(f"Right must be 0 or 1, got {self.right!r}")
        if self.right == 0 and self.methods:
            object.__setattr__(self, "methods", frozenset())


@dataclass(frozen=True)
class LlmAnswer:
    a1: RightAnswer
    a2: RightAnswer


@dataclass(frozen=True)
class RadsFinding:
    app_id: str
    rights_class: RightsClass
    methods: frozenset[MethodKind] = field(default_factory=frozenset)

    def to_dict(self) -> dict:
        return {
            "app_id": self.app_id,
            "rights_class": self.rights_class.value,
            "methods": sorted(m.value for m in self.methods),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RadsFinding":
        return cls(
            app_id=data["app_id"],
            rights_class=RightsClass(data["rights_class"]),
            methods=frozenset(MethodKind(m) for m in data.get("methods", [])),
        )


def load_prompt_template(path: str | Path | None = None) -> dict:
    if path is None:
        raw = resources.files("rads_audit.data").joinpath("prompt_v1.json").read_text()
    else:
        raw = Path(path).read_text(encoding="utf-8")
    template = json.loads(raw)
    for key in ("system", "user"):
        if key not in template:
            raise LlmParseError(f"prompt template is missing the {key!r} section")
    return template


def build_prompt(excerpt: RadsExcerpt, template: dict | None = None) -> PromptEnvelope:
    """Assemble the deterministic two-question prompt for one excerpt.

    Member texts are joined by blank lines and appended after the
    instructions; an empty excerpt still yields a complete prompt.
    """
    template = template or load_prompt_template()
    excerpt_text = "\n\n".join(m.paragraph.text for m in excerpt.members)
    return PromptEnvelope(
        system_text=template["system"],
        user_text=template["user"],
        excerpt_text=excerpt_text,
    )


_FENCE_RE = re.compile(r"```[a-zA-Z]*")


def parse_llm_response(raw: str) -> LlmAnswer:
    """Extract the structured answer from a model reply.

    Tolerates code fences and surrounding prose by decoding the first
    valid JSON object found in the text.
    """
    obj = _first_json_object(raw)
    if obj is None:
        raise LlmParseError("no JSON object found in model reply", raw=raw)
    answers = {}
    for key in ("a1", "a2"):
        section = _lookup(obj, key)
        if not isinstance(section, dict):
            raise LlmParseError(f"model reply is missing {key!r}", raw=raw)
        answers[key] = _coerce_answer(section, raw)
    return LlmAnswer(a1=answers["a1"], a2=answers["a2"])


def _first_json_object(raw: str):
    text = _FENCE_RE.sub(" ", raw)
    decoder = json.JSONDecoder()
    for pos, ch in enumerate(text):
        if ch != "{":
            continue
        try:
            obj, _ = decoder.raw_decode(text, pos)
        except ValueError:
            continue
        if isinstance(obj, dict):
            return obj
    return None


def _lookup(obj: dict, key: str):
    for k, v in obj.items():
        if isinstance(k, str) and k.lower() == key:
            return v
    return None


def _coerce_answer(section: dict, raw: str) -> RightAnswer:
    right_raw = _lookup(section, "right")
    try:
        right = int(right_raw)
    except (TypeError, ValueError):
        raise LlmParseError(f"unusable Right value {right_raw!r}", raw=raw)
    if right not in (0, 1):
        raise LlmParseError(f"Right must be 0 or 1, got {right_raw!r}", raw=raw)
    methods_raw = _lookup(section, "methods") or []
    if not isinstance(methods_raw, list):
        methods_raw = [methods_raw]
    methods = set()
    for code in methods_raw:
        try:
            code = int(code)
        except (TypeError, ValueError):
            logger.warning("dropping unusable method code %r", code)
            continue
        if code in METHOD_CODES:
            methods.add(code)
        else:
            logger.warning("dropping unknown method code %r", code)
    return RightAnswer(right=right, methods=frozenset(methods))


def serialize_answer(ans: LlmAnswer) -> str:
    """Render an answer back to the canonical JSON reply form."""
    def one(a: RightAnswer) -> dict:
        return {"Right": a.right, "Methods": sorted(a.methods)}

    return json.dumps({"a1": one(ans.a1), "a2": one(ans.a2)}, sort_keys=True)


def decide_rads(app_id: str, ans: LlmAnswer) -> RadsFinding:
    """Apply the declaration rule to a parsed answer.

    Copy right declared -> DCAR, with methods pooled from both answers;
    otherwise access declared -> VDAR with its own methods; otherwise no
    right at all.
    """
    if ans.a1.right == 1:
        codes = ans.a1.methods | ans.a2.methods
        return RadsFinding(app_id, RightsClass.DCAR, frozenset(METHOD_CODES[c] for c in codes))
    if ans.a2.right == 1:
        return RadsFinding(
            app_id, RightsClass.VDAR, frozenset(METHOD_CODES[c] for c in ans.a2.methods)
        )
    return RadsFinding(app_id, RightsClass.NONE, frozenset())


def identify(excerpt: RadsExcerpt, llm: LlmHandle, template: dict | None = None) -> RadsFinding:
    """Prompt, parse, and decide for one app's excerpt."""
    envelope = build_prompt(excerpt, template)
    raw = llm.complete(
        envelope.system_text, envelope.user_text + envelope.excerpt_text, app_id=excerpt.app_id
    )
    answer = parse_llm_response(raw)
    finding = decide_rads(excerpt.app_id, answer)
    if finding.rights_class is not RightsClass.NONE and not finding.methods:
        logger.info("%s: %s declared, methods: none declared",
                    excerpt.app_id, finding.rights_class.value)
    return finding


class IdentityTranslator:
    def translate(self, text: str) -> str:
        return text


class MappingTranslator:
    """Table-driven translator for tests and small curated corpora."""

    def __init__(self, mapping: dict[str, str]):
        self.mapping = dict(mapping)

    def translate(self, text: str) -> str:
        out = text
        for src, dst in self.mapping.items():
            out = out.replace(src, dst)
        return out


def translate_excerpt(excerpt: RadsExcerpt, translator=None) -> RadsExcerpt:
    """Translate member texts, keeping structure, labels, and reasons intact."""
    translator = translator or IdentityTranslator()
    members = []
    for m in excerpt.members:
        try:
            translated = translator.translate(m.paragraph.text)
        except Exception as exc:
            raise ExternalServiceError(
                f"translation failed for paragraph {m.paragraph.index}: {exc}"
            ) from exc
        paragraph = type(m.paragraph)(index=m.paragraph.index, text=translated, span=m.paragraph.span)
        members.append(type(m)(paragraph=paragraph, label=m.label, selection_reason=m.selection_reason))
    return RadsExcerpt(app_id=excerpt.app_id, members=members)
