"""Privacy-policy acquisition and paragraph segmentation.

Policies arrive as local HTML files or URLs. Markup is reduced to plain
text with one line per block-level element; the resulting paragraph spans
are the unit every downstream classifier works on.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from html.parser import HTMLParser
from pathlib import Path

import requests

from .errors import DataError

logger = logging.getLogger(__name__)

MAX_REDIRECTS = 5

# Elements that terminate a paragraph. <br> is handled separately: a pair of
# consecutive <br> acts as a boundary, a single one becomes a space.
_BLOCK_TAGS = {
    "p", "div", "li", "ul", "ol", "h1", "h2", "h3", "h4", "h5", "h6",
    "section", "article", "header", "footer", "table", "tr", "blockquote",
}
_SKIP_TAGS = {"script", "style", "head", "title", "noscript", "template"}


@dataclass
class RawPolicy:
    """Unprocessed policy bytes plus provenance."""

    app_id: str
    source: str
    html: bytes
    fetched_at: datetime

    def __post_init__(self):
        if not self.html:
            raise DataError(f"policy for {self.app_id!r} has no content")


@dataclass
class PolicyDocument:
    app_id: str
    language_tag: str
    text: str
    paragraph_spans: list[tuple[int, int]]
    lossy_decode: bool = False


@dataclass(frozen=True)
class Paragraph:
    """One paragraph of a policy, indexed by its position in the document."""

    index: int
    text: str
    span: tuple[int, int]


def fetch_policy(source: str, app_id: str = "", session: requests.Session | None = None,
                 timeout: float = 30.0) -> RawPolicy:
    """Read policy bytes from a URL or local path.

    HTTP fetches follow at most MAX_REDIRECTS redirects. A non-HTML content
    type is tolerated with a warning; the body is still processed as text.
    """
    app_id = app_id or _app_id_from_source(source)
    fetched_at = datetime.now(timezone.utc)
    if source.startswith(("http://", "https://")):
        sess = session or requests.Session()
        sess.max_redirects = MAX_REDIRECTS
        try:
            resp = sess.get(source, timeout=timeout, allow_redirects=True)
            resp.raise_for_status()
        except requests.RequestException as exc:
            raise DataError(f"source unreachable: {source} ({exc})") from exc
        ctype = resp.headers.get("Content-Type", "")
        if ctype and "html" not in ctype and "text" not in ctype:
            logger.warning("%s: content type %r is not HTML; proceeding as text", source, ctype)
        return RawPolicy(app_id=app_id, source=resp.url, html=resp.content, fetched_at=fetched_at)

    path = Path(source)
    if not path.is_file():
        raise DataError(f"source unreachable: {source}")
    return RawPolicy(app_id=app_id, source=str(path), html=path.read_bytes(), fetched_at=fetched_at)


def fetch_many(sources: dict[str, str], max_concurrent: int = 4,
               timeout: float = 30.0) -> dict[str, RawPolicy | DataError]:
    """Fetch several policies, never more than ``max_concurrent`` in flight.

    ``sources`` maps app_id to URL/path. Failures are returned per app
    instead of aborting the batch.
    """
    results: dict[str, RawPolicy | DataError] = {}

    def one(item):
        app_id, source = item
        try:
            return app_id, fetch_policy(source, app_id=app_id, timeout=timeout)
        except DataError as exc:
            return app_id, exc

    with ThreadPoolExecutor(max_workers=max(1, max_concurrent)) as pool:
        for app_id, outcome in pool.map(one, sources.items()):
            results[app_id] = outcome
    return results


class _TextExtractor(HTMLParser):
    """Collects text chunks and records block boundaries."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.paragraphs: list[list[str]] = [[]]
        self._skip_depth = 0
        self._br_pending = False
        self.lang = ""

    def _break(self):
        self._br_pending = False
        if self.paragraphs[-1]:
            self.paragraphs.append([])

    def handle_starttag(self, tag, attrs):
        if tag in _SKIP_TAGS:
            self._skip_depth += 1
            return
        if tag == "html" and not self.lang:
            self.lang = dict(attrs).get("lang") or ""
        if tag in _BLOCK_TAGS:
            self._break()
        elif tag == "br":
            if self._br_pending:
                self._break()
            else:
                self._br_pending = True

    def handle_endtag(self, tag):
        if tag in _SKIP_TAGS:
            self._skip_depth = max(0, self._skip_depth - 1)
            return
        if tag in _BLOCK_TAGS:
            self._break()

    def handle_startendtag(self, tag, attrs):
        self.handle_starttag(tag, attrs)

    def handle_data(self, data):
        if self._skip_depth:
            return
        if self._br_pending:
            self._br_pending = False
            if data.strip():
                self.paragraphs[-1].append(" ")
        if data:
            self.paragraphs[-1].append(data)


def _collapse(chunks: list[str]) -> str:
    return " ".join("".join(chunks).split())


def html_to_plaintext(raw: RawPolicy) -> PolicyDocument:
    """Convert policy markup to plain text with paragraph spans.

    Script/style content is dropped, block elements become paragraph
    boundaries, inline markup disappears, and entities are decoded.
    Input that is already plain text passes through: a text with no tags
    splits on blank lines instead.
    """
    lossy = False
    try:
        html = raw.html.decode("utf-8")
    except UnicodeDecodeError:
        html = raw.html.decode("utf-8", errors="replace")
        lossy = True
        logger.warning("%s: policy bytes are not valid UTF-8, decoded lossily", raw.app_id)

    parser = _TextExtractor()
    parser.feed(html)
    parser.close()

    texts = [_collapse(chunks) for chunks in parser.paragraphs]
    texts = [t for t in texts if t]
    if len(texts) <= 1 and "<" not in html:
        # Pre-rendered text: two or more consecutive newlines separate paragraphs.
        texts = [_collapse([block]) for block in html.replace("\r\n", "\n").split("\n\n")]
        texts = [t for t in texts if t]
    if not texts:
        raise DataError(f"no textual content in policy for {raw.app_id!r}")

    spans: list[tuple[int, int]] = []
    pos = 0
    for t in texts:
        spans.append((pos, pos + len(t)))
        pos += len(t) + 1  # paragraphs joined by a single newline
    return PolicyDocument(
        app_id=raw.app_id,
        language_tag=parser.lang or "und",
        text="\n".join(texts),
        paragraph_spans=spans,
        lossy_decode=lossy,
    )


def segment_paragraphs(doc: PolicyDocument, min_length: int = 3) -> list[Paragraph]:
    """Materialize Paragraph objects from a document's spans.

    Spans whose trimmed text is shorter than ``min_length`` are dropped;
    survivors are renumbered consecutively from zero.
    """
    out: list[Paragraph] = []
    for start, end in doc.paragraph_spans:
        text = doc.text[start:end].strip()
        if len(text) < min_length:
            continue
        out.append(Paragraph(index=len(out), text=text, span=(start, end)))
    return out


def _app_id_from_source(source: str) -> str:
    tail = source.rstrip("/").rsplit("/", 1)[-1]
    return tail.split("?")[0] or "unknown-app"
