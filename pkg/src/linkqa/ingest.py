"""Corpus ingestion: stream JSONL records, normalize titles, extract links.

Input corpus format is line-delimited JSON with fields:
``id`` (optional), ``title`` (required), ``text`` (required),
``links`` (optional list of pre-extracted target titles).

Link markup in ``text`` follows the bracketed wiki convention:
``[[Target]]``, ``[[Target|anchor]]``, ``[[Target#Fragment]]``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

DEFAULT_NAMESPACE_BLACKLIST = (
    "File:",
    "Image:",
    "Category:",
    "Wikipedia:",
    "Template:",
    "Help:",
    "Portal:",
    "Special:",
)

DEFAULT_MAX_DOC_BYTES = 2 * 1024 * 1024

# [[Target]] or [[Target|anchor text]]; non-greedy so adjacent links split.
_LINK_RE = re.compile(r"\[\[([^\[\]|]+)(?:\|[^\[\]]*)?\]\]")
_WS_RE = re.compile(r"\s+")
# Interlanguage links look like "en:Title", "fr:Titre", ...
_INTERLANG_RE = re.compile(r"^[A-Za-z]{2}:")


class InvalidTitleError(ValueError):
    """Raised when a title normalizes to the empty string."""


@dataclass(frozen=True)
class Document:
    """One corpus entry with a dense id, canonical title and link targets."""

    doc_id: int
    title: str
    text: str
    links: tuple[str, ...]


@dataclass
class IngestReport:
    documents_read: int = 0
    documents_emitted: int = 0
    links_extracted: int = 0
    links_dropped: int = 0
    bytes_read: int = 0
    documents_truncated: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def normalize_title(raw: str) -> str:
    """Canonicalize a title: underscores to spaces, collapse whitespace,
    strip, uppercase the first character. Idempotent.

    Raises InvalidTitleError if nothing is left after normalization.
    """
    cleaned = _WS_RE.sub(" ", raw.replace("_", " ")).strip()
    if not cleaned:
        raise InvalidTitleError(f"title normalizes to empty: {raw!r}")
    return cleaned[0].upper() + cleaned[1:]


def _is_blacklisted(target: str, blacklist: Sequence[str]) -> bool:
    lowered = target.lstrip().lower()
    if any(lowered.startswith(prefix.lower()) for prefix in blacklist):
        return True
    return bool(_INTERLANG_RE.match(target.lstrip()))


def extract_links_detailed(
    wikitext: str, blacklist: Sequence[str] | None = None
) -> tuple[list[str], int]:
    """Parse bracketed link targets, returning (kept targets, dropped count).

    Targets are kept in first-occurrence order with duplicates removed.
    Anchor text after "|" and fragments after "#" are discarded. Targets
    matching the namespace blacklist or an interlanguage prefix are dropped,
    as are targets that normalize to the empty string. Unclosed markup is
    ignored (the regex simply never matches it); parsing never fails.
    """
    if blacklist is None:
        blacklist = DEFAULT_NAMESPACE_BLACKLIST
    kept: list[str] = []
    seen: set[str] = set()
    dropped = 0
    for match in _LINK_RE.finditer(wikitext):
        target = match.group(1)
        if _is_blacklisted(target, blacklist):
            dropped += 1
            continue
        target = target.split("#", 1)[0]
        try:
            canonical = normalize_title(target)
        except InvalidTitleError:
            dropped += 1
            continue
        if canonical in seen:
            continue
        seen.add(canonical)
        kept.append(canonical)
    return kept, dropped


def extract_links(wikitext: str, blacklist: Sequence[str] | None = None) -> list[str]:
    """Canonical link targets of a body text, deduplicated, in order."""
    return extract_links_detailed(wikitext, blacklist)[0]


def _truncate_utf8(text: str, max_bytes: int) -> str:
    """Longest prefix of ``text`` whose UTF-8 encoding fits in ``max_bytes``."""
    encoded = text.encode("utf-8")
    if len(encoded) <= max_bytes:
        return text
    return encoded[:max_bytes].decode("utf-8", errors="ignore")


def _normalize_link_list(
    raw_links: Iterable[str], title: str, report: IngestReport
) -> tuple[str, ...]:
    """Normalize, drop empties and self-references, dedupe in order."""
    links: list[str] = []
    seen: set[str] = set()
    for raw in raw_links:
        try:
            canonical = normalize_title(str(raw))
        except InvalidTitleError:
            report.links_dropped += 1
            continue
        if canonical == title:
            report.links_dropped += 1
            continue
        if canonical in seen:
            continue
        seen.add(canonical)
        links.append(canonical)
    return tuple(links)


def ingest_corpus(
    source: Iterable[str],
    sink: Callable[[Document], None],
    *,
    blacklist: Sequence[str] | None = None,
    max_doc_bytes: int = DEFAULT_MAX_DOC_BYTES,
) -> IngestReport:
    """Stream corpus records into Documents with dense ids.

    ``source`` yields JSONL lines. Records missing ``title`` or ``text``
    (or that are not JSON objects) are skipped and counted. A record with
    an explicit ``links`` field uses it after normalization; otherwise
    links are extracted from the text. Oversized texts are truncated at
    ``max_doc_bytes`` (on a codepoint boundary) and counted.
    """
    report = IngestReport()
    next_id = 0
    for line in source:
        report.bytes_read += len(line.encode("utf-8"))
        if not line.strip():
            continue
        report.documents_read += 1
        try:
            record = json.loads(line)
        except json.JSONDecodeError:
            continue
        if not isinstance(record, dict):
            continue
        raw_title = record.get("title")
        text = record.get("text")
        if not isinstance(raw_title, str) or not isinstance(text, str):
            continue
        try:
            title = normalize_title(raw_title)
        except InvalidTitleError:
            continue
        truncated = _truncate_utf8(text, max_doc_bytes)
        if truncated is not text:
            report.documents_truncated += 1
            text = truncated
        raw_links = record.get("links")
        if isinstance(raw_links, list):
            links = _normalize_link_list(raw_links, title, report)
        else:
            extracted, dropped = extract_links_detailed(text, blacklist)
            report.links_dropped += dropped
            links = _normalize_link_list(extracted, title, report)
        report.links_extracted += len(links)
        sink(Document(doc_id=next_id, title=title, text=text, links=links))
        report.documents_emitted += 1
        next_id += 1
    return report


def write_documents(documents: Iterable[Document], path: str) -> None:
    """Serialize Documents as JSONL, one object per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc in documents:
            fh.write(
                json.dumps(
                    {
                        "doc_id": doc.doc_id,
                        "title": doc.title,
                        "text": doc.text,
                        "links": list(doc.links),
                    },
                    ensure_ascii=False,
                )
            )
            fh.write("\n")


def read_documents(path: str) -> Iterator[Document]:
    """Stream Documents back from a JSONL file written by write_documents."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            yield Document(
                doc_id=int(record["doc_id"]),
                title=record["title"],
                text=record["text"],
                links=tuple(record["links"]),
            )


@dataclass
class DocumentStore:
    """In-memory id -> Document lookup for the synthesis stage."""

    by_id: dict[int, Document] = field(default_factory=dict)

    @classmethod
    def load(cls, path: str) -> "DocumentStore":
        store = cls()
        for doc in read_documents(path):
            store.by_id[doc.doc_id] = doc
        return store

    def add(self, doc: Document) -> None:
        self.by_id[doc.doc_id] = doc

    def get(self, doc_id: int) -> Document:
        return self.by_id[doc_id]

    def __len__(self) -> int:
        return len(self.by_id)
