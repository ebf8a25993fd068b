"""Bibliographic records and the field-aware inverted index with TF-IDF stats.

The corpus file format is UTF-8 JSON lines, one record per line, with keys
id, title, abstracts (language -> text), authors, keywords, keywords_free,
categories, journal, year, language. Unknown keys are ignored.
"""

from __future__ import annotations

import json
import math
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Iterator, Mapping

_WORD_RE = re.compile(r"\w+", re.UNICODE)

MIN_YEAR = 1400
MAX_YEAR = 2100

#: Free-text tokens shorter than this are dropped.
MIN_TOKEN_LENGTH = 2


class IngestError(Exception):
    """The corpus source could not be ingested at all."""


class DuplicateDocIdError(IngestError):
    """Two corpus lines carry the same doc id."""

    def __init__(self, doc_id: str, first_line: int, second_line: int):
        super().__init__(
            f"duplicate doc_id {doc_id!r}: lines {first_line} and {second_line}"
        )
        self.doc_id = doc_id
        self.first_line = first_line
        self.second_line = second_line


class RecordError(ValueError):
    """A single corpus line is not a valid record."""


class UnknownDocIdError(KeyError):
    """An operation referenced a doc_id the index does not hold."""


class FieldKind(Enum):
    """Searchable metadata fields and their matching mode.

    title/abstract are tokenized free text; the remaining kinds match the
    whole normalized value (taxonomy strings in the source library).
    """

    TITLE = "title"
    ABSTRACT = "abstract"
    AUTHOR = "author"
    KEYWORD = "keyword"
    KEYWORD_FREE = "keyword_free"
    CATEGORY = "category"
    JOURNAL = "journal"

    @property
    def is_free_text(self) -> bool:
        return self in (FieldKind.TITLE, FieldKind.ABSTRACT)


def normalize_exact(raw: str) -> str:
    """Whole-value normalization: Unicode NFC, lowercase, collapsed whitespace."""
    return " ".join(unicodedata.normalize("NFC", raw).lower().split())


def tokenize(raw: str) -> list[str]:
    """Free-text normalization: lowercased word tokens, 1-char tokens dropped."""
    text = unicodedata.normalize("NFC", raw).lower()
    return [t for t in _WORD_RE.findall(text) if len(t) >= MIN_TOKEN_LENGTH]


def normalize_term(raw: str, kind: FieldKind) -> str | list[str]:
    """Normalize a raw value for the given field kind.

    Returns a token list for free-text kinds and a single string otherwise.
    Empty input yields an empty result, never an error.
    """
    return tokenize(raw) if kind.is_free_text else normalize_exact(raw)


@dataclass(frozen=True)
class DocumentRecord:
    """One bibliographic record; the unit of browsing.

    List fields are deduplicated by normalized value (first spelling wins).
    Treat instances as immutable, including the abstracts mapping.
    """

    doc_id: str
    title: str = ""
    abstracts: Mapping[str, str] = field(default_factory=dict)
    authors: tuple[str, ...] = ()
    keywords: tuple[str, ...] = ()
    keywords_free: tuple[str, ...] = ()
    categories: tuple[str, ...] = ()
    journal: str | None = None
    year: int | None = None
    language: str | None = None


def _dedupe(values: Iterable[str]) -> tuple[str, ...]:
    seen: set[str] = set()
    out: list[str] = []
    for v in values:
        key = normalize_exact(v)
        if key and key not in seen:
            seen.add(key)
            out.append(v)
    return tuple(out)


def _string_list(obj: Mapping, key: str) -> tuple[str, ...]:
    raw = obj.get(key)
    if raw is None:
        return ()
    if not isinstance(raw, list) or any(not isinstance(v, str) for v in raw):
        raise RecordError(f"{key} must be a list of strings")
    return _dedupe(raw)


def record_from_obj(obj: object) -> DocumentRecord:
    """Validate one parsed corpus line and build a DocumentRecord."""
    if not isinstance(obj, Mapping):
        raise RecordError("record must be a JSON object")
    doc_id = obj.get("id")
    if not isinstance(doc_id, str) or not doc_id.strip():
        raise RecordError("missing or empty id")
    title = obj.get("title") or ""
    if not isinstance(title, str):
        raise RecordError("title must be a string")
    abstracts_raw = obj.get("abstracts") or {}
    if not isinstance(abstracts_raw, Mapping) or any(
        not isinstance(k, str) or not isinstance(v, str) for k, v in abstracts_raw.items()
    ):
        raise RecordError("abstracts must map language codes to text")
    journal = obj.get("journal")
    if journal is not None and not isinstance(journal, str):
        raise RecordError("journal must be a string")
    if journal is not None and not journal.strip():
        journal = None
    year = obj.get("year")
    if year is not None:
        if isinstance(year, bool) or not isinstance(year, int):
            raise RecordError("year must be an integer")
        if not MIN_YEAR <= year <= MAX_YEAR:
            raise RecordError(f"year {year} outside [{MIN_YEAR}, {MAX_YEAR}]")
    language = obj.get("language")
    if language is not None and not isinstance(language, str):
        raise RecordError("language must be a string")
    return DocumentRecord(
        doc_id=doc_id.strip(),
        title=title,
        abstracts=dict(abstracts_raw),
        authors=_string_list(obj, "authors"),
        keywords=_string_list(obj, "keywords"),
        keywords_free=_string_list(obj, "keywords_free"),
        categories=_string_list(obj, "categories"),
        journal=journal,
        year=year,
        language=language if language is None else normalize_exact(language),
    )


def record_to_obj(rec: DocumentRecord) -> dict:
    """Inverse of record_from_obj, suitable for json.dumps."""
    return {
        "id": rec.doc_id,
        "title": rec.title,
        "abstracts": dict(rec.abstracts),
        "authors": list(rec.authors),
        "keywords": list(rec.keywords),
        "keywords_free": list(rec.keywords_free),
        "categories": list(rec.categories),
        "journal": rec.journal,
        "year": rec.year,
        "language": rec.language,
    }


_EXACT_FIELD_VALUES = {
    FieldKind.AUTHOR: lambda doc: doc.authors,
    FieldKind.KEYWORD: lambda doc: doc.keywords,
    FieldKind.KEYWORD_FREE: lambda doc: doc.keywords_free,
    FieldKind.CATEGORY: lambda doc: doc.categories,
    FieldKind.JOURNAL: lambda doc: (doc.journal,) if doc.journal else (),
}


def field_term_counts(doc: DocumentRecord, kind: FieldKind) -> Counter[str]:
    """Normalized term frequencies for one field of one document."""
    if kind is FieldKind.TITLE:
        return Counter(tokenize(doc.title))
    if kind is FieldKind.ABSTRACT:
        counts: Counter[str] = Counter()
        for text in doc.abstracts.values():
            counts.update(tokenize(text))
        return counts
    counts = Counter()
    for value in _EXACT_FIELD_VALUES[kind](doc):
        term = normalize_exact(value)
        if term:
            counts[term] += 1
    return counts


class CorpusIndex:
    """Immutable field-aware inverted index over a corpus.

    Built once and then shared freely across threads; nothing mutates it
    after construction. IDF is 1 + ln(N / (1 + df)), which stays positive
    and needs no zero-division guard.
    """

    def __init__(self, documents: Mapping[str, DocumentRecord]):
        self._documents: dict[str, DocumentRecord] = dict(documents)
        self._postings: dict[tuple[FieldKind, str], dict[str, int]] = {}
        for doc in self._documents.values():
            for kind in FieldKind:
                for term, tf in field_term_counts(doc, kind).items():
                    self._postings.setdefault((kind, term), {})[doc.doc_id] = tf
        n = len(self._documents)
        self._doc_count = n
        self._idf = {
            key: 1.0 + math.log(n / (1.0 + len(docs)))
            for key, docs in self._postings.items()
        }

    @property
    def doc_count(self) -> int:
        return self._doc_count

    @property
    def documents(self) -> Mapping[str, DocumentRecord]:
        return self._documents

    def get(self, doc_id: str) -> DocumentRecord:
        try:
            return self._documents[doc_id]
        except KeyError:
            raise UnknownDocIdError(doc_id) from None

    def df(self, kind: FieldKind, term: str) -> int:
        return len(self._postings.get((kind, term), ()))

    def idf(self, kind: FieldKind, term: str) -> float:
        if self._doc_count == 0:
            return 0.0
        cached = self._idf.get((kind, term))
        if cached is not None:
            return cached
        return 1.0 + math.log(self._doc_count)  # unseen term, df = 0

    def postings(self, kind: FieldKind, term: str) -> tuple[tuple[str, int], ...]:
        """(doc_id, tf) pairs sorted by doc_id."""
        post = self._postings.get((kind, term), {})
        return tuple(sorted(post.items()))

    def postings_map(self, kind: FieldKind, term: str) -> Mapping[str, int]:
        """doc_id -> tf for one term; read-only, kept for scoring hot loops."""
        return self._postings.get((kind, term), {})

    def tf(self, kind: FieldKind, term: str, doc_id: str) -> int:
        if doc_id not in self._documents:
            raise UnknownDocIdError(doc_id)
        return self._postings.get((kind, term), {}).get(doc_id, 0)

    def tf_idf(self, term: str, kind: FieldKind, doc_id: str) -> float:
        """Raw term frequency times IDF; 0 when the term is absent from the doc."""
        tf = self.tf(kind, term, doc_id)
        if tf == 0:
            return 0.0
        return tf * self.idf(kind, term)

    def term_counts(self) -> dict[FieldKind, int]:
        """Distinct indexed terms per field."""
        counts: dict[FieldKind, int] = {kind: 0 for kind in FieldKind}
        for kind, _ in self._postings:
            counts[kind] += 1
        return counts


def build_index(records: Iterable[DocumentRecord]) -> CorpusIndex:
    """Index in-memory records; duplicate doc ids are an error."""
    documents: dict[str, DocumentRecord] = {}
    for rec in records:
        if rec.doc_id in documents:
            raise ValueError(f"duplicate doc_id {rec.doc_id!r}")
        documents[rec.doc_id] = rec
    return CorpusIndex(documents)


@dataclass(frozen=True)
class IngestResult:
    """Index plus per-line diagnostics for the records that were skipped."""

    index: CorpusIndex
    skipped: tuple[tuple[int, str], ...]


def _open_lines(source: str | Path | IO[str] | Iterable[str]) -> tuple[Iterator[str], bool]:
    if isinstance(source, (str, Path)):
        try:
            return iter(open(source, "r", encoding="utf-8")), True
        except OSError as exc:
            raise IngestError(f"cannot read corpus: {exc}") from exc
    return iter(source), False


def ingest_corpus(source: str | Path | IO[str] | Iterable[str]) -> IngestResult:
    """Read a line-delimited corpus into a fresh index.

    Invalid lines are skipped and reported in the result; duplicate doc ids
    abort the ingest with both line numbers.
    """
    lines, close_after = _open_lines(source)
    documents: dict[str, DocumentRecord] = {}
    first_line: dict[str, int] = {}
    skipped: list[tuple[int, str]] = []
    try:
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                skipped.append((lineno, f"invalid JSON: {exc.msg}"))
                continue
            try:
                rec = record_from_obj(obj)
            except RecordError as exc:
                skipped.append((lineno, str(exc)))
                continue
            if rec.doc_id in documents:
                raise DuplicateDocIdError(rec.doc_id, first_line[rec.doc_id], lineno)
            documents[rec.doc_id] = rec
            first_line[rec.doc_id] = lineno
    finally:
        if close_after:
            lines.close()  # type: ignore[attr-defined]
    return IngestResult(CorpusIndex(documents), tuple(skipped))
