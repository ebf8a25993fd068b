"""Stratagem ranking: boosted filtering, seed-document similarity, session-context boosts.

All three rankers share one candidate set (every document matching the
expanded filter query) and differ only in how candidates are scored. The
seed document is always excluded from the output. Rankers are pure
functions over an immutable index, safe for concurrent use.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

from .corpus import (
    CorpusIndex,
    DocumentRecord,
    FieldKind,
    UnknownDocIdError,
    field_term_counts,
    normalize_exact,
    tokenize,
)

#: Browsable stratagem kinds and the index field each one filters on.
STRATAGEM_KINDS: Mapping[str, FieldKind] = {
    "keyword": FieldKind.KEYWORD,
    "author": FieldKind.AUTHOR,
    "category": FieldKind.CATEGORY,
    "journal": FieldKind.JOURNAL,
}

#: Seed fields that feed similar-term selection.
SIMILARITY_FIELDS = (
    FieldKind.AUTHOR,
    FieldKind.KEYWORD,
    FieldKind.JOURNAL,
    FieldKind.ABSTRACT,
)


@dataclass(frozen=True)
class RankingConfig:
    """Boost bases and similar-term selection parameters.

    Orderings are invariant under scaling every boost by one positive
    constant; only the ratios matter.
    """

    primary_boost: float = 400.0
    related_boost: float = 250.0
    similarity_boost: float = 1.0
    title_context_boost: float = 1700.0
    keyword_context_boost: float = 1200.0
    category_context_boost: float = 800.0
    min_df: int = 2
    max_terms: int = 25
    min_term_length: int = 2
    # stratagem kind -> FieldKind value of the related field searched with
    # the lower boost; kinds without an entry filter their own field only
    related_fields: Mapping[str, str] = field(
        default_factory=lambda: {"keyword": "keyword_free"}
    )

    _BOOST_FIELDS = (
        "primary_boost",
        "related_boost",
        "similarity_boost",
        "title_context_boost",
        "keyword_context_boost",
        "category_context_boost",
    )

    def scaled(self, factor: float) -> "RankingConfig":
        """Copy with every boost base multiplied by a positive factor."""
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return replace(
            self, **{name: getattr(self, name) * factor for name in self._BOOST_FIELDS}
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "RankingConfig":
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
        known = {f for f in cls.__dataclass_fields__ if not f.startswith("_")}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown ranking config keys: {sorted(unknown)}")
        return cls(**obj)


DEFAULT_CONFIG = RankingConfig()


class Thesaurus:
    """Synonym/translation expansions keyed by normalized term.

    Entries never expand to themselves; lookups are deterministic.
    """

    def __init__(self, entries: Mapping[str, Iterable[str]] | None = None):
        self._map: dict[str, tuple[str, ...]] = {}
        for term, expansions in (entries or {}).items():
            key = normalize_exact(term)
            if not key:
                continue
            seen: set[str] = set()
            kept: list[str] = []
            for exp in expansions:
                norm = normalize_exact(exp)
                if norm and norm != key and norm not in seen:
                    seen.add(norm)
                    kept.append(norm)
            self._map[key] = tuple(kept)

    def expansions(self, term: str) -> tuple[str, ...]:
        return self._map.get(normalize_exact(term), ())

    def __len__(self) -> int:
        return len(self._map)


EMPTY_THESAURUS = Thesaurus()


def load_thesaurus(path: str | Path) -> Thesaurus:
    """Load a tab-separated thesaurus: first column term, rest expansions."""
    entries: dict[str, list[str]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            entries.setdefault(parts[0], []).extend(parts[1:])
    return Thesaurus(entries)


@dataclass(frozen=True)
class StratagemQuery:
    """A browsing move: filter every document sharing one metadata value."""

    kind: str
    value: str
    seed_doc_id: str | None = None

    def __post_init__(self):
        if self.kind not in STRATAGEM_KINDS:
            raise ValueError(f"unknown stratagem kind {self.kind!r}")
        if not self.value.strip():
            raise ValueError("stratagem value must be nonempty")

    @property
    def field(self) -> FieldKind:
        return STRATAGEM_KINDS[self.kind]


@dataclass(frozen=True)
class QueryClause:
    field: FieldKind
    term: str
    boost: float


@dataclass(frozen=True)
class ExpandedQuery:
    clauses: tuple[QueryClause, ...]
    original: StratagemQuery


def expand_filter(
    q: StratagemQuery,
    thesaurus: Thesaurus = EMPTY_THESAURUS,
    config: RankingConfig = DEFAULT_CONFIG,
) -> ExpandedQuery:
    """Expand a stratagem filter with thesaurus terms and the related field.

    The primary field gets the high boost, the related field (when the kind
    has one, e.g. keyword -> keyword_free) the lower one; every clause set
    carries the value plus all its expansions.
    """
    value = normalize_exact(q.value)
    terms = [value, *sorted(thesaurus.expansions(value))]
    clauses = [QueryClause(q.field, t, config.primary_boost) for t in terms]
    related = config.related_fields.get(q.kind)
    if related is not None:
        related_field = FieldKind(related)
        clauses.extend(QueryClause(related_field, t, config.related_boost) for t in terms)
    return ExpandedQuery(tuple(clauses), q)


#: Scores agreeing to this many significant digits count as tied. Differences
#: below that are accumulated float rounding, not ranking signal, and must not
#: decide an ordering (they are not even stable under rescaling all boosts).
SCORE_DIGITS = 10


def score_key(score: float) -> float:
    """Score quantized for ordering comparisons."""
    if score == 0.0:
        return 0.0
    exponent = math.floor(math.log10(abs(score)))
    scale = 10.0 ** (SCORE_DIGITS - 1 - exponent)
    return round(score * scale) / scale


@dataclass(frozen=True)
class RankedEntry:
    doc_id: str
    score: float
    filter_score: float
    similarity_score: float = 0.0
    context_score: float = 0.0


@dataclass(frozen=True)
class RankedList:
    """Scored browse result, ordered by score desc then doc_id asc.

    Ordering compares scores at SCORE_DIGITS significant digits (see
    score_key). The seed document is never present; users click duplicates
    of what they just read, which would bias every downstream click metric.
    """

    entries: tuple[RankedEntry, ...]
    query: StratagemQuery
    arm: str | None = None

    @property
    def size(self) -> int:
        return len(self.entries)

    def doc_ids(self) -> tuple[str, ...]:
        return tuple(e.doc_id for e in self.entries)


def _filter_scores(eq: ExpandedQuery, index: CorpusIndex) -> dict[str, float]:
    """Filter score per candidate; candidacy = matching at least one clause."""
    scores: dict[str, float] = {}
    for clause in eq.clauses:
        post = index.postings_map(clause.field, clause.term)
        if not post:
            continue
        weight = clause.boost * index.idf(clause.field, clause.term)
        if clause.field.is_free_text:
            for doc_id, tf in post.items():
                scores[doc_id] = scores.get(doc_id, 0.0) + weight * tf
        else:
            for doc_id in post:
                scores[doc_id] = scores.get(doc_id, 0.0) + weight
    return scores


def _assemble(
    filter_scores: Mapping[str, float],
    extra: Mapping[str, float],
    seed_doc_id: str | None,
    query: StratagemQuery,
    arm: str | None,
    component: str,
) -> RankedList:
    entries = []
    for doc_id, fs in filter_scores.items():
        if doc_id == seed_doc_id:
            continue
        bonus = extra.get(doc_id, 0.0)
        entries.append(
            RankedEntry(
                doc_id,
                fs + bonus,
                fs,
                similarity_score=bonus if component == "similarity" else 0.0,
                context_score=bonus if component == "context" else 0.0,
            )
        )
    entries.sort(key=lambda e: (-score_key(e.score), e.doc_id))
    return RankedList(tuple(entries), query, arm)


def rank_default(
    eq: ExpandedQuery, index: CorpusIndex, *, arm: str | None = None
) -> RankedList:
    """Baseline: boolean filter ordered by boosted per-field TF-IDF alone."""
    return _assemble(
        _filter_scores(eq, index), {}, eq.original.seed_doc_id, eq.original, arm, "none"
    )


@dataclass(frozen=True)
class SimilarityTerm:
    field: FieldKind
    term: str
    weight: float  # idf at selection time


def select_similarity_terms(
    seed: DocumentRecord, index: CorpusIndex, config: RankingConfig = DEFAULT_CONFIG
) -> list[SimilarityTerm]:
    """Pick the seed terms that best characterize it, like a more-like-this query.

    Candidates come only from the seed's authors, keywords, journal, and
    abstract; rare (df < min_df) and 1-char terms are dropped, the rest are
    ranked by tf*idf in the seed and the top max_terms kept with weight idf.
    """
    if seed.doc_id not in index.documents:
        raise UnknownDocIdError(seed.doc_id)
    scored: list[tuple[float, str, str, float]] = []
    for kind in SIMILARITY_FIELDS:
        for term, tf in field_term_counts(seed, kind).items():
            if len(term) < config.min_term_length:
                continue
            if index.df(kind, term) < config.min_df:
                continue
            idf = index.idf(kind, term)
            scored.append((tf * idf, kind.value, term, idf))
    scored.sort(key=lambda c: (-c[0], c[1], c[2]))
    return [
        SimilarityTerm(FieldKind(kind_value), term, idf)
        for _, kind_value, term, idf in scored[: config.max_terms]
    ]


def rank_similar(
    q: StratagemQuery,
    seed: DocumentRecord,
    index: CorpusIndex,
    thesaurus: Thesaurus = EMPTY_THESAURUS,
    config: RankingConfig = DEFAULT_CONFIG,
    *,
    arm: str | None = None,
) -> RankedList:
    """Filter like the baseline, then add a similarity-to-seed score.

    The candidate set is exactly the baseline's; only the ordering changes.
    """
    if seed.doc_id not in index.documents:
        raise UnknownDocIdError(seed.doc_id)
    eq = expand_filter(q, thesaurus, config)
    filter_scores = _filter_scores(eq, index)
    sim_scores: dict[str, float] = {}
    for term in select_similarity_terms(seed, index, config):
        post = index.postings_map(term.field, term.term)
        if not post:
            continue
        weight = config.similarity_boost * term.weight * index.idf(term.field, term.term)
        if term.field.is_free_text:
            for doc_id, tf in post.items():
                if doc_id in filter_scores:
                    sim_scores[doc_id] = sim_scores.get(doc_id, 0.0) + weight * tf
        else:
            for doc_id in post:
                if doc_id in filter_scores:
                    sim_scores[doc_id] = sim_scores.get(doc_id, 0.0) + weight
    return _assemble(filter_scores, sim_scores, q.seed_doc_id, q, arm, "similarity")


@dataclass(frozen=True)
class ContextBoosts:
    """Boost clauses derived from a session context.

    Title clauses repeat each session query at the highest base; keyword and
    category clauses scale their base by the context rank in (0, 1].
    """

    title_clauses: tuple[tuple[str, float], ...]
    keyword_clauses: tuple[tuple[str, float], ...]
    category_clauses: tuple[tuple[str, float], ...]


def build_context_boosts(ctx, config: RankingConfig = DEFAULT_CONFIG) -> ContextBoosts:
    """One title clause per session query, one clause per context keyword/category."""
    return ContextBoosts(
        title_clauses=tuple((text, config.title_context_boost) for text in ctx.queries),
        keyword_clauses=tuple(
            (term, config.keyword_context_boost * rank) for term, rank in ctx.keywords
        ),
        category_clauses=tuple(
            (term, config.category_context_boost * rank) for term, rank in ctx.categories
        ),
    )


def rank_contextual(
    q: StratagemQuery,
    ctx,
    index: CorpusIndex,
    thesaurus: Thesaurus = EMPTY_THESAURUS,
    config: RankingConfig = DEFAULT_CONFIG,
    *,
    arm: str | None = None,
) -> RankedList:
    """Filter like the baseline, then boost candidates that match the session.

    With an empty context this degenerates to the baseline ordering exactly.
    """
    eq = expand_filter(q, thesaurus, config)
    filter_scores = _filter_scores(eq, index)
    boosts = build_context_boosts(ctx, config)
    ctx_scores: dict[str, float] = {}
    for text, boost in boosts.title_clauses:
        for token in tokenize(text):
            post = index.postings_map(FieldKind.TITLE, token)
            if not post:
                continue
            weight = boost * index.idf(FieldKind.TITLE, token)
            for doc_id, tf in post.items():
                if doc_id in filter_scores:
                    ctx_scores[doc_id] = ctx_scores.get(doc_id, 0.0) + weight * tf
    for kind, clauses in (
        (FieldKind.KEYWORD, boosts.keyword_clauses),
        (FieldKind.CATEGORY, boosts.category_clauses),
    ):
        for term, boost in clauses:
            post = index.postings_map(kind, term)
            if not post:
                continue
            weight = boost * index.idf(kind, term)
            for doc_id in post:
                if doc_id in filter_scores:
                    ctx_scores[doc_id] = ctx_scores.get(doc_id, 0.0) + weight
    return _assemble(filter_scores, ctx_scores, q.seed_doc_id, q, arm, "context")
