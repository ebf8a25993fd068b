"""The living-lab engine: search, document view, arm-dispatched browse, event intake.

One engine instance backs both the HTTP service and the simulator, so every
client exercises the same code path and produces the same transaction log.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus import CorpusIndex, DocumentRecord, FieldKind, tokenize
from .ranking import (
    DEFAULT_CONFIG,
    EMPTY_THESAURUS,
    RankedList,
    RankingConfig,
    StratagemQuery,
    Thesaurus,
    expand_filter,
    rank_contextual,
    rank_default,
    rank_similar,
    score_key,
)
from .session import (
    EventAck,
    EventStore,
    ExperimentArm,
    SessionEvent,
    assign_arm,
    build_session_context,
)

DEFAULT_PAGE_SIZE = 20


@dataclass(frozen=True)
class PageResult:
    """One delivered result page; doc ids in rank order, total before paging."""

    doc_ids: tuple[str, ...]
    total: int
    page: int


def _now_ms() -> int:
    return time.time_ns() // 1_000_000


class LivingLab:
    """Arm-dispatched browsing over one immutable index plus an event store.

    The index, thesaurus, and ranking config never change after construction;
    per-session state lives in the event store, which serializes writes.
    """

    def __init__(
        self,
        index: CorpusIndex,
        thesaurus: Thesaurus = EMPTY_THESAURUS,
        config: RankingConfig = DEFAULT_CONFIG,
        store: EventStore | None = None,
        *,
        arm_seed: int = 0,
        forced_arm: ExperimentArm | None = None,
        page_size: int = DEFAULT_PAGE_SIZE,
    ):
        self.index = index
        self.thesaurus = thesaurus
        self.config = config
        self.store = store if store is not None else EventStore()
        self.arm_seed = arm_seed
        self.forced_arm = forced_arm
        self.page_size = page_size

    def ensure_session(
        self, session_id: str, arm: ExperimentArm | None = None
    ) -> ExperimentArm:
        """Return the session's arm, assigning one if the session is new."""
        existing = self.store.arm_of(session_id)
        if existing is not None:
            return existing
        chosen = arm or self.forced_arm or assign_arm(session_id, self.arm_seed)
        return self.store.ensure_session(session_id, chosen)

    def events(self, session_id: str) -> tuple[SessionEvent, ...]:
        return self.store.events(session_id)

    def _record(
        self,
        session_id: str,
        arm: ExperimentArm,
        event_type: str,
        payload: Mapping[str, object],
        ts: int,
        event_id: str | None = None,
    ) -> EventAck:
        return self.store.record(
            SessionEvent(session_id, ts, arm.value, event_type, payload, event_id)
        )

    def search(
        self,
        session_id: str,
        q: str,
        page: int = 1,
        page_size: int | None = None,
        ts: int | None = None,
    ) -> PageResult:
        """Free-text TF-IDF search over title and abstract; logs query + results."""
        if not q.strip():
            raise ValueError("query must be nonempty")
        arm = self.ensure_session(session_id)
        scores: dict[str, float] = {}
        for kind in (FieldKind.TITLE, FieldKind.ABSTRACT):
            for token in tokenize(q):
                post = self.index.postings_map(kind, token)
                if not post:
                    continue
                idf = self.index.idf(kind, token)
                for doc_id, tf in post.items():
                    scores[doc_id] = scores.get(doc_id, 0.0) + tf * idf
        ordered = sorted(scores.items(), key=lambda kv: (-score_key(kv[1]), kv[0]))
        delivered = self._page([doc_id for doc_id, _ in ordered], page, page_size)
        t0 = ts if ts is not None else _now_ms()
        self._record(session_id, arm, "query", {"query": q}, t0)
        self._record(
            session_id,
            arm,
            "view_results",
            {
                "doc_ids": list(delivered.doc_ids),
                "origin": "search",
                "total": delivered.total,
            },
            t0 + 1,
        )
        return delivered

    def view_doc(
        self, session_id: str, doc_id: str, ts: int | None = None
    ) -> DocumentRecord:
        """Fetch a record and log the view."""
        arm = self.ensure_session(session_id)
        doc = self.index.get(doc_id)
        self._record(
            session_id,
            arm,
            "view_doc",
            {"doc_id": doc_id},
            ts if ts is not None else _now_ms(),
        )
        return doc

    def browse(
        self,
        session_id: str,
        kind: str,
        value: str,
        seed_doc_id: str,
        page: int = 1,
        page_size: int | None = None,
        year_from: int | None = None,
        year_to: int | None = None,
        language: str | None = None,
        ts: int | None = None,
    ) -> PageResult:
        """Stratagem browse dispatched by the session's arm.

        Post-filters (year range, language) apply after ranking, preserving
        the order; ranks reported downstream stay absolute within the
        filtered list.
        """
        arm = self.ensure_session(session_id)
        query = StratagemQuery(kind, value, seed_doc_id)
        history = self.store.events(session_id)
        ranked = self._rank(query, arm, history)
        doc_ids = [e.doc_id for e in ranked.entries]
        if year_from is not None or year_to is not None or language is not None:
            doc_ids = [
                d
                for d in doc_ids
                if self._passes_filters(d, year_from, year_to, language)
            ]
        delivered = self._page(doc_ids, page, page_size)
        t0 = ts if ts is not None else _now_ms()
        self._record(
            session_id,
            arm,
            "browse_stratagem",
            {"kind": kind, "value": value, "seed_doc_id": seed_doc_id},
            t0,
        )
        self._record(
            session_id,
            arm,
            "view_results",
            {
                "doc_ids": list(delivered.doc_ids),
                "origin": "browse",
                "total": delivered.total,
            },
            t0 + 1,
        )
        return delivered

    def post_event(
        self,
        session_id: str,
        event_type: str,
        payload: Mapping[str, object],
        ts: int | None = None,
        event_id: str | None = None,
    ) -> EventAck:
        """Ingest a client-side event (clicks and implicit relevance signals)."""
        arm = self.ensure_session(session_id)
        return self._record(
            session_id,
            arm,
            event_type,
            payload,
            ts if ts is not None else _now_ms(),
            event_id,
        )

    def _rank(
        self,
        query: StratagemQuery,
        arm: ExperimentArm,
        history: Sequence[SessionEvent],
    ) -> RankedList:
        if arm is ExperimentArm.B_SIMILARITY:
            seed = self.index.get(query.seed_doc_id)
            return rank_similar(
                query, seed, self.index, self.thesaurus, self.config, arm=arm.value
            )
        if arm is ExperimentArm.C_SESSION_CONTEXT:
            ctx = build_session_context(history, self.index, query.seed_doc_id)
            return rank_contextual(
                query, ctx, self.index, self.thesaurus, self.config, arm=arm.value
            )
        eq = expand_filter(query, self.thesaurus, self.config)
        return rank_default(eq, self.index, arm=arm.value)

    def _passes_filters(
        self,
        doc_id: str,
        year_from: int | None,
        year_to: int | None,
        language: str | None,
    ) -> bool:
        doc = self.index.documents[doc_id]
        if year_from is not None and (doc.year is None or doc.year < year_from):
            return False
        if year_to is not None and (doc.year is None or doc.year > year_to):
            return False
        if language is not None and doc.language != language.lower():
            return False
        return True

    def _page(self, doc_ids: Sequence[str], page: int, page_size: int | None) -> PageResult:
        size = page_size if page_size is not None else self.page_size
        if page < 1 or size < 1:
            raise ValueError("page and page_size must be >= 1")
        start = (page - 1) * size
        return PageResult(tuple(doc_ids[start : start + size]), len(doc_ids), page)


def stratagem_descriptors(doc: DocumentRecord) -> list[dict[str, str]]:
    """The clickable browse links a document detail view offers."""
    links = [{"kind": "keyword", "value": v} for v in doc.keywords]
    links.extend({"kind": "keyword", "value": v} for v in doc.keywords_free)
    links.extend({"kind": "author", "value": v} for v in doc.authors)
    links.extend({"kind": "category", "value": v} for v in doc.categories)
    if doc.journal:
        links.append({"kind": "journal", "value": doc.journal})
    return links
