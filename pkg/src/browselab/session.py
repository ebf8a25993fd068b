"""Session event tracking, experiment-arm assignment, and the session-context user model.

The transaction log is append-only JSON lines in the SessionEvent schema;
it is the contract between the live service, the simulator, and the
evaluation suite.
"""

from __future__ import annotations

import hashlib
import json
import threading
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import IO, Mapping, Sequence

from .corpus import CorpusIndex, DocumentRecord, FieldKind, field_term_counts

#: Keywords/categories kept in a session context (top counts only, to cut noise).
TOP_FEATURE_COUNT = 3


class ExperimentArm(Enum):
    """Ranking method a session is locked to for its whole lifetime."""

    A_BASELINE = "A_baseline"
    B_SIMILARITY = "B_similarity"
    C_SESSION_CONTEXT = "C_session_context"


class SignalKind(Enum):
    """The six logged actions treated as implicit relevance feedback."""

    ADD_TO_FAVOURITES = "add_to_favourites"
    GOTO_GOOGLE_SCHOLAR = "goto_google_scholar"
    GOTO_GOOGLE_BOOKS = "goto_google_books"
    GOTO_FULLTEXT = "goto_fulltext"
    GOTO_LOCAL_AVAILABILITY = "goto_local_availability"
    EXPORT_RECORD = "export_record"


SIGNAL_KIND_VALUES = frozenset(k.value for k in SignalKind)

EVENT_TYPES = (
    "query",
    "view_results",
    "view_doc",
    "browse_stratagem",
    "click_result",
    "signal",
)


@dataclass(frozen=True)
class SessionEvent:
    """One logged interaction; timestamps are milliseconds since the epoch."""

    session_id: str
    timestamp: int
    arm: str
    event_type: str
    payload: Mapping[str, object]
    event_id: str | None = None

    def __post_init__(self):
        if self.event_type not in EVENT_TYPES:
            raise ValueError(f"unknown event_type {self.event_type!r}")
        if self.arm not in {a.value for a in ExperimentArm}:
            raise ValueError(f"unknown arm {self.arm!r}")
        if self.event_type == "click_result":
            rank = self.payload.get("rank")
            size = self.payload.get("result_size")
            if not isinstance(rank, int) or rank < 1:
                raise ValueError("click rank must be an integer >= 1")
            if not isinstance(size, int) or rank > size:
                raise ValueError("click rank must not exceed the result-set size")
        if self.event_type == "signal":
            kind = self.payload.get("kind")
            if kind not in SIGNAL_KIND_VALUES:
                raise ValueError(f"unknown signal kind {kind!r}")

    def to_json(self) -> str:
        obj = {
            "session_id": self.session_id,
            "timestamp": self.timestamp,
            "arm": self.arm,
            "event_type": self.event_type,
            "payload": self.payload,
        }
        if self.event_id is not None:
            obj["event_id"] = self.event_id
        return json.dumps(obj, sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str) -> "SessionEvent":
        obj = json.loads(line)
        if not isinstance(obj, dict):
            raise ValueError("event line must be a JSON object")
        return cls(
            session_id=str(obj["session_id"]),
            timestamp=int(obj["timestamp"]),
            arm=str(obj["arm"]),
            event_type=str(obj["event_type"]),
            payload=dict(obj.get("payload") or {}),
            event_id=obj.get("event_id"),
        )


def assign_arm(session_id: str, seed: int = 0) -> ExperimentArm:
    """Deterministic uniform arm assignment for a fresh session.

    Hash-based so the same (session_id, seed) always maps to the same arm,
    across processes and platforms.
    """
    digest = hashlib.sha256(f"{seed}:{session_id}".encode("utf-8")).digest()
    arms = list(ExperimentArm)
    return arms[int.from_bytes(digest[:8], "big") % len(arms)]


def history_size(events: Sequence[SessionEvent], at: int) -> int:
    """Number of interactions strictly before the given timestamp."""
    return sum(1 for ev in events if ev.timestamp < at)


@dataclass(frozen=True)
class SessionContext:
    """The per-session user model: queries plus top-ranked keywords/categories.

    Keyword/category ranks are max-normalized to (0, 1]; when a list is
    nonempty its top rank is exactly 1. Queries are kept unfiltered.
    """

    queries: tuple[str, ...] = ()
    keywords: tuple[tuple[str, float], ...] = ()
    categories: tuple[tuple[str, float], ...] = ()
    history_size: int = 0

    @property
    def is_empty(self) -> bool:
        return not (self.queries or self.keywords or self.categories)

    @classmethod
    def empty(cls) -> "SessionContext":
        return cls()


def _count_doc_features(
    index: CorpusIndex,
    doc_id: object,
    keyword_counts: Counter,
    category_counts: Counter,
) -> None:
    if not isinstance(doc_id, str) or doc_id not in index.documents:
        return
    doc = index.documents[doc_id]
    # free keywords share the keyword counter; one feature, one tally
    keyword_counts.update(field_term_counts(doc, FieldKind.KEYWORD).keys())
    keyword_counts.update(field_term_counts(doc, FieldKind.KEYWORD_FREE).keys())
    category_counts.update(field_term_counts(doc, FieldKind.CATEGORY).keys())


def _top_ranked(counts: Counter) -> tuple[tuple[str, float], ...]:
    if not counts:
        return ()
    peak = max(counts.values())
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return tuple((term, count / peak) for term, count in ordered[:TOP_FEATURE_COUNT])


def _seed_fallback(doc: DocumentRecord) -> tuple[tuple[str, float], tuple[str, float]]:
    keywords = sorted(
        set(field_term_counts(doc, FieldKind.KEYWORD))
        | set(field_term_counts(doc, FieldKind.KEYWORD_FREE))
    )
    categories = sorted(field_term_counts(doc, FieldKind.CATEGORY))
    return (
        tuple((t, 1.0) for t in keywords[:TOP_FEATURE_COUNT]),
        tuple((t, 1.0) for t in categories[:TOP_FEATURE_COUNT]),
    )


def build_session_context(
    events: Sequence[SessionEvent],
    index: CorpusIndex,
    seed_doc_id: str | None = None,
) -> SessionContext:
    """Derive the session context from implicit feedback.

    Keyword/category counts accumulate once per appearance in a viewed
    document and once per appearance in a document delivered in a result
    list; ranks are count / max count, top three kept per feature. A
    maximum raw count of 1 is a cold start (e.g. direct entry from a web
    search engine): the seed document's own keywords and classifications
    stand in at rank 1.
    """
    queries: list[str] = []
    keyword_counts: Counter = Counter()
    category_counts: Counter = Counter()
    for ev in events:
        if ev.event_type == "query":
            queries.append(str(ev.payload.get("query", "")))
        elif ev.event_type == "view_doc":
            _count_doc_features(index, ev.payload.get("doc_id"), keyword_counts, category_counts)
        elif ev.event_type == "view_results":
            doc_ids = ev.payload.get("doc_ids")
            if isinstance(doc_ids, (list, tuple)):
                for doc_id in doc_ids:
                    _count_doc_features(index, doc_id, keyword_counts, category_counts)
    max_count = max(
        [*keyword_counts.values(), *category_counts.values()], default=0
    )
    if max_count == 1 and seed_doc_id is not None and seed_doc_id in index.documents:
        keywords, categories = _seed_fallback(index.documents[seed_doc_id])
    else:
        keywords = _top_ranked(keyword_counts)
        categories = _top_ranked(category_counts)
    return SessionContext(
        queries=tuple(queries),
        keywords=keywords,
        categories=categories,
        history_size=len(events),
    )


class ArmMismatchError(ValueError):
    """An event named a different arm than the session was assigned."""


@dataclass(frozen=True)
class EventAck:
    stored: bool
    duplicate: bool = False
    warnings: tuple[str, ...] = ()


class EventStore:
    """Ordered per-session event log with an optional durable append file.

    A single lock serializes writes (desk scale); reads return snapshots.
    Out-of-order timestamps are accepted but flagged in the diagnostics.
    """

    def __init__(self, log_path: str | Path | None = None):
        self._lock = threading.Lock()
        self._arms: dict[str, ExperimentArm] = {}
        self._events: dict[str, list[SessionEvent]] = {}
        self._event_ids: set[tuple[str, str]] = set()
        self._diagnostics: list[str] = []
        self._log_file: IO[str] | None = None
        if log_path is not None:
            # line buffered: each event reaches disk as written, so the log
            # survives an unclean shutdown
            self._log_file = open(log_path, "a", encoding="utf-8", buffering=1)

    def ensure_session(self, session_id: str, arm: ExperimentArm) -> ExperimentArm:
        """Register a session's arm, or return the one already on record."""
        with self._lock:
            existing = self._arms.get(session_id)
            if existing is not None:
                return existing
            self._arms[session_id] = arm
            self._events[session_id] = []
            return arm

    def arm_of(self, session_id: str) -> ExperimentArm | None:
        with self._lock:
            return self._arms.get(session_id)

    def record(self, event: SessionEvent) -> EventAck:
        with self._lock:
            arm = self._arms.get(event.session_id)
            if arm is None:
                arm = ExperimentArm(event.arm)
                self._arms[event.session_id] = arm
                self._events[event.session_id] = []
            elif event.arm != arm.value:
                raise ArmMismatchError(
                    f"session {event.session_id} is on arm {arm.value}, got {event.arm}"
                )
            if event.event_id is not None:
                key = (event.session_id, event.event_id)
                if key in self._event_ids:
                    return EventAck(stored=False, duplicate=True)
                self._event_ids.add(key)
            warnings: tuple[str, ...] = ()
            session_events = self._events[event.session_id]
            if session_events and event.timestamp < session_events[-1].timestamp:
                message = (
                    f"monotonicity violation in session {event.session_id}: "
                    f"{event.timestamp} < {session_events[-1].timestamp}"
                )
                self._diagnostics.append(message)
                warnings = (message,)
            session_events.append(event)
            if self._log_file is not None:
                self._log_file.write(event.to_json() + "\n")
            return EventAck(stored=True, warnings=warnings)

    def events(self, session_id: str) -> tuple[SessionEvent, ...]:
        with self._lock:
            return tuple(self._events.get(session_id, ()))

    def session_ids(self) -> tuple[str, ...]:
        with self._lock:
            return tuple(self._events)

    def all_events(self) -> tuple[SessionEvent, ...]:
        """Every stored event, sessions in id order, timestamps in log order."""
        with self._lock:
            out: list[SessionEvent] = []
            for sid in sorted(self._events):
                out.extend(self._events[sid])
            return tuple(out)

    @property
    def diagnostics(self) -> tuple[str, ...]:
        with self._lock:
            return tuple(self._diagnostics)

    def flush(self) -> None:
        with self._lock:
            if self._log_file is not None:
                self._log_file.flush()

    def close(self) -> None:
        with self._lock:
            if self._log_file is not None:
                self._log_file.close()
                self._log_file = None


def record_event(store: EventStore, event: SessionEvent) -> EventAck:
    """Append an event to its session's log; idempotent under event_id."""
    return store.record(event)
