"""Desk-scale living-lab replacement: planted-topic corpora and seeded user sessions.

The generator plants topical structure: each document belongs to one topic
that drives its vocabulary, keywords, categories, authors, and journal.
Topic labels live in a sidecar file and are never indexed; the simulated
user reads them only inside the click model, so rankers cannot cheat.
Documents are laid out in topic stripes of `block_size` consecutive ids,
which makes the id-ordered baseline genuinely weak on cross-topic filters.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import DocumentRecord, build_index, record_to_obj
from .lab import LivingLab
from .metrics import MetricReport, build_report
from .ranking import DEFAULT_CONFIG, RankingConfig
from .session import EventStore, ExperimentArm, SessionEvent

BASE_TIMESTAMP_MS = 1_600_000_000_000
SESSION_SPACING_MS = 3_600_000

DEFAULT_PROPENSITY: Mapping[str, float] = {
    "keyword": 0.6,
    "author": 0.12,
    "category": 0.12,
    "journal": 0.1,
}

DEFAULT_SIGNAL_PROBABILITY: Mapping[str, float] = {
    "add_to_favourites": 0.15,
    "goto_google_scholar": 0.05,
    "goto_google_books": 0.03,
    "goto_fulltext": 0.10,
    "goto_local_availability": 0.04,
    "export_record": 0.03,
}


def derive_seed(*parts: object) -> int:
    """Stable 64-bit stream seed from arbitrary parts (platform-independent)."""
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class SyntheticCorpusSpec:
    """Shape of a generated corpus; a fixed seed makes it byte-identical."""

    topics: int = 5
    docs_per_topic: int = 200
    keywords_per_topic: int = 10
    shared_keywords: int = 8
    keyword_slots: int = 4
    keyword_overlap: float = 0.35
    categories_per_topic: int = 6
    shared_categories: int = 4
    category_slots: int = 2
    category_overlap: float = 0.3
    title_words_per_topic: int = 40
    common_words: int = 25
    authors_per_topic: int = 40
    free_keywords: int = 15
    journal_count: int = 10
    journal_home_affinity: float = 0.8
    year_range: tuple[int, int] = (1990, 2020)
    block_size: int = 40
    seed: int = 0

    def validate(self) -> None:
        for name in (
            "topics",
            "docs_per_topic",
            "keywords_per_topic",
            "keyword_slots",
            "categories_per_topic",
            "category_slots",
            "title_words_per_topic",
            "authors_per_topic",
            "journal_count",
            "block_size",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


def _topic_stripes(spec: SyntheticCorpusSpec) -> list[int]:
    """Topic of each doc index: stripes of block_size ids, exact per-topic counts."""
    remaining = [spec.docs_per_topic] * spec.topics
    sequence: list[int] = []
    topic = 0
    while any(remaining):
        if remaining[topic]:
            take = min(spec.block_size, remaining[topic])
            sequence.extend([topic] * take)
            remaining[topic] -= take
        topic = (topic + 1) % spec.topics
    return sequence


def topic_query_words(spec: SyntheticCorpusSpec, topic: int) -> list[str]:
    """The title/abstract vocabulary of one topic (what its searchers type)."""
    return [f"topic{topic}term{i:02d}" for i in range(spec.title_words_per_topic)]


def generate_records(
    spec: SyntheticCorpusSpec,
) -> tuple[list[DocumentRecord], dict[str, int]]:
    """Build the synthetic records plus the doc_id -> topic ground truth."""
    spec.validate()
    rng = random.Random(derive_seed(spec.seed, "corpus"))
    topic_keywords = [
        [f"kw{t}_{i:02d}" for i in range(spec.keywords_per_topic)]
        for t in range(spec.topics)
    ]
    shared_keywords = [f"shared_kw_{i:02d}" for i in range(spec.shared_keywords)]
    topic_categories = [
        [f"cat{t}_{i}" for i in range(spec.categories_per_topic)]
        for t in range(spec.topics)
    ]
    shared_categories = [f"shared_cat_{i}" for i in range(spec.shared_categories)]
    common_words = [f"commonterm{i:02d}" for i in range(spec.common_words)]
    topic_words = [topic_query_words(spec, t) for t in range(spec.topics)]
    authors = [
        [f"Author {t}-{i:02d}" for i in range(spec.authors_per_topic)]
        for t in range(spec.topics)
    ]
    free_pool = [f"free_kw_{i:02d}" for i in range(spec.free_keywords)]
    journals = [f"Journal {j:02d}" for j in range(spec.journal_count)]

    def pick_tags(
        pool: Sequence[str], shared: Sequence[str], slots: int, overlap: float
    ) -> list[str]:
        out = []
        for _ in range(slots):
            if shared and spec.topics > 1 and rng.random() < overlap:
                out.append(rng.choice(shared))
            else:
                out.append(rng.choice(pool))
        return sorted(set(out))

    records: list[DocumentRecord] = []
    truth: dict[str, int] = {}
    for i, topic in enumerate(_topic_stripes(spec)):
        doc_id = f"D{i:06d}"
        words = topic_words[topic]
        title_terms = [rng.choice(words) for _ in range(rng.randint(3, 6))]
        title_terms.append(rng.choice(common_words))
        abstract_terms = [
            rng.choice(words) if rng.random() < 0.8 else rng.choice(common_words)
            for _ in range(rng.randint(25, 45))
        ]
        home_journals = [
            journals[j] for j in range(spec.journal_count) if j % spec.topics == topic
        ] or journals
        journal = (
            rng.choice(home_journals)
            if rng.random() < spec.journal_home_affinity
            else rng.choice(journals)
        )
        language = "en" if rng.random() < 0.7 else "de"
        records.append(
            DocumentRecord(
                doc_id=doc_id,
                title=" ".join(title_terms).capitalize(),
                abstracts={language: " ".join(abstract_terms)},
                authors=tuple(
                    sorted(
                        {
                            rng.choice(authors[topic])
                            for _ in range(rng.randint(1, 3))
                        }
                    )
                ),
                keywords=tuple(
                    pick_tags(
                        topic_keywords[topic],
                        shared_keywords,
                        spec.keyword_slots,
                        spec.keyword_overlap,
                    )
                ),
                keywords_free=tuple(
                    sorted({rng.choice(free_pool) for _ in range(rng.randint(0, 2))})
                ),
                categories=tuple(
                    pick_tags(
                        topic_categories[topic],
                        shared_categories,
                        spec.category_slots,
                        spec.category_overlap,
                    )
                ),
                journal=journal,
                year=rng.randint(*spec.year_range),
                language=language,
            )
        )
        truth[doc_id] = topic
    return records, truth


def generate_corpus(
    spec: SyntheticCorpusSpec,
    corpus_path: str | Path,
    truth_path: str | Path,
) -> int:
    """Write the corpus file and its ground-truth sidecar; returns the doc count."""
    records, truth = generate_records(spec)
    with open(corpus_path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(record_to_obj(rec), sort_keys=True, ensure_ascii=False))
            fh.write("\n")
    with open(truth_path, "w", encoding="utf-8") as fh:
        for doc_id, topic in truth.items():
            fh.write(json.dumps({"doc_id": doc_id, "topic": topic}, sort_keys=True))
            fh.write("\n")
    return len(records)


def load_truth(path: str | Path) -> dict[str, int]:
    truth: dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                obj = json.loads(line)
                truth[str(obj["doc_id"])] = int(obj["topic"])
    return truth


@dataclass(frozen=True)
class SimUserProfile:
    """A simulated searcher: one target topic, budgets, and a click model.

    The click model scans ranks in order and clicks the first document whose
    topic matches the target with probability click_relevance, giving up
    after `patience` results.
    """

    target_topic: int
    query_budget: int = 2
    view_budget: int = 3
    stratagem_propensity: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_PROPENSITY)
    )
    click_relevance: float = 0.9
    patience: int = 20
    signal_probability: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_SIGNAL_PROBABILITY)
    )
    direct_entry_probability: float = 0.05

    def __post_init__(self):
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        for prob in (
            self.click_relevance,
            self.direct_entry_probability,
            *self.stratagem_propensity.values(),
            *self.signal_probability.values(),
        ):
            if not 0.0 <= prob <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")


def simulate_clicks(
    doc_ids: Sequence[str],
    truth: Mapping[str, int],
    profile: SimUserProfile,
    rng: random.Random,
) -> int | None:
    """0-based index of the clicked result, or None when the user gives up.

    This is the only place the simulator may read ground-truth topics.
    """
    for idx, doc_id in enumerate(doc_ids[: profile.patience]):
        if truth.get(doc_id) == profile.target_topic and rng.random() < profile.click_relevance:
            return idx
    return None


def _pick_stratagem(
    doc: DocumentRecord, profile: SimUserProfile, rng: random.Random
) -> tuple[str, str] | None:
    values_by_kind = {
        "keyword": doc.keywords,
        "author": doc.authors,
        "category": doc.categories,
        "journal": (doc.journal,) if doc.journal else (),
    }
    for kind in ("keyword", "author", "category", "journal"):
        values = values_by_kind[kind]
        if not values:
            continue
        if rng.random() < profile.stratagem_propensity.get(kind, 0.0):
            return kind, rng.choice(values)
    return None


def simulate_session(
    profile: SimUserProfile,
    lab: LivingLab,
    arm: ExperimentArm | None,
    rng: random.Random,
    *,
    session_id: str,
    truth: Mapping[str, int],
    spec: SyntheticCorpusSpec,
    start_ts: int = BASE_TIMESTAMP_MS,
) -> tuple[SessionEvent, ...]:
    """Play one session loop: query, inspect, browse stratagems, click, signal.

    With arm=None the engine assigns the arm itself. Returns the session's
    recorded events.
    """
    lab.ensure_session(session_id, arm)
    ts = start_ts

    def next_ts() -> int:
        nonlocal ts
        ts += rng.randint(1_000, 20_000)
        return ts

    words = topic_query_words(spec, profile.target_topic)
    current: DocumentRecord | None = None

    if rng.random() < profile.direct_entry_probability:
        # landed on a detail page from a web search engine: no query first
        candidates = sorted(lab.index.documents)
        rng.shuffle(candidates)
        idx = simulate_clicks(candidates[:50], truth, profile, rng)
        if idx is not None:
            current = lab.view_doc(session_id, candidates[idx], ts=next_ts())

    if current is None:
        for _ in range(profile.query_budget):
            query = " ".join(rng.sample(words, k=rng.randint(2, 3)))
            page = lab.search(session_id, query, ts=next_ts())
            idx = simulate_clicks(page.doc_ids, truth, profile, rng)
            if idx is None:
                continue
            clicked = page.doc_ids[idx]
            lab.post_event(
                session_id,
                "click_result",
                {"doc_id": clicked, "rank": idx + 1, "result_size": page.total},
                ts=next_ts(),
            )
            current = lab.view_doc(session_id, clicked, ts=next_ts())
            break
    if current is None:
        return lab.events(session_id)

    for _ in range(profile.view_budget):
        choice = _pick_stratagem(current, profile, rng)
        if choice is None:
            break
        kind, value = choice
        page = lab.browse(
            session_id, kind, value, seed_doc_id=current.doc_id, ts=next_ts()
        )
        idx = simulate_clicks(page.doc_ids, truth, profile, rng)
        if idx is None:
            break
        clicked = page.doc_ids[idx]
        lab.post_event(
            session_id,
            "click_result",
            {"doc_id": clicked, "rank": idx + 1, "result_size": page.total},
            ts=next_ts(),
        )
        current = lab.view_doc(session_id, clicked, ts=next_ts())
        for signal_kind, prob in profile.signal_probability.items():
            if rng.random() < prob:
                lab.post_event(
                    session_id,
                    "signal",
                    {"kind": signal_kind, "doc_id": clicked},
                    ts=next_ts(),
                )
    return lab.events(session_id)


@dataclass(frozen=True)
class ExperimentConfig:
    """A declarative experiment: corpus shape, session count, seed."""

    sessions: int = 3000
    seed: int = 7
    corpus: SyntheticCorpusSpec = field(default_factory=SyntheticCorpusSpec)
    ranking: RankingConfig = field(default_factory=lambda: DEFAULT_CONFIG)
    corpus_path: str | None = None  # pre-built corpus instead of generation
    truth_path: str | None = None
    query_budget: int = 2
    min_view_budget: int = 1
    max_view_budget: int = 4

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
        if "corpus" in obj and isinstance(obj["corpus"], dict):
            obj["corpus"] = SyntheticCorpusSpec(**obj["corpus"])
        if "ranking" in obj and isinstance(obj["ranking"], dict):
            obj["ranking"] = RankingConfig(**obj["ranking"])
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown experiment config keys: {sorted(unknown)}")
        return cls(**obj)


@dataclass(frozen=True)
class ExperimentResult:
    report: MetricReport
    events: tuple[SessionEvent, ...]
    doc_count: int
    session_count: int


def _sample_profile(
    config: ExperimentConfig, rng: random.Random
) -> SimUserProfile:
    return SimUserProfile(
        target_topic=rng.randrange(config.corpus.topics),
        query_budget=config.query_budget,
        view_budget=rng.randint(config.min_view_budget, config.max_view_budget),
    )


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Simulate the configured sessions and evaluate the resulting log.

    Deterministic under the config seed: sessions get independent RNG
    streams and the log is emitted sorted by session id, then timestamp.
    """
    from .corpus import ingest_corpus  # local import keeps module load light

    if config.corpus_path is not None:
        ingested = ingest_corpus(config.corpus_path)
        index = ingested.index
        if config.truth_path is None:
            raise ValueError("corpus_path requires truth_path")
        truth = load_truth(config.truth_path)
        spec = config.corpus
    else:
        records, truth = generate_records(config.corpus)
        index = build_index(records)
        spec = config.corpus

    store = EventStore()
    lab = LivingLab(index, config=config.ranking, store=store, arm_seed=config.seed)
    for i in range(config.sessions):
        session_id = f"S{i:06d}"
        rng = random.Random(derive_seed(config.seed, "session", session_id))
        profile = _sample_profile(config, rng)
        simulate_session(
            profile,
            lab,
            None,
            rng,
            session_id=session_id,
            truth=truth,
            spec=spec,
            start_ts=BASE_TIMESTAMP_MS + i * SESSION_SPACING_MS,
        )
    events = store.all_events()
    report = build_report(events)
    return ExperimentResult(
        report=report,
        events=events,
        doc_count=index.doc_count,
        session_count=config.sessions,
    )


def write_experiment_outputs(
    result: ExperimentResult, out_dir: str | Path
) -> dict[str, Path]:
    """Write the transaction log and both report renderings under out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / "transactions.jsonl"
    with open(log_path, "w", encoding="utf-8") as fh:
        for ev in result.events:
            fh.write(ev.to_json() + "\n")
    report_json = out / "report.json"
    report_json.write_text(result.report.to_json() + "\n", encoding="utf-8")
    report_txt = out / "report.txt"
    report_txt.write_text(result.report.to_text(), encoding="utf-8")
    return {"log": log_path, "report_json": report_json, "report_txt": report_txt}
