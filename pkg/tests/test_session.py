from __future__ import annotations

import json
import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from browselab.corpus import build_index
from browselab.session import (
    ArmMismatchError,
    EventStore,
    ExperimentArm,
    SessionEvent,
    SignalKind,
    assign_arm,
    build_session_context,
    history_size,
    record_event,
)
from conftest import make_record

ARM = ExperimentArm.A_BASELINE.value


def ev(event_type, payload, ts=0, session_id="s1", arm=ARM, event_id=None):
    return SessionEvent(session_id, ts, arm, event_type, payload, event_id)


class TestAssignArm:
    def test_deterministic(self):
        assert assign_arm("abc", 5) is assign_arm("abc", 5)

    def test_not_constant(self):
        arms = {assign_arm(f"s{i}", 0) for i in range(20)}
        assert len(arms) >= 2

    def test_roughly_uniform(self):
        counts = Counter(assign_arm(f"u{i}", 1) for i in range(3000))
        for arm in ExperimentArm:
            assert abs(counts[arm] / 3000 - 1 / 3) < 0.05

    def test_seed_changes_assignment_somewhere(self):
        assert any(assign_arm(f"x{i}", 0) != assign_arm(f"x{i}", 1) for i in range(30))


class TestSessionEventValidation:
    def test_click_rank_bounds(self):
        ev("click_result", {"doc_id": "d", "rank": 3, "result_size": 10})
        with pytest.raises(ValueError):
            ev("click_result", {"doc_id": "d", "rank": 0, "result_size": 10})
        with pytest.raises(ValueError):
            ev("click_result", {"doc_id": "d", "rank": 11, "result_size": 10})

    def test_signal_kind_closed_set(self):
        for kind in SignalKind:
            ev("signal", {"kind": kind.value, "doc_id": "d"})
        with pytest.raises(ValueError):
            ev("signal", {"kind": "goto_wikipedia", "doc_id": "d"})

    def test_unknown_event_type(self):
        with pytest.raises(ValueError):
            ev("hover", {})

    def test_json_round_trip(self):
        event = ev("query", {"query": "violence sports"}, ts=42, event_id="e1")
        assert SessionEvent.from_json(event.to_json()) == event


def _doc_fixture():
    """Index whose docs produce the worked keyword counts 2/1/1 and category 3/2/2."""
    records = [
        make_record(
            "seen1",
            keywords=["Football", "Radicalism"],
            categories=["Political Sociology", "Decision Making"],
        ),
        make_record(
            "seen2",
            keywords=["Football", "Ethnic Conflict"],
            categories=["Political Sociology", "Sociology"],
        ),
        make_record(
            "seen3",
            categories=["Political Sociology", "Decision Making", "Sociology"],
        ),
        make_record("seed", keywords=["Seed Kw A", "Seed Kw B"], categories=["Seed Cat"]),
    ]
    return build_index(records)


class TestBuildSessionContext:
    def test_ranks_are_max_normalized(self):
        index = _doc_fixture()
        events = [
            ev("query", {"query": "violence sports"}, ts=1),
            ev("view_doc", {"doc_id": "seen1"}, ts=2),
            ev("view_results", {"doc_ids": ["seen2", "seen3"], "origin": "search"}, ts=3),
        ]
        ctx = build_session_context(events, index)
        assert ctx.queries == ("violence sports",)
        assert ctx.keywords == (
            ("football", 1.0),
            ("ethnic conflict", 0.5),
            ("radicalism", 0.5),
        )
        assert ctx.categories == (
            ("political sociology", 1.0),
            ("decision making", 2 / 3),
            ("sociology", 2 / 3),
        )
        assert ctx.history_size == 3

    def test_view_doc_and_result_counts_add_up(self):
        # same doc shown in results five times and viewed four times: count 9
        index = build_index([make_record("d", keywords=["topic"])])
        events = [ev("view_results", {"doc_ids": ["d"], "origin": "search"}, ts=i) for i in range(5)]
        events += [ev("view_doc", {"doc_id": "d"}, ts=5 + i) for i in range(4)]
        # a second keyword elsewhere to avoid the cold-start rule
        ctx = build_session_context(events, index)
        assert ctx.keywords == (("topic", 1.0),)

    def test_top_three_with_drop(self):
        records = [
            make_record(f"m{i}", keywords=["kwa"]) for i in range(9)
        ]
        records += [make_record(f"b{i}", keywords=["kwb", "kwc"]) for i in range(3)]
        records += [make_record("last", keywords=["kwd"])]
        index = build_index(records)
        doc_ids = [f"m{i}" for i in range(9)] + [f"b{i}" for i in range(3)] + ["last"]
        events = [ev("view_results", {"doc_ids": doc_ids, "origin": "search"})]
        ctx = build_session_context(events, index)
        assert ctx.keywords == (("kwa", 1.0), ("kwb", 3 / 9), ("kwc", 3 / 9))

    def test_cold_start_fires_iff_max_count_is_one(self):
        index = _doc_fixture()
        single_view = [ev("view_doc", {"doc_id": "seen1"}, ts=1)]
        ctx = build_session_context(single_view, index, seed_doc_id="seed")
        assert ctx.keywords == (("seed kw a", 1.0), ("seed kw b", 1.0))
        assert ctx.categories == (("seed cat", 1.0),)

        double_view = single_view + [ev("view_doc", {"doc_id": "seen1"}, ts=2)]
        ctx2 = build_session_context(double_view, index, seed_doc_id="seed")
        assert ("football", 1.0) in ctx2.keywords
        assert all(term not in ("seed kw a", "seed kw b") for term, _ in ctx2.keywords)

    def test_cold_start_needs_a_seed(self):
        index = _doc_fixture()
        events = [ev("view_doc", {"doc_id": "seen1"}, ts=1)]
        ctx = build_session_context(events, index)
        assert all(rank == 1.0 for _, rank in ctx.keywords)
        assert ("football", 1.0) in ctx.keywords

    def test_empty_events_no_seed(self):
        index = _doc_fixture()
        ctx = build_session_context([], index)
        assert ctx.is_empty
        assert ctx.history_size == 0

    def test_queries_unfiltered_and_ordered(self):
        index = _doc_fixture()
        events = [
            ev("query", {"query": "first"}, ts=1),
            ev("query", {"query": "second"}, ts=2),
            ev("query", {"query": "first"}, ts=3),
        ]
        ctx = build_session_context(events, index)
        assert ctx.queries == ("first", "second", "first")

    @given(st.integers(min_value=0, max_value=5000))
    @settings(max_examples=50)
    def test_lists_capped_and_normalized(self, seed):
        rng = random.Random(seed)
        pool = [f"kw{i}" for i in range(8)]
        records = [
            make_record(f"d{i}", keywords=rng.sample(pool, rng.randint(1, 4)))
            for i in range(rng.randint(1, 12))
        ]
        index = build_index(records)
        events = [
            ev("view_results", {"doc_ids": [r.doc_id for r in records], "origin": "search"})
        ]
        ctx = build_session_context(events, index)
        assert len(ctx.keywords) <= 3
        if ctx.keywords:
            assert ctx.keywords[0][1] == 1.0
            assert all(0 < rank <= 1 for _, rank in ctx.keywords)
            ranks = [rank for _, rank in ctx.keywords]
            assert ranks == sorted(ranks, reverse=True)

    @given(st.integers(min_value=0, max_value=5000))
    @settings(max_examples=50)
    def test_cap_is_pure_postfilter(self, seed):
        rng = random.Random(seed)
        pool = [f"kw{i}" for i in range(6)]
        records = [
            make_record(f"d{i}", keywords=rng.sample(pool, rng.randint(1, 3)))
            for i in range(rng.randint(2, 10))
        ]
        index = build_index(records)
        shown = [r.doc_id for r in records]
        events = [ev("view_results", {"doc_ids": shown, "origin": "search"})]
        ctx = build_session_context(events, index)
        counts = Counter()
        for r in records:
            counts.update({kw.lower() for kw in r.keywords})
        peak = max(counts.values())
        full = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        expected = tuple((t, c / peak) for t, c in full)[:3]
        if peak > 1:
            assert ctx.keywords == expected


class TestHistorySize:
    def test_counts_strictly_before(self):
        events = [ev("query", {"query": "x"}, ts=t) for t in (10, 20, 30, 40)]
        assert history_size(events, 10) == 0
        assert history_size(events, 45) == 4
        assert history_size(events, 30) == 2

    def test_history_bin_examples(self):
        events = [ev("view_doc", {"doc_id": "d"}, ts=t) for t in range(12)]
        assert history_size(events, 4) == 4  # lands in the [2,5] bin
        assert history_size(events, 12) == 12  # lands in the [11,inf) bin


class TestEventStore:
    def test_first_event_creates_session(self):
        store = EventStore()
        ack = record_event(store, ev("query", {"query": "x"}))
        assert ack.stored
        assert store.arm_of("s1") is ExperimentArm.A_BASELINE

    def test_arm_mismatch_rejected(self):
        store = EventStore()
        record_event(store, ev("query", {"query": "x"}))
        with pytest.raises(ArmMismatchError):
            record_event(store, ev("query", {"query": "y"}, arm=ExperimentArm.B_SIMILARITY.value))

    def test_duplicate_event_id_stored_once(self):
        store = EventStore()
        record_event(store, ev("query", {"query": "x"}, event_id="e1"))
        ack = record_event(store, ev("query", {"query": "x"}, event_id="e1"))
        assert ack.duplicate and not ack.stored
        assert len(store.events("s1")) == 1

    def test_out_of_order_timestamp_flagged_not_dropped(self):
        store = EventStore()
        record_event(store, ev("query", {"query": "x"}, ts=100))
        ack = record_event(store, ev("query", {"query": "y"}, ts=50))
        assert ack.stored
        assert ack.warnings
        assert len(store.events("s1")) == 2
        assert any("monotonicity" in d for d in store.diagnostics)

    def test_durable_log_is_json_lines(self, tmp_path):
        path = tmp_path / "log.jsonl"
        store = EventStore(path)
        record_event(store, ev("query", {"query": "x"}, ts=1))
        record_event(store, ev("view_doc", {"doc_id": "d"}, ts=2))
        store.close()
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 2
        assert json.loads(lines[0])["event_type"] == "query"

    def test_sessions_are_independent(self):
        store = EventStore()
        record_event(store, ev("query", {"query": "x"}, session_id="a"))
        record_event(store, ev("query", {"query": "y"}, session_id="b",
                               arm=ExperimentArm.C_SESSION_CONTEXT.value))
        assert store.arm_of("a") is ExperimentArm.A_BASELINE
        assert store.arm_of("b") is ExperimentArm.C_SESSION_CONTEXT
        assert store.session_ids() == ("a", "b")
