"""Evaluation of transaction logs: stratagem-run reconstruction and the metric suite.

Everything here is pure batch computation over parsed log events. First-click
ranks beyond 40 (the third result page) are excluded from mean-first-relevant,
dwell times are capped at 20 minutes, and usefulness skips sessions with more
than 10 implicit relevance signals; the caps exist to keep outliers from
dominating the averages.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

from .session import ExperimentArm, SessionEvent

MAX_CLICK_RANK = 40
MIN_LARGE_RESULT_SIZE = 20
DWELL_CAP_SECONDS = 1200.0
SIGNAL_CAP_PER_SESSION = 10

HISTORY_BINS = (("[2,5]", 2, 5), ("[6,10]", 6, 10), ("[11,inf)", 11, None))
RESIDUAL_HISTORY_BIN = "[0,1]"

BONFERRONI_COMPARISONS = 3


@dataclass(frozen=True)
class StratagemRunRecord:
    """One stratagem browse paired with its result list and clicks."""

    session_id: str
    arm: str
    kind: str
    result_set_size: int
    first_clicked_rank: int | None
    clicked_ranks: tuple[int, ...]
    history_size: int
    browse_timestamp: int
    results_timestamp: int


@dataclass(frozen=True)
class LogParseResult:
    events: tuple[SessionEvent, ...]
    diagnostics: tuple[tuple[int, str], ...]


def parse_log(source: str | Path | IO[str] | Iterable[str]) -> LogParseResult:
    """Parse a line-delimited transaction log, skipping malformed lines."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return parse_log(list(fh))
    events: list[SessionEvent] = []
    diagnostics: list[tuple[int, str]] = []
    for lineno, line in enumerate(source, start=1):
        if not line.strip():
            continue
        try:
            events.append(SessionEvent.from_json(line))
        except (ValueError, KeyError, TypeError) as exc:
            diagnostics.append((lineno, str(exc)))
    return LogParseResult(tuple(events), tuple(diagnostics))


def group_by_session(events: Iterable[SessionEvent]) -> dict[str, list[SessionEvent]]:
    """Events per session, stably ordered by timestamp."""
    sessions: dict[str, list[SessionEvent]] = {}
    for ev in events:
        sessions.setdefault(ev.session_id, []).append(ev)
    for evs in sessions.values():
        evs.sort(key=lambda e: e.timestamp)
    return sessions


def _session_runs(session_events: Sequence[SessionEvent]) -> list[StratagemRunRecord]:
    runs: list[StratagemRunRecord] = []
    pending: SessionEvent | None = None
    pending_history = 0
    current: dict | None = None

    def close_current() -> None:
        nonlocal current
        if current is None:
            return
        clicks = tuple(current["clicks"])
        runs.append(
            StratagemRunRecord(
                session_id=current["browse"].session_id,
                arm=current["browse"].arm,
                kind=str(current["browse"].payload.get("kind", "")),
                result_set_size=current["size"],
                first_clicked_rank=clicks[0] if clicks else None,
                clicked_ranks=clicks,
                history_size=current["history"],
                browse_timestamp=current["browse"].timestamp,
                results_timestamp=current["results"].timestamp,
            )
        )
        current = None

    for position, ev in enumerate(session_events):
        et = ev.event_type
        if et == "query":
            pending = None
        elif et == "browse_stratagem":
            pending = ev
            pending_history = position
        elif et == "view_results":
            origin = ev.payload.get("origin")
            close_current()
            if pending is not None and origin == "browse":
                doc_ids = ev.payload.get("doc_ids")
                delivered = len(doc_ids) if isinstance(doc_ids, (list, tuple)) else 0
                size = ev.payload.get("total")
                current = {
                    "browse": pending,
                    "results": ev,
                    "history": pending_history,
                    "size": size if isinstance(size, int) else delivered,
                    "clicks": [],
                }
            pending = None
        elif et == "click_result" and current is not None:
            rank = ev.payload.get("rank")
            if isinstance(rank, int):
                current["clicks"].append(rank)
    close_current()
    return runs


def reconstruct_runs(events: Iterable[SessionEvent]) -> list[StratagemRunRecord]:
    """Pair each browse with its immediately following result list and clicks.

    Clicks attach to the most recently delivered result list; a query or a
    search-originated result list in between breaks the pairing.
    """
    runs: list[StratagemRunRecord] = []
    for session_events in group_by_session(events).values():
        runs.extend(_session_runs(session_events))
    return runs


@dataclass(frozen=True)
class MfrResult:
    """Mean first-clicked rank with sample SD; None marks an undefined value."""

    mfr: float | None
    sd: float | None
    n: int


def mean_first_relevant(
    runs: Iterable[StratagemRunRecord],
    min_result_size: int = 1,
    max_rank: int = MAX_CLICK_RANK,
) -> MfrResult:
    """Mean rank of the first click over clicked runs, with exclusion rules.

    Runs whose first click lies beyond max_rank or whose result set is
    smaller than min_result_size do not contribute.
    """
    ranks = [
        r.first_clicked_rank
        for r in runs
        if r.first_clicked_rank is not None
        and r.first_clicked_rank <= max_rank
        and r.result_set_size >= min_result_size
    ]
    if not ranks:
        return MfrResult(None, None, 0)
    mean = math.fsum(ranks) / len(ranks)
    sd = None
    if len(ranks) > 1:
        sd = math.sqrt(math.fsum((x - mean) ** 2 for x in ranks) / (len(ranks) - 1))
    return MfrResult(mean, sd, len(ranks))


def segment_by_history(
    runs: Sequence[StratagemRunRecord],
    min_result_size: int = 1,
    max_rank: int = MAX_CLICK_RANK,
) -> dict[str, MfrResult]:
    """Mean first relevant per history-size bin, plus a residual bin below 2."""
    out: dict[str, MfrResult] = {}
    residual = [r for r in runs if r.history_size < HISTORY_BINS[0][1]]
    out[RESIDUAL_HISTORY_BIN] = mean_first_relevant(residual, min_result_size, max_rank)
    for label, lo, hi in HISTORY_BINS:
        selected = [
            r
            for r in runs
            if r.history_size >= lo and (hi is None or r.history_size <= hi)
        ]
        out[label] = mean_first_relevant(selected, min_result_size, max_rank)
    return out


def usefulness(
    sessions: Iterable[Sequence[SessionEvent]],
    scope: str,
    signal_cap: int = SIGNAL_CAP_PER_SESSION,
) -> dict[str, int]:
    """Per-arm count of implicit relevance signals attributable to stratagem use.

    local: signals on documents contained in the result set of the most
    recent stratagem run. global: all signals after the session's first
    stratagem use. Sessions with more than signal_cap signals are skipped.
    """
    if scope not in ("local", "global"):
        raise ValueError(f"scope must be 'local' or 'global', got {scope!r}")
    per_arm: dict[str, int] = {}
    for events in sessions:
        if not events:
            continue
        if sum(1 for e in events if e.event_type == "signal") > signal_cap:
            continue
        arm = events[0].arm
        count = 0
        if scope == "global":
            browsed = False
            for ev in events:
                if ev.event_type == "browse_stratagem":
                    browsed = True
                elif ev.event_type == "signal" and browsed:
                    count += 1
        else:
            pending = False
            run_docs: set[str] | None = None
            for ev in events:
                if ev.event_type == "query":
                    pending = False
                elif ev.event_type == "browse_stratagem":
                    pending = True
                elif ev.event_type == "view_results":
                    if pending and ev.payload.get("origin") == "browse":
                        doc_ids = ev.payload.get("doc_ids")
                        if isinstance(doc_ids, (list, tuple)):
                            run_docs = {d for d in doc_ids if isinstance(d, str)}
                    pending = False
                elif (
                    ev.event_type == "signal"
                    and run_docs is not None
                    and ev.payload.get("doc_id") in run_docs
                ):
                    count += 1
        per_arm[arm] = per_arm.get(arm, 0) + count
    return per_arm


def dwell_time(events: Sequence[SessionEvent]) -> float | None:
    """Seconds from the first stratagem use to the session's last event."""
    browse_ts = next(
        (e.timestamp for e in events if e.event_type == "browse_stratagem"), None
    )
    if browse_ts is None:
        return None
    return (max(e.timestamp for e in events) - browse_ts) / 1000.0


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


@dataclass(frozen=True)
class MannWhitneyResult:
    u: float
    p: float
    r: float
    n_a: int
    n_b: int


def mann_whitney_u(sample_a: Sequence[float], sample_b: Sequence[float]) -> MannWhitneyResult:
    """Two-sided Mann-Whitney U via the normal approximation.

    U comes from rank sums with midranks for ties; the variance carries the
    tie correction and z a continuity correction. Effect size is
    r = |z| / sqrt(n_a + n_b). The first sample's U is returned, so
    swapping the samples yields U' = n_a * n_b - U at the same p.
    """
    a = list(sample_a)
    b = list(sample_b)
    if not a or not b:
        raise ValueError("both samples must be nonempty")
    n_a, n_b = len(a), len(b)
    values = a + b
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    tie_term = 0.0
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        midrank = (i + j + 2) / 2.0  # ranks are 1-based
        for k in range(i, j + 1):
            ranks[order[k]] = midrank
        ties = j - i + 1
        tie_term += ties**3 - ties
        i = j + 1
    rank_sum_a = math.fsum(ranks[:n_a])
    u = rank_sum_a - n_a * (n_a + 1) / 2.0
    n = n_a + n_b
    mean_u = n_a * n_b / 2.0
    variance = (n_a * n_b / 12.0) * ((n + 1) - tie_term / (n * (n - 1)))
    if variance <= 0:
        return MannWhitneyResult(u, 1.0, 0.0, n_a, n_b)
    z = max(abs(u - mean_u) - 0.5, 0.0) / math.sqrt(variance)
    p = min(1.0, 2.0 * _normal_sf(z))
    return MannWhitneyResult(u, p, z / math.sqrt(n), n_a, n_b)


@dataclass(frozen=True)
class BonferroniResult:
    threshold: float
    significant: tuple[bool, ...]


def bonferroni(p_values: Sequence[float], m: int) -> BonferroniResult:
    """Family-wise decisions at the corrected threshold 0.05 / m."""
    if m < 1:
        raise ValueError("m must be >= 1")
    threshold = 0.05 / m
    return BonferroniResult(threshold, tuple(p < threshold for p in p_values))


@dataclass(frozen=True)
class PairwiseTest:
    pair: str
    u: float
    p: float
    r: float
    n_a: int
    n_b: int
    significant: bool


@dataclass(frozen=True)
class ArmReport:
    sessions: int
    sessions_with_stratagem: int
    stratagem_runs: int
    document_views_from_stratagem: int
    clicked_runs: int
    mean_interactions_per_session: float | None
    mean_dwell_seconds: float | None
    dwell_excluded_sessions: int
    mfr: MfrResult
    mfr_ge20: MfrResult
    history_bins: Mapping[str, MfrResult]
    local_usefulness: int
    global_usefulness: int


@dataclass(frozen=True)
class MetricReport:
    arms: Mapping[str, ArmReport]
    pairwise: tuple[PairwiseTest, ...]
    bonferroni_threshold: float
    usefulness_excluded_sessions: int
    total_sessions: int
    total_events: int
    parse_diagnostics: int
    notes: tuple[str, ...]

    def to_obj(self) -> dict:
        def mfr_obj(m: MfrResult) -> dict:
            return {"mfr": m.mfr, "sd": m.sd, "n": m.n}

        return {
            "arms": {
                arm: {
                    "sessions": rep.sessions,
                    "sessions_with_stratagem": rep.sessions_with_stratagem,
                    "stratagem_runs": rep.stratagem_runs,
                    "document_views_from_stratagem": rep.document_views_from_stratagem,
                    "clicked_runs": rep.clicked_runs,
                    "mean_interactions_per_session": rep.mean_interactions_per_session,
                    "mean_dwell_seconds": rep.mean_dwell_seconds,
                    "dwell_excluded_sessions": rep.dwell_excluded_sessions,
                    "mfr": mfr_obj(rep.mfr),
                    "mfr_ge20": mfr_obj(rep.mfr_ge20),
                    "history_bins": {k: mfr_obj(v) for k, v in rep.history_bins.items()},
                    "local_usefulness": rep.local_usefulness,
                    "global_usefulness": rep.global_usefulness,
                }
                for arm, rep in self.arms.items()
            },
            "pairwise": [
                {
                    "pair": t.pair,
                    "u": t.u,
                    "p": t.p,
                    "r": t.r,
                    "n_a": t.n_a,
                    "n_b": t.n_b,
                    "significant": t.significant,
                }
                for t in self.pairwise
            ],
            "bonferroni_threshold": self.bonferroni_threshold,
            "usefulness_excluded_sessions": self.usefulness_excluded_sessions,
            "total_sessions": self.total_sessions,
            "total_events": self.total_events,
            "parse_diagnostics": self.parse_diagnostics,
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_obj(), sort_keys=True, indent=2, ensure_ascii=False)

    def to_text(self) -> str:
        def num(value: float | None, digits: int = 2) -> str:
            return "n/a" if value is None else f"{value:.{digits}f}"

        lines = []
        for note in self.notes:
            lines.append(f"# {note}")
        lines.append(
            f"# sessions={self.total_sessions} events={self.total_events} "
            f"malformed_lines={self.parse_diagnostics}"
        )
        lines.append("")
        header = (
            f"{'arm':<18} {'runs':>6} {'views':>6} {'clicked':>8} "
            f"{'MFR':>7} {'SD':>7} {'N':>6} {'MFR>=20':>8} {'SD':>7} {'N':>6}"
        )
        lines.append(header)
        lines.append("-" * len(header))
        for arm, rep in self.arms.items():
            lines.append(
                f"{arm:<18} {rep.stratagem_runs:>6} "
                f"{rep.document_views_from_stratagem:>6} {rep.clicked_runs:>8} "
                f"{num(rep.mfr.mfr):>7} {num(rep.mfr.sd):>7} {rep.mfr.n:>6} "
                f"{num(rep.mfr_ge20.mfr):>8} {num(rep.mfr_ge20.sd):>7} {rep.mfr_ge20.n:>6}"
            )
        lines.append("")
        header2 = (
            f"{'arm':<18} {'sessions':>9} {'w/strat':>8} {'mean-inter':>11} "
            f"{'dwell(s)':>9} {'dwell-excl':>10} {'local-use':>10} {'global-use':>11}"
        )
        lines.append(header2)
        lines.append("-" * len(header2))
        for arm, rep in self.arms.items():
            lines.append(
                f"{arm:<18} {rep.sessions:>9} {rep.sessions_with_stratagem:>8} "
                f"{num(rep.mean_interactions_per_session):>11} "
                f"{num(rep.mean_dwell_seconds):>9} {rep.dwell_excluded_sessions:>10} "
                f"{rep.local_usefulness:>10} {rep.global_usefulness:>11}"
            )
        lines.append("")
        lines.append(self.history_text())
        lines.append("")
        lines.append(
            f"pairwise Mann-Whitney U (two-sided, Bonferroni p* = "
            f"{self.bonferroni_threshold:.4f})"
        )
        for t in self.pairwise:
            lines.append(
                f"  {t.pair:<40} U={t.u:.1f} p={t.p:.4f} r={t.r:.3f} "
                f"n=({t.n_a},{t.n_b}) {'significant' if t.significant else 'n.s.'}"
            )
        lines.append(
            f"usefulness: excluded {self.usefulness_excluded_sessions} sessions "
            f"with more than {SIGNAL_CAP_PER_SESSION} signals"
        )
        return "\n".join(lines) + "\n"

    def history_text(self) -> str:
        def num(value: float | None) -> str:
            return "n/a" if value is None else f"{value:.2f}"

        bins = [RESIDUAL_HISTORY_BIN, *(label for label, _, _ in HISTORY_BINS)]
        lines = ["MFR by history size H"]
        header = f"{'arm':<18} " + " ".join(f"{f'H {b}':>16}" for b in bins)
        lines.append(header)
        lines.append("-" * len(header))
        for arm, rep in self.arms.items():
            cells = []
            for b in bins:
                m = rep.history_bins[b]
                cells.append(f"{num(m.mfr):>8} (N={m.n})".rjust(16))
            lines.append(f"{arm:<18} " + " ".join(cells))
        return "\n".join(lines)


def _mean(values: Sequence[float]) -> float | None:
    if not values:
        return None
    return math.fsum(values) / len(values)


def build_report(
    events: Sequence[SessionEvent], parse_diagnostics: int = 0
) -> MetricReport:
    """Compute the full metric suite over parsed log events."""
    sessions = group_by_session(events)
    runs = reconstruct_runs(events)

    arm_values = [a.value for a in ExperimentArm]
    sessions_by_arm: dict[str, list[list[SessionEvent]]] = {a: [] for a in arm_values}
    for evs in sessions.values():
        arm = evs[0].arm
        sessions_by_arm.setdefault(arm, []).append(evs)
    runs_by_arm: dict[str, list[StratagemRunRecord]] = {a: [] for a in arm_values}
    for run in runs:
        runs_by_arm.setdefault(run.arm, []).append(run)

    excluded_sessions = sum(
        1
        for evs in sessions.values()
        if sum(1 for e in evs if e.event_type == "signal") > SIGNAL_CAP_PER_SESSION
    )
    local = usefulness(sessions.values(), "local")
    global_ = usefulness(sessions.values(), "global")

    arm_reports: dict[str, ArmReport] = {}
    for arm in sorted(runs_by_arm):
        arm_sessions = sessions_by_arm.get(arm, [])
        arm_runs = runs_by_arm[arm]
        with_stratagem = [
            evs
            for evs in arm_sessions
            if any(e.event_type == "browse_stratagem" for e in evs)
        ]
        dwell_values = [dwell_time(evs) for evs in with_stratagem]
        dwell_values = [v for v in dwell_values if v is not None]
        dwell_kept = [v for v in dwell_values if v <= DWELL_CAP_SECONDS]
        arm_reports[arm] = ArmReport(
            sessions=len(arm_sessions),
            sessions_with_stratagem=len(with_stratagem),
            stratagem_runs=len(arm_runs),
            document_views_from_stratagem=sum(len(r.clicked_ranks) for r in arm_runs),
            clicked_runs=sum(1 for r in arm_runs if r.clicked_ranks),
            mean_interactions_per_session=_mean([len(evs) for evs in with_stratagem]),
            mean_dwell_seconds=_mean(dwell_kept),
            dwell_excluded_sessions=len(dwell_values) - len(dwell_kept),
            mfr=mean_first_relevant(arm_runs, min_result_size=1),
            mfr_ge20=mean_first_relevant(arm_runs, min_result_size=MIN_LARGE_RESULT_SIZE),
            history_bins=segment_by_history(arm_runs),
            local_usefulness=local.get(arm, 0),
            global_usefulness=global_.get(arm, 0),
        )

    samples = {
        arm: [
            r.first_clicked_rank
            for r in runs_by_arm[arm]
            if r.first_clicked_rank is not None and r.first_clicked_rank <= MAX_CLICK_RANK
        ]
        for arm in arm_reports
    }
    pair_labels = [
        (ExperimentArm.A_BASELINE.value, ExperimentArm.B_SIMILARITY.value),
        (ExperimentArm.A_BASELINE.value, ExperimentArm.C_SESSION_CONTEXT.value),
        (ExperimentArm.B_SIMILARITY.value, ExperimentArm.C_SESSION_CONTEXT.value),
    ]
    tests: list[tuple[str, MannWhitneyResult]] = []
    for left, right in pair_labels:
        if samples.get(left) and samples.get(right):
            tests.append(
                (f"{left} vs {right}", mann_whitney_u(samples[left], samples[right]))
            )
    decisions = bonferroni([t.p for _, t in tests], BONFERRONI_COMPARISONS)
    pairwise = tuple(
        PairwiseTest(label, t.u, t.p, t.r, t.n_a, t.n_b, sig)
        for (label, t), sig in zip(tests, decisions.significant)
    )

    return MetricReport(
        arms=arm_reports,
        pairwise=pairwise,
        bonferroni_threshold=decisions.threshold,
        usefulness_excluded_sessions=excluded_sessions,
        total_sessions=len(sessions),
        total_events=len(events),
        parse_diagnostics=parse_diagnostics,
        notes=("first-click N counts stratagem runs, not sessions",),
    )


def evaluate_log(source: str | Path | IO[str] | Iterable[str]) -> MetricReport:
    """Parse a transaction log and build its metric report."""
    parsed = parse_log(source)
    return build_report(parsed.events, parse_diagnostics=len(parsed.diagnostics))
