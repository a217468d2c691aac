"""Pause detection and the process digest: a compressed, time-ordered summary
of how the essay evolved, small enough to sit inside a prompt.

The digest walks one merged sequence of content states (keystroke logs,
snapshots, and the final text, deduplicated on equal content), diffs each
consecutive pair, and interleaves pauses from the raw event stream. Totals
are computed before compression and never change afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..capture import KeyEvent, KeystrokeLog, Snapshot
from ..errors import SessionMismatch
from .diff import EditOp, detect_moves, word_diff

DEFAULT_PAUSE_THRESHOLD_MS = 10_000
DEFAULT_DIGEST_BUDGET = 40


def format_mmss(t_ms: int) -> str:
    """Render a session-clock instant as mm:ss (minutes may exceed 59)."""
    return f"{t_ms // 60_000:02d}:{(t_ms % 60_000) // 1_000:02d}"


@dataclass(frozen=True)
class Pause:
    start_ms: int
    end_ms: int

    @property
    def duration_ms(self) -> int:
        return self.end_ms - self.start_ms


def detect_pauses(events: list[KeyEvent],
                  threshold_ms: int = DEFAULT_PAUSE_THRESHOLD_MS) -> list[Pause]:
    """One pause per consecutive keydown pair separated by >= threshold_ms."""
    downs = [e.t_ms for e in events if e.kind == "keydown"]
    return [
        Pause(start_ms=t0, end_ms=t1)
        for t0, t1 in zip(downs, downs[1:])
        if t1 - t0 >= threshold_ms
    ]


@dataclass(frozen=True)
class DigestEntry:
    """One line of the timeline. ``merged_count`` tracks how many primitive
    entries were folded into this one during compression; ``pause_ms`` is the
    summed idle time for pause entries (0 otherwise)."""

    kind: str  # pause | revision_burst | snapshot_delta | milestone
    window: tuple[int, int]
    summary: str
    ops: tuple[EditOp, ...] = ()
    merged_count: int = 1
    pause_ms: int = 0

    def token_count(self) -> int:
        return sum(op.token_count() for op in self.ops)


@dataclass(frozen=True)
class DigestTotals:
    pause_count: int = 0
    burst_count: int = 0
    insert_tokens: int = 0
    delete_tokens: int = 0
    move_count: int = 0


@dataclass(frozen=True)
class ProcessDigest:
    session_id: str
    entries: tuple[DigestEntry, ...]
    totals: DigestTotals
    pause_threshold_ms: int = DEFAULT_PAUSE_THRESHOLD_MS


def _op_phrases(ops: tuple[EditOp, ...]) -> str:
    inserted = sum(len(op.tokens) for op in ops if op.kind == "insert")
    deleted = sum(op.src_span[1] - op.src_span[0] for op in ops if op.kind == "delete")
    for op in ops:
        if op.kind == "substitute":
            deleted += op.src_span[1] - op.src_span[0]
            inserted += len(op.tokens)
    moves = [op for op in ops if op.kind == "move"]
    parts = []
    if inserted:
        parts.append(f"added {inserted} word{'s' if inserted != 1 else ''}")
    if deleted:
        parts.append(f"removed {deleted} word{'s' if deleted != 1 else ''}")
    for mv in moves:
        parts.append(f"moved a {len(mv.tokens)}-word block")
    return ", ".join(parts) if parts else "no net word change"


def _pause_summary(window: tuple[int, int], count: int, total_ms: int) -> str:
    if count == 1:
        secs = total_ms / 1000
        return f"Pause of {secs:.0f}s starting at {format_mmss(window[0])}"
    return (f"{count} pauses between {format_mmss(window[0])} and "
            f"{format_mmss(window[1])} totaling {total_ms / 1000:.0f}s")


def _revision_summary(kind: str, window: tuple[int, int],
                      ops: tuple[EditOp, ...], label: str, count: int) -> str:
    prefix = {
        "revision_burst": f"Revision at {format_mmss(window[1])}",
        "snapshot_delta": f"{label} at {format_mmss(window[1])}",
    }[kind]
    if count > 1:
        prefix = (f"{count} revisions between {format_mmss(window[0])} "
                  f"and {format_mmss(window[1])}")
    return f"{prefix}: {_op_phrases(ops)}"


def _merge_pair(a: DigestEntry, b: DigestEntry) -> DigestEntry:
    window = (min(a.window[0], b.window[0]), max(a.window[1], b.window[1]))
    count = a.merged_count + b.merged_count
    if a.kind == "pause":
        total = a.pause_ms + b.pause_ms
        summary = _pause_summary(window, count, total)
        return DigestEntry("pause", window, summary, (), count, total)
    ops = a.ops + b.ops
    summary = _revision_summary(a.kind, window, ops, "", count)
    return DigestEntry(a.kind, window, summary, ops, count)


def compress_entries(entries: list[DigestEntry], budget: int) -> list[DigestEntry]:
    """Shrink the timeline to at most ``budget`` entries.

    Adjacent same-kind entries merge first (union window, pooled ops); if the
    list is still too long, revision entries are dropped smallest token count
    first. Pauses are only ever merged, never dropped, except that repeated
    rounds may merge newly adjacent pauses freed up by drops.
    """
    if budget < 1:
        raise ValueError("digest budget must be at least 1")
    entries = list(entries)
    while len(entries) > budget:
        merged = _merge_adjacent(entries, budget)
        if len(merged) <= budget:
            return merged
        dropped = _drop_smallest_revision(merged)
        if dropped is None:
            # Only pauses/milestones left but none adjacent: drop the
            # shortest pause so the budget still holds.
            dropped = _drop_shortest_pause(merged)
        if dropped is None or len(dropped) == len(merged):
            return merged
        entries = dropped
    return entries


def _merge_adjacent(entries: list[DigestEntry], budget: int) -> list[DigestEntry]:
    out = list(entries)
    changed = True
    while changed and len(out) > budget:
        changed = False
        for idx in range(len(out) - 1):
            if out[idx].kind == out[idx + 1].kind:
                out[idx:idx + 2] = [_merge_pair(out[idx], out[idx + 1])]
                changed = True
                break
    return out


def _drop_smallest_revision(entries: list[DigestEntry]) -> list[DigestEntry] | None:
    revisions = [(entry.token_count(), idx) for idx, entry in enumerate(entries)
                 if entry.kind in ("revision_burst", "snapshot_delta")]
    if not revisions:
        return None
    # Smallest edit goes first; later entries break ties so early history wins.
    _, drop_idx = min(revisions, key=lambda pair: (pair[0], -pair[1]))
    return entries[:drop_idx] + entries[drop_idx + 1:]


def _drop_shortest_pause(entries: list[DigestEntry]) -> list[DigestEntry] | None:
    pauses = [(entry.pause_ms, idx) for idx, entry in enumerate(entries)
              if entry.kind == "pause"]
    if not pauses:
        return None
    _, drop_idx = min(pauses, key=lambda pair: (pair[0], -pair[1]))
    return entries[:drop_idx] + entries[drop_idx + 1:]


def _content_states(logs: list[KeystrokeLog], snapshots: list[Snapshot],
                    final: str, t_final: int) -> list[tuple[int, str, str, str]]:
    """Merged (t_ms, content, kind, label) sequence, deduped on equal content."""
    states: list[tuple[int, int, str, str, str]] = []
    for log in logs:
        states.append((log.finalized_at_ms, 0, log.content, "revision_burst", ""))
    for snap in snapshots:
        states.append((snap.t_ms, 1, snap.content, "snapshot_delta",
                       f"Snapshot {snap.index}"))
    states.sort(key=lambda s: (s[0], s[1]))
    states.append((t_final, 2, final, "revision_burst", ""))

    deduped: list[tuple[int, str, str, str]] = []
    for t_ms, _, content, kind, label in states:
        if deduped and deduped[-1][1] == content:
            continue
        deduped.append((t_ms, content, kind, label))
    return deduped


def _check_single_session(logs: list[KeystrokeLog], snapshots: list[Snapshot],
                          events: list[KeyEvent]) -> None:
    """Inputs from one session are internally ordered; violations indicate a
    mix of sessions (the core types carry no session id to compare)."""
    last = None
    for log in logs:
        if log.began_at_ms > log.finalized_at_ms:
            raise SessionMismatch(f"log {log.log_id} has inverted time bounds")
        if last is not None and log.finalized_at_ms < last:
            raise SessionMismatch("keystroke logs are not time-ordered")
        last = log.finalized_at_ms
    for idx, snap in enumerate(snapshots):
        if snap.index != idx + 1:
            raise SessionMismatch(
                f"snapshot indices not sequential from 1: saw {snap.index} "
                f"at position {idx}")
    last_seq = None
    last_t = None
    for event in events:
        if last_seq is not None and event.seq <= last_seq:
            raise SessionMismatch("event seq not strictly increasing")
        if last_t is not None and event.t_ms < last_t:
            raise SessionMismatch("event times not non-decreasing")
        last_seq, last_t = event.seq, event.t_ms


def build_digest(logs: list[KeystrokeLog], snapshots: list[Snapshot],
                 events: list[KeyEvent], final: str,
                 budget: int = DEFAULT_DIGEST_BUDGET, *,
                 session_id: str = "",
                 pause_threshold_ms: int = DEFAULT_PAUSE_THRESHOLD_MS,
                 move_min_tokens: int = 5,
                 move_min_similarity: float = 0.8) -> ProcessDigest:
    """Derive the revision timeline for one session and compress it."""
    _check_single_session(logs, snapshots, events)

    t_final = max(
        [log.finalized_at_ms for log in logs]
        + [snap.t_ms for snap in snapshots]
        + [event.t_ms for event in events]
        + [0]
    )
    states = _content_states(logs, snapshots, final, t_final)

    entries: list[DigestEntry] = []
    totals_insert = totals_delete = totals_moves = burst_count = 0
    for (t_prev, prev, _, _), (t_cur, cur, kind, label) in zip(states, states[1:]):
        window = (t_prev, t_cur)
        ops = detect_moves(word_diff(prev, cur, window=window),
                           min_tokens=move_min_tokens,
                           min_similarity=move_min_similarity)
        if not ops:
            continue
        for op in ops:
            if op.kind == "insert":
                totals_insert += len(op.tokens)
            elif op.kind == "delete":
                totals_delete += op.src_span[1] - op.src_span[0]
            elif op.kind == "substitute":
                totals_insert += len(op.tokens)
                totals_delete += op.src_span[1] - op.src_span[0]
            else:
                totals_moves += 1
        if kind == "revision_burst":
            burst_count += 1
        summary = _revision_summary(kind, window, tuple(ops), label, 1)
        entries.append(DigestEntry(kind, window, summary, tuple(ops)))

    pauses = detect_pauses(events, pause_threshold_ms)
    for pause in pauses:
        window = (pause.start_ms, pause.end_ms)
        entries.append(DigestEntry("pause", window,
                                   _pause_summary(window, 1, pause.duration_ms),
                                   pause_ms=pause.duration_ms))

    entries.sort(key=lambda e: (e.window[0], e.window[1], e.kind))
    totals = DigestTotals(
        pause_count=len(pauses),
        burst_count=burst_count,
        insert_tokens=totals_insert,
        delete_tokens=totals_delete,
        move_count=totals_moves,
    )
    return ProcessDigest(
        session_id=session_id,
        entries=tuple(compress_entries(entries, budget)),
        totals=totals,
        pause_threshold_ms=pause_threshold_ms,
    )


def truncate_digest(digest: ProcessDigest, budget: int) -> ProcessDigest:
    """Re-compress an existing digest to a smaller entry budget."""
    return replace(digest,
                   entries=tuple(compress_entries(list(digest.entries), budget)))


def digest_to_dict(digest: ProcessDigest) -> dict:
    """JSON-ready view with stable field order; times in ms plus mm:ss."""
    return {
        "session_id": digest.session_id,
        "pause_threshold_ms": digest.pause_threshold_ms,
        "totals": {
            "pause_count": digest.totals.pause_count,
            "burst_count": digest.totals.burst_count,
            "insert_tokens": digest.totals.insert_tokens,
            "delete_tokens": digest.totals.delete_tokens,
            "move_count": digest.totals.move_count,
        },
        "entries": [
            {
                "kind": entry.kind,
                "from_ms": entry.window[0],
                "to_ms": entry.window[1],
                "from": format_mmss(entry.window[0]),
                "to": format_mmss(entry.window[1]),
                "summary": entry.summary,
            }
            for entry in digest.entries
        ],
    }
