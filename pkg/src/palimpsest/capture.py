"""Backspace-burst segmentation of a raw key-event stream into content logs,
plus snapshot cadence validation.

The machine has two phases. While ``typing``, the first backspace keydown
finalizes the running log using the full editor text the client attached to
that keydown, and opens a *burst*. The burst absorbs further backspace
activity until some event arrives at least ``DEBOUNCE_MS`` after the last
backspace keyup; closure is evaluated lazily at that event (or at submit),
and the next log is back-dated to ``keyup + DEBOUNCE_MS``. Repeated keydowns
with no interleaved keyup (held-key auto-repeat) stay in the same burst.
A finalization whose content equals the previously finalized content is
suppressed, so consecutive logs never repeat.

States are immutable values: ``ingest_event`` returns a new state, which
makes replay a pure function and lets the service rebuild capture state from
persisted events after a restart.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from .errors import CadenceError, OrderError, ProtocolError, SequenceError

DEBOUNCE_MS = 3_000
SNAPSHOT_INTERVAL_MS = 180_000
SNAPSHOT_TOLERANCE_MS = 15_000

EVENT_KINDS = ("keydown", "keyup")
KEY_CLASSES = ("backspace", "character", "enter", "other")


@dataclass(frozen=True)
class KeyEvent:
    """One raw key event on the session clock.

    ``content`` is the full editor text and must be present exactly when the
    event is a backspace keydown (captured before the deletion applies).
    """

    seq: int
    kind: str
    key: str
    t_ms: int
    content: Optional[str] = None


@dataclass(frozen=True)
class KeystrokeLog:
    """Full typed text saved when a revision episode began (or at submit)."""

    log_id: str
    content: str
    began_at_ms: int
    finalized_at_ms: int
    event_count: int


@dataclass(frozen=True)
class Snapshot:
    """Full editor content captured on the 3-minute cadence."""

    index: int
    t_ms: int
    content: str


@dataclass(frozen=True)
class CaptureState:
    """Immutable machine state between events.

    ``events_in_log`` counts events applied since the last finalization and
    becomes the finalized log's ``event_count`` (the finalizing event
    included); it resets on every finalization, emitted or suppressed.
    """

    phase: str = "typing"  # typing | in_burst
    current_log_began_at: int = 0
    last_backspace_keyup: Optional[int] = None
    last_finalized_content: Optional[str] = None
    events_in_log: int = 0
    logs_emitted: int = 0
    last_seq: Optional[int] = None
    last_t_ms: int = 0


def _check_order(state: CaptureState, seq: Optional[int], t_ms: int) -> None:
    if seq is not None:
        if seq < 0:
            raise OrderError(f"seq must be non-negative, got {seq}")
        if state.last_seq is not None and seq <= state.last_seq:
            raise OrderError(f"seq regressed: {seq} after {state.last_seq}")
    if t_ms < state.last_t_ms:
        raise OrderError(f"t_ms regressed: {t_ms} after {state.last_t_ms}")


def _finalize_log(state: CaptureState, content: str, began_at: int,
                  finalized_at: int, extra_events: int) -> tuple[CaptureState, list[KeystrokeLog]]:
    """Close the running log; suppress it if its content repeats the last one."""
    emitted: list[KeystrokeLog] = []
    count = state.events_in_log + extra_events
    if content != state.last_finalized_content:
        log = KeystrokeLog(
            log_id=f"log-{state.logs_emitted + 1:04d}",
            content=content,
            began_at_ms=began_at,
            finalized_at_ms=finalized_at,
            event_count=count,
        )
        emitted.append(log)
        state = replace(state, logs_emitted=state.logs_emitted + 1)
    state = replace(state, last_finalized_content=content, events_in_log=0)
    return state, emitted


def ingest_event(state: CaptureState, event: KeyEvent) -> tuple[CaptureState, list[KeystrokeLog]]:
    """Apply one event to the machine; returns the new state and any logs it
    finalized (at most one per event)."""
    if event.kind not in EVENT_KINDS:
        raise ProtocolError(f"unknown event kind: {event.kind!r}")
    if event.key not in KEY_CLASSES:
        raise ProtocolError(f"unknown key class: {event.key!r}")
    _check_order(state, event.seq, event.t_ms)

    is_backspace_down = event.kind == "keydown" and event.key == "backspace"
    if is_backspace_down and event.content is None:
        raise ProtocolError(f"backspace keydown (seq {event.seq}) lacks content payload")
    if not is_backspace_down and event.content is not None:
        raise ProtocolError(f"event seq {event.seq} must not carry content")

    # Lazy burst closure: any event at or past the debounce horizon first
    # returns the machine to typing, back-dating the new log's origin.
    if (state.phase == "in_burst"
            and state.last_backspace_keyup is not None
            and event.t_ms - state.last_backspace_keyup >= DEBOUNCE_MS):
        state = replace(
            state,
            phase="typing",
            current_log_began_at=state.last_backspace_keyup + DEBOUNCE_MS,
            last_backspace_keyup=None,
        )

    emitted: list[KeystrokeLog] = []
    if is_backspace_down:
        if state.phase == "typing":
            state, emitted = _finalize_log(
                state, event.content, state.current_log_began_at, event.t_ms,
                extra_events=1,
            )
            state = replace(state, phase="in_burst", last_backspace_keyup=None)
        else:
            # Same burst: within the debounce window, or held-key auto-repeat
            # (no keyup recorded yet).
            state = replace(state, events_in_log=state.events_in_log + 1)
    else:
        state = replace(state, events_in_log=state.events_in_log + 1)
        if event.kind == "keyup" and event.key == "backspace" and state.phase == "in_burst":
            state = replace(state, last_backspace_keyup=event.t_ms)

    state = replace(state, last_seq=event.seq, last_t_ms=event.t_ms)
    return state, emitted


def finalize_session(state: CaptureState, final_content: str, t_ms: int) -> list[KeystrokeLog]:
    """Close any open burst and emit the trailing log for the final text.

    The trailing log is suppressed when it would repeat the last finalized
    content, and when nothing was ever finalized and the final text is empty.
    """
    _check_order(state, None, t_ms)

    if state.phase == "in_burst":
        if state.last_backspace_keyup is not None:
            began = min(state.last_backspace_keyup + DEBOUNCE_MS, t_ms)
        else:
            began = t_ms  # burst never saw a keyup; it closes at submit
        state = replace(state, phase="typing", current_log_began_at=began,
                        last_backspace_keyup=None)

    if final_content == "" and state.last_finalized_content is None:
        return []
    _, emitted = _finalize_log(state, final_content, state.current_log_began_at,
                               t_ms, extra_events=0)
    return emitted


def replay(events: list[KeyEvent], final: str, t_end: int) -> list[KeystrokeLog]:
    """Fold the whole stream through the machine; pure function of its inputs."""
    state = CaptureState()
    logs: list[KeystrokeLog] = []
    for event in events:
        state, emitted = ingest_event(state, event)
        logs.extend(emitted)
    logs.extend(finalize_session(state, final, t_end))
    return logs


def validate_snapshot(expected_next_index: int, snap: Snapshot,
                      tolerance_ms: int = SNAPSHOT_TOLERANCE_MS) -> None:
    """Accept a snapshot iff its index is the next expected one and its time
    sits within ``tolerance_ms`` of the 3-minute mark for that index."""
    if tolerance_ms < 0:
        raise ValueError("tolerance_ms must be non-negative")
    if snap.index != expected_next_index:
        raise SequenceError(
            f"expected snapshot index {expected_next_index}, got {snap.index}"
        )
    target = SNAPSHOT_INTERVAL_MS * snap.index
    if abs(snap.t_ms - target) > tolerance_ms:
        raise CadenceError(
            f"snapshot {snap.index} at t={snap.t_ms} ms is outside "
            f"±{tolerance_ms} ms of the {target} ms mark"
        )
