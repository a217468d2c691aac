"""Application factory and routes.

Per-session work happens under a per-session lock; distinct sessions never
contend. All durable state lives in the append-only store, so a restarted
process rebuilds each session by replaying its persisted events through the
same capture code that ingested them live.
"""

from __future__ import annotations

import random
import threading
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

from fastapi import Body, FastAPI, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import ValidationError
from starlette.background import BackgroundTask

from .. import capture as cap
from ..analytics.digest import build_digest
from ..errors import (
    BudgetError,
    CadenceError,
    ConfigError,
    DuplicateError,
    EmptyError,
    OrderError,
    PalimpsestError,
    ParseError,
    ProtocolError,
    ProviderError,
    RangeError,
    SequenceError,
    SessionMismatch,
    StateError,
)
from ..feedback import ContextPinger, FeedbackBundle, RemoteProvider, StubProvider, generate_feedback
from ..feedback.report import report_to_dict
from ..session import (
    DEFAULT_DURATION_MS,
    Session,
    SessionConfig,
    Topic,
    acknowledge_consent,
    advance_state,
    create_session,
    load_topic_bank,
)
from ..store import SessionStore
from ..survey import SurveyResponse, aggregate, aggregate_to_dict, export_plot_data, load_instrument, record_response
from . import schemas


@dataclass
class ServiceConfig:
    data_dir: str | Path
    provider: object = "stub"  # "stub" | "remote" | provider instance
    topic_bank_path: str | Path | None = None
    duration_ms: int = DEFAULT_DURATION_MS
    pause_threshold_ms: int = 10_000
    pings_enabled: bool = False
    ping_interval_ms: int = 5_000
    digest_budget: int = 40
    prompt_budget_tokens: int = 6_000
    snapshot_tolerance_ms: int = cap.SNAPSHOT_TOLERANCE_MS
    event_grace_ms: int = 30_000
    frontend_dir: str | Path | None = None
    rng_seed: int | None = None


@dataclass
class _Runtime:
    """In-memory view of one session, rebuildable from the store."""

    session: Session
    lock: threading.Lock = field(default_factory=threading.Lock)
    capture: cap.CaptureState = field(default_factory=cap.CaptureState)
    events: list[cap.KeyEvent] = field(default_factory=list)
    logs: list[cap.KeystrokeLog] = field(default_factory=list)
    snapshots: list[cap.Snapshot] = field(default_factory=list)
    last_known_text: str = ""


_STATUS_BY_ERROR: tuple[tuple[type, int], ...] = (
    (OrderError, 409),
    (SequenceError, 409),
    (StateError, 409),
    (DuplicateError, 409),
    (ProtocolError, 422),
    (CadenceError, 422),
    (RangeError, 422),
    (EmptyError, 404),
    (ProviderError, 502),  # covers transient subclass after retries
    (ParseError, 500),
    (SessionMismatch, 500),
    (BudgetError, 500),
    (ConfigError, 500),
)


def _status_for(exc: PalimpsestError) -> int:
    for klass, status in _STATUS_BY_ERROR:
        if isinstance(exc, klass):
            return status
    return 500


def load_guidelines() -> str:
    return (resources.files("palimpsest.data").joinpath("guidelines.md")
            .read_text(encoding="utf-8"))


def _session_to_payload(session: Session) -> dict:
    return {
        "session_id": session.session_id,
        "participant_id": session.participant_id,
        "topic": {
            "topic_id": session.topic.topic_id,
            "category": session.topic.category,
            "prompt_text": session.topic.prompt_text,
        },
        "started_at": session.started_at.isoformat(),
        "duration_ms": session.duration_ms,
        "state": session.state,
        "consent_acknowledged": session.consent_acknowledged,
    }


def _session_from_payload(payload: dict) -> Session:
    topic = payload["topic"]
    return Session(
        session_id=payload["session_id"],
        participant_id=payload["participant_id"],
        topic=Topic(topic_id=topic["topic_id"], category=topic["category"],
                    prompt_text=topic["prompt_text"]),
        started_at=datetime.fromisoformat(payload["started_at"]),
        duration_ms=payload["duration_ms"],
        state=payload["state"],
        consent_acknowledged=payload["consent_acknowledged"],
    )


def _event_to_payload(event: cap.KeyEvent) -> dict:
    payload = {"seq": event.seq, "kind": event.kind, "key": event.key,
               "t_ms": event.t_ms}
    if event.content is not None:
        payload["content"] = event.content
    return payload


def _event_from_payload(payload: dict) -> cap.KeyEvent:
    return cap.KeyEvent(seq=payload["seq"], kind=payload["kind"],
                        key=payload["key"], t_ms=payload["t_ms"],
                        content=payload.get("content"))


def _log_to_payload(log: cap.KeystrokeLog) -> dict:
    return {"log_id": log.log_id, "content": log.content,
            "began_at_ms": log.began_at_ms,
            "finalized_at_ms": log.finalized_at_ms,
            "event_count": log.event_count}


def _snapshot_to_payload(snap: cap.Snapshot) -> dict:
    return {"index": snap.index, "t_ms": snap.t_ms, "content": snap.content}


def _make_provider(spec: object):
    if spec == "stub":
        return StubProvider()
    if spec == "remote":
        return RemoteProvider()
    if isinstance(spec, str):
        raise ConfigError(f"unknown provider {spec!r}")
    return spec


def create_app(config: ServiceConfig) -> FastAPI:
    store = SessionStore(config.data_dir)
    bank = load_topic_bank(config.topic_bank_path)
    guidelines_text = load_guidelines()
    instrument = load_instrument()
    provider = _make_provider(config.provider)
    pinger = ContextPinger(provider, enabled=config.pings_enabled,
                           min_interval_ms=config.ping_interval_ms)

    seed_source = (random.Random(config.rng_seed)
                   if config.rng_seed is not None else None)

    runtimes: dict[str, _Runtime] = {}
    registry_lock = threading.Lock()

    app = FastAPI(title="palimpsest", docs_url=None, redoc_url=None)
    app.state.store = store
    app.state.provider = provider
    app.state.pinger = pinger

    def _rebuild(session_id: str) -> _Runtime:
        session_record = store.latest(session_id, "session")
        if session_record is None:
            raise KeyError(f"unknown session {session_id!r}")
        session = _session_from_payload(session_record.payload)
        runtime = _Runtime(session=session)
        for record in store.records(session_id, "key_event"):
            event = _event_from_payload(record.payload)
            runtime.capture, emitted = cap.ingest_event(runtime.capture, event)
            runtime.events.append(event)
            runtime.logs.extend(emitted)
            if event.content is not None:
                runtime.last_known_text = event.content
        for record in store.records(session_id, "snapshot"):
            snap = cap.Snapshot(**record.payload)
            runtime.snapshots.append(snap)
            if not runtime.events or snap.t_ms >= runtime.events[-1].t_ms:
                runtime.last_known_text = snap.content
        if session.state in ("submitted", "feedback_ready", "surveyed"):
            final_record = store.latest(session_id, "final_essay")
            if final_record is not None:
                runtime.logs.extend(cap.finalize_session(
                    runtime.capture, final_record.payload["content"],
                    final_record.payload["t_ms"]))
                runtime.last_known_text = final_record.payload["content"]
        return runtime

    def _get_runtime(session_id: str) -> _Runtime:
        with registry_lock:
            runtime = runtimes.get(session_id)
            if runtime is None:
                runtime = _rebuild(session_id)
                runtimes[session_id] = runtime
            return runtime

    def _persist_session(runtime: _Runtime) -> None:
        store.append(runtime.session.session_id, "session",
                     _session_to_payload(runtime.session))

    def _with_ping_background(model, status_code: int = 200):
        background = None
        if pinger.enabled and pinger.pending:
            background = BackgroundTask(pinger.flush)
        return JSONResponse(content=model.model_dump(), status_code=status_code,
                            background=background)

    @app.exception_handler(PalimpsestError)
    def _domain_error(_, exc: PalimpsestError):
        body = {"error": type(exc).__name__, "detail": str(exc)}
        raw = getattr(exc, "raw_text", None)
        if raw is not None:
            body["raw_text"] = raw
        return JSONResponse(status_code=_status_for(exc), content=body)

    @app.exception_handler(KeyError)
    def _not_found(_, exc: KeyError):
        return JSONResponse(status_code=404,
                            content={"error": "NotFound",
                                     "detail": str(exc.args[0]) if exc.args
                                     else "not found"})

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.post("/sessions", response_model=schemas.SessionCreatedOut,
              status_code=201)
    def create_session_route():
        seed = seed_source.randrange(2 ** 32) if seed_source else None
        session = create_session(
            bank, rng_seed=seed,
            config=SessionConfig(duration_ms=config.duration_ms))
        runtime = _Runtime(session=session)
        with registry_lock:
            runtimes[session.session_id] = runtime
        _persist_session(runtime)
        return schemas.SessionCreatedOut(
            session_id=session.session_id,
            participant_id=session.participant_id,
            topic=schemas.TopicOut(topic_id=session.topic.topic_id,
                                   category=session.topic.category,
                                   prompt_text=session.topic.prompt_text),
            guidelines_text=guidelines_text,
            duration_ms=session.duration_ms,
        )

    @app.get("/sessions/{session_id}", response_model=schemas.SessionOut)
    def get_session(session_id: str):
        runtime = _get_runtime(session_id)
        with runtime.lock:
            session = runtime.session
            return schemas.SessionOut(
                session_id=session.session_id,
                state=session.state,
                topic=schemas.TopicOut(topic_id=session.topic.topic_id,
                                       category=session.topic.category,
                                       prompt_text=session.topic.prompt_text),
                duration_ms=session.duration_ms,
                consent_acknowledged=session.consent_acknowledged,
                last_seq=runtime.capture.last_seq,
                snapshot_count=len(runtime.snapshots),
            )

    @app.post("/sessions/{session_id}/consent", response_model=schemas.StateOut)
    def consent(session_id: str, body: schemas.ConsentIn):
        if not body.acknowledged:
            raise ProtocolError("consent must be acknowledged to proceed")
        runtime = _get_runtime(session_id)
        with runtime.lock:
            session = acknowledge_consent(runtime.session)
            session = advance_state(session, "writing")
            runtime.session = session
            _persist_session(runtime)
            return schemas.StateOut(session_id=session_id, state=session.state)

    @app.post("/sessions/{session_id}/events",
              response_model=schemas.EventBatchOut)
    def ingest_events(session_id: str, body: bytes = Body(media_type="application/x-ndjson")):
        lines = [line for line in body.decode("utf-8").splitlines()
                 if line.strip()]
        try:
            models = [schemas.KeyEventIn.model_validate_json(line)
                      for line in lines]
        except ValidationError as exc:
            raise ProtocolError(f"malformed event batch: {exc.errors()[0]['msg']}") from exc
        for first, second in zip(models, models[1:]):
            if second.seq <= first.seq:
                raise OrderError(
                    f"batch not sorted: seq {second.seq} after {first.seq}")
            if second.t_ms < first.t_ms:
                raise OrderError(
                    f"batch time regression: {second.t_ms} after {first.t_ms}")

        runtime = _get_runtime(session_id)
        with runtime.lock:
            if runtime.session.state != "writing":
                raise StateError(
                    f"events require state 'writing', session is "
                    f"{runtime.session.state!r}")
            last_seq = runtime.capture.last_seq
            fresh = [m for m in models
                     if last_seq is None or m.seq > last_seq]
            limit = runtime.session.duration_ms + config.event_grace_ms
            for model in fresh:
                if model.t_ms > limit:
                    raise ProtocolError(
                        f"event at t={model.t_ms} is beyond the session "
                        f"duration plus grace ({limit})")
            if fresh and fresh[0].t_ms < runtime.capture.last_t_ms:
                raise OrderError(
                    f"batch time regression: {fresh[0].t_ms} before "
                    f"{runtime.capture.last_t_ms}")
            finalized = 0
            for model in fresh:
                event = cap.KeyEvent(seq=model.seq, kind=model.kind,
                                     key=model.key, t_ms=model.t_ms,
                                     content=model.content)
                runtime.capture, emitted = cap.ingest_event(runtime.capture,
                                                            event)
                store.append(session_id, "key_event", _event_to_payload(event))
                runtime.events.append(event)
                if event.content is not None:
                    runtime.last_known_text = event.content
                for log in emitted:
                    store.append(session_id, "keystroke_log",
                                 _log_to_payload(log))
                    runtime.logs.append(log)
                    finalized += 1
            if fresh:
                pinger.ping(runtime.last_known_text, fresh[-1].t_ms,
                            last_event={"seq": fresh[-1].seq,
                                        "kind": fresh[-1].kind,
                                        "key": fresh[-1].key})
            result = schemas.EventBatchOut(accepted=len(fresh),
                                           logs_finalized=finalized)
        return _with_ping_background(result)

    @app.post("/sessions/{session_id}/snapshots",
              response_model=schemas.SnapshotOut, status_code=202)
    def ingest_snapshot(session_id: str, body: schemas.SnapshotIn):
        runtime = _get_runtime(session_id)
        with runtime.lock:
            if runtime.session.state != "writing":
                raise StateError(
                    f"snapshots require state 'writing', session is "
                    f"{runtime.session.state!r}")
            snap = cap.Snapshot(index=body.index, t_ms=body.t_ms,
                                content=body.content)
            cap.validate_snapshot(len(runtime.snapshots) + 1, snap,
                                  tolerance_ms=config.snapshot_tolerance_ms)
            limit = runtime.session.duration_ms + config.event_grace_ms
            if snap.t_ms > limit:
                raise CadenceError(
                    f"snapshot at t={snap.t_ms} is beyond the session "
                    f"duration plus grace ({limit})")
            store.append(session_id, "snapshot", _snapshot_to_payload(snap))
            runtime.snapshots.append(snap)
            if not runtime.events or snap.t_ms >= runtime.events[-1].t_ms:
                runtime.last_known_text = snap.content
            pinger.ping(runtime.last_known_text, snap.t_ms,
                        last_event={"snapshot_index": snap.index})
            result = schemas.SnapshotOut(index=snap.index, t_ms=snap.t_ms)
        return _with_ping_background(result, status_code=202)

    @app.post("/sessions/{session_id}/submit", response_model=schemas.SubmitOut)
    def submit(session_id: str, body: schemas.SubmitIn):
        runtime = _get_runtime(session_id)
        with runtime.lock:
            session = runtime.session
            if session.state == "writing":
                t_submit = body.t_ms if body.t_ms is not None \
                    else runtime.capture.last_t_ms
                limit = session.duration_ms + config.event_grace_ms
                if t_submit > limit or t_submit < runtime.capture.last_t_ms:
                    raise ProtocolError(
                        f"submit time {t_submit} outside "
                        f"[{runtime.capture.last_t_ms}, {limit}]")
                trailing = cap.finalize_session(runtime.capture,
                                                body.final_text, t_submit)
                for log in trailing:
                    store.append(session_id, "keystroke_log",
                                 _log_to_payload(log))
                    runtime.logs.append(log)
                store.append(session_id, "final_essay",
                             {"content": body.final_text, "t_ms": t_submit})
                runtime.last_known_text = body.final_text
                session = advance_state(session, "submitted")
                runtime.session = session
                _persist_session(runtime)
                final_text = body.final_text
            elif session.state == "submitted":
                final_record = store.latest(session_id, "final_essay")
                final_text = final_record.payload["content"] \
                    if final_record else ""
                if body.final_text != final_text:
                    raise StateError(
                        "session already submitted with different text")
            else:
                raise StateError(
                    f"submit requires state 'writing', session is "
                    f"{session.state!r}")

            digest = build_digest(
                runtime.logs, runtime.snapshots, runtime.events, final_text,
                budget=config.digest_budget,
                session_id=session_id,
                pause_threshold_ms=config.pause_threshold_ms)
            bundle = FeedbackBundle(session=runtime.session, final=final_text,
                                    snapshots=tuple(runtime.snapshots),
                                    digest=digest)
            report = generate_feedback(
                bundle, provider, budget_tokens=config.prompt_budget_tokens)
            stored = store.append(session_id, "feedback",
                                  report_to_dict(report))
            runtime.session = advance_state(runtime.session, "feedback_ready")
            _persist_session(runtime)
            return schemas.SubmitOut(
                feedback_id=f"{session_id}/feedback/{stored.n}",
                state=runtime.session.state)

    @app.get("/sessions/{session_id}/feedback",
             response_model=schemas.FeedbackOut)
    def get_feedback(session_id: str):
        _get_runtime(session_id)  # 404 for unknown sessions
        record = store.latest(session_id, "feedback")
        if record is None:
            raise KeyError(f"no feedback for session {session_id!r} yet")
        return schemas.FeedbackOut.model_validate(record.payload)

    @app.get("/survey/instrument", response_model=schemas.InstrumentOut)
    def get_instrument():
        return schemas.InstrumentOut(
            version=instrument.version,
            likert_items=[schemas.SurveyItemOut(item_id=i.item_id, text=i.text)
                          for i in instrument.likert_items],
            open_items=[schemas.SurveyItemOut(item_id=i.item_id, text=i.text)
                        for i in instrument.open_items],
        )

    @app.post("/sessions/{session_id}/survey",
              response_model=schemas.SurveyOut, status_code=201)
    def post_survey(session_id: str, body: schemas.SurveyIn):
        runtime = _get_runtime(session_id)
        with runtime.lock:
            response = SurveyResponse(
                session_id=session_id,
                likert=tuple(body.likert),
                open=tuple(body.open),
                submitted_at=datetime.now(timezone.utc),
            )
            stored_id = record_response(response, store)
            runtime.session = replace(runtime.session, state="surveyed")
            return schemas.SurveyOut(stored_id=stored_id,
                                     state=runtime.session.state)

    @app.get("/admin/aggregate/survey",
             response_model=schemas.SurveyAggregateOut)
    def survey_aggregate():
        responses: list[SurveyResponse] = []
        for session_id in store.sessions():
            for record in store.records(session_id, "survey_response"):
                payload = record.payload
                responses.append(SurveyResponse(
                    session_id=payload["session_id"],
                    likert=tuple(payload["likert"]),
                    open=tuple(payload["open"]),
                    submitted_at=datetime.fromisoformat(
                        payload["submitted_at"]),
                ))
        agg = aggregate(responses, instrument)  # EmptyError -> 404
        return schemas.SurveyAggregateOut(
            aggregate=schemas.AggregateOut.model_validate(
                aggregate_to_dict(agg)),
            plot_data_csv=export_plot_data(agg),
        )

    @app.get("/sessions/{session_id}/export")
    def export_session(session_id: str):
        _get_runtime(session_id)
        return Response(content=store.export_bundle(session_id),
                        media_type="application/x-ndjson")

    @app.post("/admin/import", response_model=schemas.ImportOut,
              status_code=201)
    def import_session(body: bytes = Body(media_type="application/x-ndjson")):
        session_id = store.import_bundle(body)
        return schemas.ImportOut(session_id=session_id)

    if config.frontend_dir is not None and Path(config.frontend_dir).is_dir():
        app.mount("/app", StaticFiles(directory=config.frontend_dir,
                                      html=True), name="app")

    return app
