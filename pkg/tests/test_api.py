"""HTTP service: lifecycle routes, event ingestion, feedback, survey,
export/import, and crash-restart rebuilds."""

import json

import pytest
from fastapi.testclient import TestClient

from palimpsest.errors import ProviderTransientError
from palimpsest.feedback import StubProvider
from palimpsest.service.app import ServiceConfig, create_app

RUBRIC_NAMES = ["ThesisAndArguments", "LanguageUse", "PromptRelevance",
                "OrganizationStructure"]


def make_app(tmp_path, **overrides):
    overrides.setdefault("data_dir", tmp_path / "data")
    overrides.setdefault("rng_seed", 7)
    return create_app(ServiceConfig(**overrides))


def make_client(tmp_path, **overrides):
    return TestClient(make_app(tmp_path, **overrides))


def ev(seq, kind, key, t_ms, content=None):
    event = {"seq": seq, "kind": kind, "key": key, "t_ms": t_ms}
    if content is not None:
        event["content"] = content
    return event


def ndjson(events):
    return ("\n".join(json.dumps(e) for e in events) + "\n").encode("utf-8")


def post_events(client, sid, events):
    return client.post(f"/sessions/{sid}/events", content=ndjson(events),
                       headers={"Content-Type": "application/x-ndjson"})


def start_session(client):
    created = client.post("/sessions").json()
    sid = created["session_id"]
    response = client.post(f"/sessions/{sid}/consent",
                           json={"acknowledged": True})
    assert response.status_code == 200
    return sid, created


TYPING = [
    ev(1, "keydown", "character", 1_000),
    ev(2, "keyup", "character", 1_080),
    ev(3, "keydown", "character", 2_000),
    ev(4, "keyup", "character", 2_080),
    ev(5, "keydown", "backspace", 5_000, content="an early draft sentence"),
    ev(6, "keyup", "backspace", 5_100),
    ev(7, "keydown", "character", 9_000),
    ev(8, "keyup", "character", 9_050),
]

FINAL_TEXT = "an early draft sentence, reworked before the finish"


def run_to_feedback(client):
    sid, _ = start_session(client)
    assert post_events(client, sid, TYPING).status_code == 200
    submitted = client.post(f"/sessions/{sid}/submit",
                            json={"final_text": FINAL_TEXT})
    assert submitted.status_code == 200
    return sid, submitted.json()


def run_to_survey(client, likert=(4, 5, 4, 4, 5, 4)):
    sid, _ = run_to_feedback(client)
    response = client.post(f"/sessions/{sid}/survey", json={
        "likert": list(likert),
        "open": ["fine", "", "yes", "nothing"],
    })
    assert response.status_code == 201
    return sid


class TestSessions:
    def test_health(self, tmp_path):
        client = make_client(tmp_path)
        assert client.get("/healthz").json() == {"status": "ok"}

    def test_create_returns_topic_and_guidelines(self, tmp_path):
        client = make_client(tmp_path)
        response = client.post("/sessions")
        assert response.status_code == 201
        body = response.json()
        assert body["duration_ms"] == 1_200_000
        assert body["topic"]["prompt_text"]
        assert body["topic"]["category"] in (
            "argumentative", "reflective", "analytical")
        assert "anonymized" in body["guidelines_text"]
        assert "keystroke" in body["guidelines_text"].lower()

    def test_each_session_gets_fresh_ids(self, tmp_path):
        client = make_client(tmp_path)
        a = client.post("/sessions").json()
        b = client.post("/sessions").json()
        assert a["session_id"] != b["session_id"]
        assert a["participant_id"] != b["participant_id"]

    def test_get_session_state_view(self, tmp_path):
        client = make_client(tmp_path)
        sid, _ = start_session(client)
        body = client.get(f"/sessions/{sid}").json()
        assert body["state"] == "writing"
        assert body["consent_acknowledged"] is True
        assert body["last_seq"] is None
        assert body["snapshot_count"] == 0

    def test_unknown_session_is_404(self, tmp_path):
        client = make_client(tmp_path)
        response = client.get("/sessions/doesnotexist")
        assert response.status_code == 404
        assert response.json()["error"] == "NotFound"

    def test_consent_must_be_affirmative(self, tmp_path):
        client = make_client(tmp_path)
        sid = client.post("/sessions").json()["session_id"]
        response = client.post(f"/sessions/{sid}/consent",
                               json={"acknowledged": False})
        assert response.status_code == 422

    def test_events_before_consent_rejected(self, tmp_path):
        client = make_client(tmp_path)
        sid = client.post("/sessions").json()["session_id"]
        response = post_events(client, sid, TYPING[:2])
        assert response.status_code == 409
        assert response.json()["error"] == "StateError"


class TestEventIngestion:
    def test_batch_accepted_and_logs_counted(self, tmp_path):
        client = make_client(tmp_path)
        sid, _ = start_session(client)
        response = post_events(client, sid, TYPING)
        body = response.json()
        assert body["accepted"] == 8
        # One log, cut at the first backspace keydown. The burst's lazy
        # closure only back-dates the next log; it emits nothing itself.
        assert body["logs_finalized"] == 1
        assert client.get(f"/sessions/{sid}").json()["last_seq"] == 8

    def test_resent_batch_deduplicates(self, tmp_path):
        client = make_client(tmp_path)
        sid, _ = start_session(client)
        post_events(client, sid, TYPING)
        body = post_events(client, sid, TYPING).json()
        assert body == {"accepted": 0, "logs_finalized": 0}

    def test_overlapping_batch_applies_only_the_suffix(self, tmp_path):
        client = make_client(tmp_path)
        sid, _ = start_session(client)
        post_events(client, sid, TYPING[:4])
        body = post_events(client, sid, TYPING).json()
        assert body["accepted"] == 4

    def test_unsorted_batch_rejected_atomically(self, tmp_path):
        client = make_client(tmp_path)
        sid, _ = start_session(client)
        shuffled = [TYPING[1], TYPING[0]]
        response = post_events(client, sid, shuffled)
        assert response.status_code == 409
        # Nothing from the bad batch was applied.
        assert client.get(f"/sessions/{sid}").json()["last_seq"] is None

    def test_cross_batch_time_regression_rejected(self, tmp_path):
        client = make_client(tmp_path)
        sid, _ = start_session(client)
        post_events(client, sid, TYPING[:4])
        late = [ev(9, "keydown", "character", 1_500)]
        assert post_events(client, sid, late).status_code == 409

    def test_backspace_keydown_needs_content(self, tmp_path):
        client = make_client(tmp_path)
        sid, _ = start_session(client)
        bad = [ev(1, "keydown", "backspace", 1_000)]
        assert post_events(client, sid, bad).status_code == 422

    def test_character_keydown_must_not_carry_content(self, tmp_path):
        client = make_client(tmp_path)
        sid, _ = start_session(client)
        bad = [ev(1, "keydown", "character", 1_000, content="text")]
        assert post_events(client, sid, bad).status_code == 422

    def test_malformed_json_line_rejected(self, tmp_path):
        client = make_client(tmp_path)
        sid, _ = start_session(client)
        response = client.post(
            f"/sessions/{sid}/events", content=b'{"seq": }\n',
            headers={"Content-Type": "application/x-ndjson"})
        assert response.status_code == 422

    def test_blank_lines_are_tolerated(self, tmp_path):
        client = make_client(tmp_path)
        sid, _ = start_session(client)
        body = b"\n" + ndjson(TYPING[:2]) + b"\n\n"
        response = client.post(
            f"/sessions/{sid}/events", content=body,
            headers={"Content-Type": "application/x-ndjson"})
        assert response.json()["accepted"] == 2

    def test_event_beyond_duration_plus_grace_rejected(self, tmp_path):
        client = make_client(tmp_path, duration_ms=20_000)
        sid, _ = start_session(client)
        late = [ev(1, "keydown", "character", 50_001)]
        assert post_events(client, sid, late).status_code == 422
        on_time = [ev(1, "keydown", "character", 50_000)]
        assert post_events(client, sid, on_time).status_code == 200


class TestSnapshots:
    def test_on_time_snapshot_accepted(self, tmp_path):
        client = make_client(tmp_path)
        sid, _ = start_session(client)
        response = client.post(f"/sessions/{sid}/snapshots", json={
            "index": 1, "t_ms": 180_000, "content": "draft at three minutes"})
        assert response.status_code == 202
        assert client.get(f"/sessions/{sid}").json()["snapshot_count"] == 1

    def test_wrong_index_rejected(self, tmp_path):
        client = make_client(tmp_path)
        sid, _ = start_session(client)
        response = client.post(f"/sessions/{sid}/snapshots", json={
            "index": 2, "t_ms": 360_000, "content": "x"})
        assert response.status_code == 409
        assert response.json()["error"] == "SequenceError"

    def test_out_of_window_snapshot_rejected(self, tmp_path):
        client = make_client(tmp_path)
        sid, _ = start_session(client)
        response = client.post(f"/sessions/{sid}/snapshots", json={
            "index": 1, "t_ms": 150_000, "content": "x"})
        assert response.status_code == 422
        assert response.json()["error"] == "CadenceError"

    def test_snapshot_beyond_session_end_rejected(self, tmp_path):
        client = make_client(tmp_path, duration_ms=200_000)
        sid, _ = start_session(client)
        first = client.post(f"/sessions/{sid}/snapshots", json={
            "index": 1, "t_ms": 180_000, "content": "x"})
        assert first.status_code == 202
        second = client.post(f"/sessions/{sid}/snapshots", json={
            "index": 2, "t_ms": 360_000, "content": "y"})
        assert second.status_code == 422

    def test_extra_fields_rejected(self, tmp_path):
        client = make_client(tmp_path)
        sid, _ = start_session(client)
        response = client.post(f"/sessions/{sid}/snapshots", json={
            "index": 1, "t_ms": 180_000, "content": "x", "mood": "hopeful"})
        assert response.status_code == 422


class TestSubmitAndFeedback:
    def test_submit_produces_structured_feedback(self, tmp_path):
        client = make_client(tmp_path)
        sid, submitted = run_to_feedback(client)
        assert submitted["state"] == "feedback_ready"
        assert submitted["feedback_id"].startswith(f"{sid}/feedback/")

        body = client.get(f"/sessions/{sid}/feedback").json()
        names = [r["name"] for r in body["rubric_feedback"]]
        assert names == RUBRIC_NAMES
        assert all(r["commentary"] for r in body["rubric_feedback"])
        assert body["revision_narrative"]
        assert all(0 <= a <= 1_200_000 for a in body["timestamp_anchors"])
        meta = body["provider_meta"]
        assert meta["provider_id"] == "stub"
        assert meta["attempts"] == 1
        assert meta["raw_text"]

    def test_submit_before_writing_rejected(self, tmp_path):
        client = make_client(tmp_path)
        sid = client.post("/sessions").json()["session_id"]
        response = client.post(f"/sessions/{sid}/submit",
                               json={"final_text": "x"})
        assert response.status_code == 409

    def test_second_submit_after_success_rejected(self, tmp_path):
        client = make_client(tmp_path)
        sid, _ = run_to_feedback(client)
        response = client.post(f"/sessions/{sid}/submit",
                               json={"final_text": FINAL_TEXT})
        assert response.status_code == 409

    def test_feedback_before_submit_is_404(self, tmp_path):
        client = make_client(tmp_path)
        sid, _ = start_session(client)
        assert client.get(f"/sessions/{sid}/feedback").status_code == 404

    def test_submit_time_cannot_precede_last_event(self, tmp_path):
        client = make_client(tmp_path)
        sid, _ = start_session(client)
        post_events(client, sid, TYPING)
        response = client.post(f"/sessions/{sid}/submit", json={
            "final_text": FINAL_TEXT, "t_ms": 500})
        assert response.status_code == 422

    def test_provider_outage_then_recovery_via_resubmit(self, tmp_path):
        class Flaky(StubProvider):
            provider_id = "flaky"

            def __init__(self, failures):
                super().__init__()
                self.failures = failures
                self.calls = 0

            def generate(self, request):
                self.calls += 1
                if self.calls <= self.failures:
                    raise ProviderTransientError("synthetic outage")
                return super().generate(request)

        client = make_client(tmp_path, provider=Flaky(failures=3))
        sid, _ = start_session(client)
        post_events(client, sid, TYPING)

        first = client.post(f"/sessions/{sid}/submit",
                            json={"final_text": FINAL_TEXT})
        assert first.status_code == 502
        assert client.get(f"/sessions/{sid}").json()["state"] == "submitted"
        assert client.get(f"/sessions/{sid}/feedback").status_code == 404

        retry = client.post(f"/sessions/{sid}/submit",
                            json={"final_text": FINAL_TEXT})
        assert retry.status_code == 200
        assert retry.json()["state"] == "feedback_ready"

    def test_resubmit_must_repeat_the_same_text(self, tmp_path):
        class AlwaysDown(StubProvider):
            def generate(self, request):
                raise ProviderTransientError("down")

        client = make_client(tmp_path, provider=AlwaysDown())
        sid, _ = start_session(client)
        post_events(client, sid, TYPING)
        assert client.post(f"/sessions/{sid}/submit",
                           json={"final_text": FINAL_TEXT}).status_code == 502
        response = client.post(f"/sessions/{sid}/submit",
                               json={"final_text": "different words"})
        assert response.status_code == 409


class TestSurvey:
    def test_instrument_is_published(self, tmp_path):
        client = make_client(tmp_path)
        body = client.get("/survey/instrument").json()
        assert len(body["likert_items"]) == 6
        assert len(body["open_items"]) == 4

    def test_survey_requires_feedback_ready(self, tmp_path):
        client = make_client(tmp_path)
        sid, _ = start_session(client)
        response = client.post(f"/sessions/{sid}/survey", json={
            "likert": [4] * 6, "open": ["a", "b", "c", "d"]})
        assert response.status_code == 409

    def test_survey_stores_and_advances(self, tmp_path):
        client = make_client(tmp_path)
        sid = run_to_survey(client)
        assert client.get(f"/sessions/{sid}").json()["state"] == "surveyed"

    def test_second_survey_is_a_duplicate(self, tmp_path):
        client = make_client(tmp_path)
        sid = run_to_survey(client)
        response = client.post(f"/sessions/{sid}/survey", json={
            "likert": [4] * 6, "open": ["a", "b", "c", "d"]})
        assert response.status_code == 409
        assert response.json()["error"] == "DuplicateError"

    def test_wrong_cardinality_rejected(self, tmp_path):
        client = make_client(tmp_path)
        sid, _ = run_to_feedback(client)
        response = client.post(f"/sessions/{sid}/survey", json={
            "likert": [4] * 5, "open": ["a", "b", "c", "d"]})
        assert response.status_code == 422

    def test_out_of_range_rating_rejected(self, tmp_path):
        client = make_client(tmp_path)
        sid, _ = run_to_feedback(client)
        response = client.post(f"/sessions/{sid}/survey", json={
            "likert": [4, 4, 4, 4, 4, 9], "open": ["a", "b", "c", "d"]})
        assert response.status_code == 422

    def test_aggregate_without_responses_is_404(self, tmp_path):
        client = make_client(tmp_path)
        assert client.get("/admin/aggregate/survey").status_code == 404

    def test_aggregate_over_two_sessions(self, tmp_path):
        client = make_client(tmp_path)
        run_to_survey(client, likert=(5, 5, 5, 5, 5, 5))
        run_to_survey(client, likert=(3, 3, 3, 3, 3, 3))
        body = client.get("/admin/aggregate/survey").json()
        assert body["aggregate"]["n"] == 2
        assert body["aggregate"]["items"][0]["mean"] == "4.00"
        csv_lines = body["plot_data_csv"].splitlines()
        assert csv_lines[0].endswith("n=2")
        assert len(csv_lines) == 2 + 30


class TestExportImport:
    def test_export_import_export_is_byte_identical(self, tmp_path):
        source = make_client(tmp_path)
        sid = run_to_survey(source)
        bundle = source.get(f"/sessions/{sid}/export").content

        target = make_client(tmp_path, data_dir=tmp_path / "other")
        imported = target.post(
            "/admin/import", content=bundle,
            headers={"Content-Type": "application/x-ndjson"})
        assert imported.status_code == 201
        assert imported.json()["session_id"] == sid
        assert target.get(f"/sessions/{sid}/export").content == bundle

    def test_imported_session_serves_reads(self, tmp_path):
        source = make_client(tmp_path)
        sid = run_to_survey(source)
        bundle = source.get(f"/sessions/{sid}/export").content

        target = make_client(tmp_path, data_dir=tmp_path / "other")
        target.post("/admin/import", content=bundle,
                    headers={"Content-Type": "application/x-ndjson"})
        assert target.get(f"/sessions/{sid}").json()["state"] == "surveyed"
        feedback = target.get(f"/sessions/{sid}/feedback").json()
        assert [r["name"] for r in feedback["rubric_feedback"]] == RUBRIC_NAMES

    def test_double_import_rejected(self, tmp_path):
        source = make_client(tmp_path)
        sid = run_to_survey(source)
        bundle = source.get(f"/sessions/{sid}/export").content
        target = make_client(tmp_path, data_dir=tmp_path / "other")
        target.post("/admin/import", content=bundle,
                    headers={"Content-Type": "application/x-ndjson"})
        response = target.post("/admin/import", content=bundle,
                               headers={"Content-Type": "application/x-ndjson"})
        assert response.status_code == 409


class TestRestart:
    def test_writing_session_survives_a_restart(self, tmp_path):
        first = make_client(tmp_path)
        sid, _ = start_session(first)
        post_events(first, sid, TYPING[:6])

        second = make_client(tmp_path)  # same data dir, fresh process
        view = second.get(f"/sessions/{sid}").json()
        assert view["state"] == "writing"
        assert view["last_seq"] == 6

        # The restarted service keeps deduplicating and accepting new events.
        assert post_events(second, sid, TYPING[:6]).json()["accepted"] == 0
        assert post_events(second, sid, TYPING[6:]).json()["accepted"] == 2

        submitted = second.post(f"/sessions/{sid}/submit",
                                json={"final_text": FINAL_TEXT})
        assert submitted.status_code == 200

    def test_submitted_session_survives_a_restart(self, tmp_path):
        first = make_client(tmp_path)
        sid, _ = run_to_feedback(first)
        before = first.get(f"/sessions/{sid}/feedback").json()

        second = make_client(tmp_path)
        assert second.get(f"/sessions/{sid}").json()["state"] == "feedback_ready"
        assert second.get(f"/sessions/{sid}/feedback").json() == before

    def test_sessions_are_isolated(self, tmp_path):
        client = make_client(tmp_path)
        sid_a, _ = start_session(client)
        sid_b, _ = start_session(client)
        post_events(client, sid_a, TYPING[:4])
        assert client.get(f"/sessions/{sid_a}").json()["last_seq"] == 4
        assert client.get(f"/sessions/{sid_b}").json()["last_seq"] is None


class TestPings:
    def test_events_trigger_a_context_ping(self, tmp_path):
        app = make_app(tmp_path, pings_enabled=True, ping_interval_ms=1_000)
        client = TestClient(app)
        sid, _ = start_session(client)
        post_events(client, sid, TYPING)
        notes = app.state.provider.notifications
        assert notes
        assert notes[0]["kind"] == "context_ping"
        assert notes[0]["current_text"] == "an early draft sentence"

    def test_pings_rate_limit_on_session_clock(self, tmp_path):
        app = make_app(tmp_path, pings_enabled=True,
                       ping_interval_ms=1_000_000)
        client = TestClient(app)
        sid, _ = start_session(client)
        post_events(client, sid, TYPING[:4])
        post_events(client, sid, TYPING[4:])
        assert len(app.state.provider.notifications) == 1

    def test_pings_disabled_by_default(self, tmp_path):
        app = make_app(tmp_path)
        client = TestClient(app)
        sid, _ = start_session(client)
        post_events(client, sid, TYPING)
        assert app.state.provider.notifications == []


class TestStaticFrontend:
    def test_frontend_dir_is_mounted_when_present(self, tmp_path):
        web = tmp_path / "web"
        web.mkdir()
        (web / "index.html").write_text("<html>writing ui</html>", "utf-8")
        client = make_client(tmp_path, frontend_dir=web)
        response = client.get("/app/")
        assert response.status_code == 200
        assert "writing ui" in response.text
