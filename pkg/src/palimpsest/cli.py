"""Command line entry points.

`serve` runs the HTTP service; everything else is a thin client over the
documented routes, so the CLI never touches the store or the capture state
directly.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx

from .service import ServiceConfig, create_app

DEFAULT_BASE_URL = "http://127.0.0.1:8000"


@click.group()
def main() -> None:
    """Process-aware writing feedback service and client."""


@main.command()
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", default="./palimpsest-data", show_default=True,
              type=click.Path(file_okay=False))
@click.option("--provider", default="stub", show_default=True,
              type=click.Choice(["stub", "remote"]))
@click.option("--topic-bank", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Custom topic bank JSON; bundled bank when omitted.")
@click.option("--duration-ms", default=1_200_000, show_default=True, type=int)
@click.option("--pause-threshold-ms", default=10_000, show_default=True,
              type=int)
@click.option("--pings", default="off", show_default=True,
              type=click.Choice(["on", "off"]),
              help="Per-event provider context pings.")
@click.option("--frontend-dir", default=None,
              type=click.Path(exists=True, file_okay=False),
              help="Static files served under /app.")
def serve(port: int, host: str, data_dir: str, provider: str,
          topic_bank: str | None, duration_ms: int, pause_threshold_ms: int,
          pings: str, frontend_dir: str | None) -> None:
    """Run the HTTP service."""
    import uvicorn

    app = create_app(ServiceConfig(
        data_dir=data_dir,
        provider=provider,
        topic_bank_path=topic_bank,
        duration_ms=duration_ms,
        pause_threshold_ms=pause_threshold_ms,
        pings_enabled=(pings == "on"),
        frontend_dir=frontend_dir,
    ))
    uvicorn.run(app, host=host, port=port)


def _client(base_url: str) -> httpx.Client:
    return httpx.Client(base_url=base_url, timeout=60.0)


def _fail_on_error(response: httpx.Response) -> dict:
    if response.status_code >= 400:
        try:
            body = response.json()
            message = f"{body.get('error', 'error')}: {body.get('detail', '')}"
        except ValueError:
            message = response.text
        raise click.ClickException(
            f"server returned {response.status_code}; {message}")
    return response.json() if response.content else {}


_base_url_option = click.option("--base-url", default=DEFAULT_BASE_URL,
                                show_default=True)


@main.command()
@_base_url_option
def create(base_url: str) -> None:
    """Start a session: prints the id, topic, and guidelines."""
    with _client(base_url) as client:
        body = _fail_on_error(client.post("/sessions"))
    click.echo(f"session_id: {body['session_id']}")
    click.echo(f"participant_id: {body['participant_id']}")
    click.echo(f"duration_ms: {body['duration_ms']}")
    click.echo(f"topic [{body['topic']['topic_id']}]: "
               f"{body['topic']['prompt_text']}")
    click.echo("")
    click.echo(body["guidelines_text"])


@main.command()
@click.argument("session_id")
@_base_url_option
def consent(session_id: str, base_url: str) -> None:
    """Acknowledge the guidelines; the session enters `writing`."""
    with _client(base_url) as client:
        body = _fail_on_error(client.post(
            f"/sessions/{session_id}/consent", json={"acknowledged": True}))
    click.echo(f"state: {body['state']}")


@main.command()
@click.argument("session_id")
@click.argument("events_file", type=click.Path(exists=True, dir_okay=False))
@_base_url_option
def events(session_id: str, events_file: str, base_url: str) -> None:
    """Post a JSONL batch of key events from EVENTS_FILE."""
    payload = Path(events_file).read_bytes()
    with _client(base_url) as client:
        body = _fail_on_error(client.post(
            f"/sessions/{session_id}/events", content=payload,
            headers={"content-type": "application/x-ndjson"}))
    click.echo(f"accepted: {body['accepted']}  "
               f"logs_finalized: {body['logs_finalized']}")


@main.command()
@click.argument("session_id")
@click.option("--index", required=True, type=int)
@click.option("--t-ms", required=True, type=int)
@click.option("--file", "content_file", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="File holding the full editor text.")
@_base_url_option
def snapshot(session_id: str, index: int, t_ms: int, content_file: str,
             base_url: str) -> None:
    """Post one content snapshot."""
    content = Path(content_file).read_text(encoding="utf-8")
    with _client(base_url) as client:
        body = _fail_on_error(client.post(
            f"/sessions/{session_id}/snapshots",
            json={"index": index, "t_ms": t_ms, "content": content}))
    click.echo(f"accepted snapshot {body['index']} at t={body['t_ms']}")


@main.command()
@click.argument("session_id")
@click.option("--file", "essay_file", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--t-ms", default=None, type=int,
              help="Session clock at submit; defaults to the last event time.")
@_base_url_option
def submit(session_id: str, essay_file: str, t_ms: int | None,
           base_url: str) -> None:
    """Submit the final essay and trigger feedback generation."""
    final_text = Path(essay_file).read_text(encoding="utf-8")
    payload: dict = {"final_text": final_text}
    if t_ms is not None:
        payload["t_ms"] = t_ms
    with _client(base_url) as client:
        body = _fail_on_error(client.post(
            f"/sessions/{session_id}/submit", json=payload))
    click.echo(f"state: {body['state']}  feedback_id: {body['feedback_id']}")


@main.command()
@click.argument("session_id")
@_base_url_option
def feedback(session_id: str, base_url: str) -> None:
    """Print the generated feedback report."""
    with _client(base_url) as client:
        body = _fail_on_error(client.get(f"/sessions/{session_id}/feedback"))
    for entry in body["rubric_feedback"]:
        click.echo(f"== {entry['display']} ==")
        click.echo(entry["commentary"])
        click.echo("")
    click.echo("== Revision behavior ==")
    click.echo(body["revision_narrative"])
    if body["timestamp_anchors"]:
        stamps = ", ".join(_mmss(a) for a in body["timestamp_anchors"])
        click.echo(f"\n(times referenced: {stamps})")


def _mmss(t_ms: int) -> str:
    return f"{t_ms // 60_000:02d}:{(t_ms % 60_000) // 1_000:02d}"


@main.command()
@click.argument("session_id")
@click.option("--likert", required=True,
              help="Six comma-separated integers 1-5, e.g. 5,4,5,3,5,4.")
@click.option("--open", "open_answers", multiple=True,
              help="Open answer; repeat exactly 4 times (may be empty).")
@_base_url_option
def survey(session_id: str, likert: str, open_answers: tuple[str, ...],
           base_url: str) -> None:
    """Post the post-task survey response."""
    try:
        values = [int(part) for part in likert.split(",")]
    except ValueError:
        raise click.ClickException("--likert must be comma-separated integers")
    with _client(base_url) as client:
        body = _fail_on_error(client.post(
            f"/sessions/{session_id}/survey",
            json={"likert": values, "open": list(open_answers)}))
    click.echo(f"state: {body['state']}  stored: {body['stored_id']}")


@main.command()
@click.option("--csv-out", default=None, type=click.Path(dir_okay=False),
              help="Also write the plot-data CSV here.")
@_base_url_option
def aggregate(csv_out: str | None, base_url: str) -> None:
    """Print survey statistics across all stored responses."""
    with _client(base_url) as client:
        body = _fail_on_error(client.get("/admin/aggregate/survey"))
    agg = body["aggregate"]
    click.echo(f"n = {agg['n']}  (quartiles: {agg['quartile_method']})")
    for item in agg["items"]:
        click.echo(f"{item['item_id']}: mean {item['mean']}  "
                   f"median {item['median']}  q1 {item['q1']}  "
                   f"q3 {item['q3']}  counts {item['counts']}")
    if csv_out is not None:
        Path(csv_out).write_text(body["plot_data_csv"], encoding="utf-8")
        click.echo(f"wrote {csv_out}")


@main.command()
@click.argument("session_id")
@click.option("-o", "--output", required=True,
              type=click.Path(dir_okay=False))
@_base_url_option
def export(session_id: str, output: str, base_url: str) -> None:
    """Save a session's full record bundle to OUTPUT."""
    with _client(base_url) as client:
        response = client.get(f"/sessions/{session_id}/export")
        if response.status_code >= 400:
            _fail_on_error(response)
        Path(output).write_bytes(response.content)
    click.echo(f"wrote {output} ({len(response.content)} bytes)")


@main.command("import")
@click.argument("bundle_file", type=click.Path(exists=True, dir_okay=False))
@_base_url_option
def import_bundle(bundle_file: str, base_url: str) -> None:
    """Load a previously exported session bundle."""
    payload = Path(bundle_file).read_bytes()
    with _client(base_url) as client:
        body = _fail_on_error(client.post(
            "/admin/import", content=payload,
            headers={"content-type": "application/x-ndjson"}))
    click.echo(f"imported session {body['session_id']}")


@main.command()
@click.option("--minutes", default=20, show_default=True, type=int,
              help="Simulated session length.")
@_base_url_option
def demo(minutes: int, base_url: str) -> None:
    """Run a scripted end-to-end session against a running server."""
    duration_ms = minutes * 60_000
    with _client(base_url) as client:
        created = _fail_on_error(client.post("/sessions"))
        session_id = created["session_id"]
        click.echo(f"session {session_id} "
                   f"(topic {created['topic']['topic_id']})")
        _fail_on_error(client.post(f"/sessions/{session_id}/consent",
                                   json={"acknowledged": True}))

        text = ("The question deserves a direct answer. My view rests on two "
                "observations drawn from everyday experience and one "
                "counterargument I want to address honestly.")
        revised = ("My view rests on two observations drawn from everyday "
                   "experience and one counterargument I want to address "
                   "honestly. The question deserves a direct answer, and the "
                   "paragraphs below give mine.")
        events_script = [
            {"seq": 1, "kind": "keydown", "key": "character", "t_ms": 1_000},
            {"seq": 2, "kind": "keyup", "key": "character", "t_ms": 1_060},
            {"seq": 3, "kind": "keydown", "key": "backspace",
             "t_ms": 95_000, "content": text},
            {"seq": 4, "kind": "keyup", "key": "backspace", "t_ms": 95_080},
            {"seq": 5, "kind": "keydown", "key": "character", "t_ms": 120_000},
            {"seq": 6, "kind": "keyup", "key": "character", "t_ms": 120_050},
        ]
        batch = "\n".join(json.dumps(event) for event in events_script)
        posted = _fail_on_error(client.post(
            f"/sessions/{session_id}/events", content=batch.encode(),
            headers={"content-type": "application/x-ndjson"}))
        click.echo(f"events accepted: {posted['accepted']}, "
                   f"logs finalized: {posted['logs_finalized']}")

        snapshot_count = min(duration_ms // 180_000, 6)
        for index in range(1, snapshot_count + 1):
            _fail_on_error(client.post(
                f"/sessions/{session_id}/snapshots",
                json={"index": index, "t_ms": index * 180_000,
                      "content": revised[: 30 * index]}))
        click.echo(f"snapshots posted: {snapshot_count}")

        submitted = _fail_on_error(client.post(
            f"/sessions/{session_id}/submit",
            json={"final_text": revised, "t_ms": duration_ms}))
        click.echo(f"state: {submitted['state']}")

        report = _fail_on_error(client.get(f"/sessions/{session_id}/feedback"))
        for entry in report["rubric_feedback"]:
            click.echo(f"\n== {entry['display']} ==")
            click.echo(entry["commentary"])
        click.echo("\n== Revision behavior ==")
        click.echo(report["revision_narrative"])

        _fail_on_error(client.post(
            f"/sessions/{session_id}/survey",
            json={"likert": [5, 4, 5, 4, 5, 4],
                  "open": ["demo", "demo", "demo", "demo"]}))
        click.echo("\nsurvey recorded; session complete")


if __name__ == "__main__":
    sys.exit(main())
