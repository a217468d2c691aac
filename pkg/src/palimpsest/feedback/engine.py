"""Feedback generation: prompt assembly, provider call with retries, and
response parsing.

A malformed response (wrong section markers) gets one reprompt with a
grammar reminder appended; that reprompt spends one attempt from the same
retry budget as transient provider failures.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable

from ..analytics.digest import ProcessDigest
from ..capture import Snapshot
from ..errors import ParseError, ProviderError, ProviderTransientError, StateError
from ..session import Session
from .prompt import DEFAULT_PROMPT_BUDGET_TOKENS, assemble_prompt, render_prompt
from .provider import ProviderRequest
from .report import NARRATIVE_MARKER, RUBRIC_MARKER, RUBRIC_ORDER, FeedbackReport, parse_feedback

DEFAULT_ATTEMPTS = 3
DEFAULT_BACKOFF_MS = 250

GRAMMAR_REMINDER = (
    "\n\nReminder: the previous reply did not follow the required format. "
    "Use exactly these five marker lines, each alone on its own line, in "
    "this order, with your text underneath each:\n"
    + "\n".join(f"{RUBRIC_MARKER}{name.display}" for name in RUBRIC_ORDER)
    + f"\n{NARRATIVE_MARKER}"
)


@dataclass(frozen=True)
class FeedbackBundle:
    session: Session
    final: str
    snapshots: tuple[Snapshot, ...]
    digest: ProcessDigest


def generate_feedback(bundle: FeedbackBundle, provider,
                      attempts: int = DEFAULT_ATTEMPTS,
                      backoff_ms: int = DEFAULT_BACKOFF_MS,
                      budget_tokens: int = DEFAULT_PROMPT_BUDGET_TOKENS,
                      instructions: str | None = None,
                      sleep: Callable[[float], None] = time.sleep,
                      now: Callable[[], datetime] | None = None) -> FeedbackReport:
    """Run the full pipeline for a submitted session.

    provider_meta on the returned report records the provider id, the
    number of provider calls spent, the generation time, and the raw text.
    """
    session = bundle.session
    if session.state != "submitted":
        raise StateError(
            f"feedback requires state 'submitted', session is {session.state!r}")

    doc = assemble_prompt(session, bundle.final, list(bundle.snapshots),
                          bundle.digest, budget_tokens,
                          instructions=instructions)
    prompt_text = render_prompt(doc)

    used = 0
    reminded = False
    last_transient: ProviderTransientError | None = None
    while used < attempts:
        used += 1
        request = ProviderRequest(prompt=prompt_text)
        try:
            response = provider.generate(request)
        except ProviderTransientError as exc:
            last_transient = exc
            if used < attempts:
                sleep(backoff_ms * (2 ** (used - 1)) / 1000)
            continue
        meta = {
            "provider_id": provider.provider_id,
            "generated_at": (now or _utcnow)(),
            "attempts": used,
            "raw_text": response.text,
            "usage": response.usage,
            "latency_ms": response.latency_ms,
        }
        try:
            return parse_feedback(response.text, session.duration_ms,
                                  provider_meta=meta)
        except ParseError:
            if not reminded and used < attempts:
                reminded = True
                prompt_text = prompt_text + GRAMMAR_REMINDER
                continue
            raise

    raise ProviderError(
        f"provider failed {attempts} times") from last_transient


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)
