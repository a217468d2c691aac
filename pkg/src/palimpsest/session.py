"""Session domain model: topics, lifecycle, and assignment.

A session is an immutable value; every lifecycle change produces a new
``Session`` via :func:`advance_state`. Persistence and concurrency are the
service layer's job.
"""

from __future__ import annotations

import json
import random
import secrets
import uuid
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

from .errors import ConfigError, StateError

TOPIC_CATEGORIES = ("argumentative", "reflective", "analytical")

#: Lifecycle states in their only legal order.
SESSION_STATES = ("created", "writing", "submitted", "feedback_ready", "surveyed")

DEFAULT_DURATION_MS = 1_200_000  # 20 minutes


@dataclass(frozen=True)
class Topic:
    topic_id: str
    category: str
    prompt_text: str

    def __post_init__(self):
        if self.category not in TOPIC_CATEGORIES:
            raise ConfigError(f"unknown topic category: {self.category!r}")
        if not self.prompt_text:
            raise ConfigError(f"topic {self.topic_id!r} has empty prompt_text")


@dataclass(frozen=True)
class TopicBank:
    topics: tuple[Topic, ...]

    def __post_init__(self):
        ids = [t.topic_id for t in self.topics]
        if len(ids) != len(set(ids)):
            raise ConfigError("topic_ids must be unique")

    def __len__(self) -> int:
        return len(self.topics)


@dataclass(frozen=True)
class SessionConfig:
    duration_ms: int = DEFAULT_DURATION_MS


@dataclass(frozen=True)
class Session:
    """One participant's timed writing task.

    ``participant_id`` is a random 128-bit hex string with no linkage to any
    personal data; nothing else identifies the writer.
    """

    session_id: str
    participant_id: str
    topic: Topic
    started_at: datetime
    duration_ms: int
    state: str = "created"
    consent_acknowledged: bool = False


def load_topic_bank(path: str | Path | None = None) -> TopicBank:
    """Load a topic bank from a JSON array of {topic_id, category, prompt_text}.

    With no path, loads the bundled default bank (15 topics, 5 per category).
    """
    if path is None:
        text = resources.files("palimpsest.data").joinpath("topics.json").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"topic bank is not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise ConfigError("topic bank must be a JSON array")
    topics = tuple(Topic(t["topic_id"], t["category"], t["prompt_text"]) for t in raw)
    return TopicBank(topics)


def create_session(bank: TopicBank, rng_seed: int | None = None,
                   config: SessionConfig | None = None) -> Session:
    """Create a fresh session with a topic drawn uniformly at random.

    ``rng_seed`` makes the topic draw reproducible; ids are always fresh.
    """
    config = config or SessionConfig()
    if len(bank) == 0:
        raise ConfigError("topic bank is empty")
    if config.duration_ms <= 0:
        raise ConfigError(f"duration_ms must be positive, got {config.duration_ms}")
    rng = random.Random(rng_seed) if rng_seed is not None else random.SystemRandom()
    topic = rng.choice(bank.topics)
    return Session(
        session_id=uuid.uuid4().hex,
        participant_id=secrets.token_hex(16),
        topic=topic,
        started_at=datetime.now(timezone.utc),
        duration_ms=config.duration_ms,
    )


def advance_state(session: Session, target: str) -> Session:
    """Move the session to ``target``, which must be the immediate successor
    of the current state (same-state calls are idempotent no-ops).

    Leaving ``created`` requires acknowledged consent.
    """
    if target not in SESSION_STATES:
        raise StateError(f"unknown state: {target!r}")
    if target == session.state:
        return session
    current_idx = SESSION_STATES.index(session.state)
    target_idx = SESSION_STATES.index(target)
    if target_idx != current_idx + 1:
        raise StateError(
            f"cannot move from {session.state!r} to {target!r}: "
            "states advance one step at a time"
        )
    if session.state == "created" and not session.consent_acknowledged:
        raise StateError("consent must be acknowledged before writing begins")
    return replace(session, state=target)


def acknowledge_consent(session: Session) -> Session:
    """Record consent; only meaningful while the session is ``created``."""
    if session.state != "created":
        raise StateError("consent can only be acknowledged before the task starts")
    return replace(session, consent_acknowledged=True)
