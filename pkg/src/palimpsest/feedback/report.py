"""Feedback report structure and the section-marker grammar.

A report has two parts: commentary under four fixed rubrics, and a revision
narrative describing how the text was written. Both sides of the wire agree
on marker lines ("## RUBRIC: <name>", "## REVISION BEHAVIOR"), so parsing is
mechanical and round-trips exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum

from ..errors import ParseError


class RubricName(Enum):
    """The four feedback axes. Values are stable ids; ``display`` is the
    header text used on the wire."""

    THESIS_AND_ARGUMENTS = "ThesisAndArguments"
    LANGUAGE_USE = "LanguageUse"
    PROMPT_RELEVANCE = "PromptRelevance"
    ORGANIZATION_STRUCTURE = "OrganizationStructure"

    @property
    def display(self) -> str:
        return _DISPLAY[self]


_DISPLAY = {
    RubricName.THESIS_AND_ARGUMENTS: "Thesis and Arguments",
    RubricName.LANGUAGE_USE: "Language Use",
    RubricName.PROMPT_RELEVANCE: "Prompt Relevance",
    RubricName.ORGANIZATION_STRUCTURE: "Organization/Structure",
}
_BY_DISPLAY = {v: k for k, v in _DISPLAY.items()}

RUBRIC_ORDER = (
    RubricName.THESIS_AND_ARGUMENTS,
    RubricName.LANGUAGE_USE,
    RubricName.PROMPT_RELEVANCE,
    RubricName.ORGANIZATION_STRUCTURE,
)

RUBRIC_MARKER = "## RUBRIC: "
NARRATIVE_MARKER = "## REVISION BEHAVIOR"


@dataclass(frozen=True)
class RubricEntry:
    name: RubricName
    commentary: str


@dataclass(frozen=True)
class FeedbackReport:
    rubric_feedback: tuple[RubricEntry, ...]  # exactly 4, one per RubricName
    revision_narrative: str
    timestamp_anchors: tuple[int, ...]  # ms, each within [0, duration]
    provider_meta: dict = field(default_factory=dict)

    def commentary_for(self, name: RubricName) -> str:
        for entry in self.rubric_feedback:
            if entry.name == name:
                return entry.commentary
        raise KeyError(name.value)


# mm:ss (minutes up to 3 digits, seconds 00-59). Range endpoints like
# "15:56-16:00" match twice, once per side, so ranges need no special case.
_MMSS_RE = re.compile(r"(?<![\d:])(\d{1,3}):([0-5]\d)(?![\d:])")

# "15-minute point", "around the 15 minute mark", "3-6 minute mark".
_MINUTE_RE = re.compile(
    r"\b(\d{1,3})(?:\s*[-–—]\s*(\d{1,3}))?[\s\-]minute\s+(?:point|mark)\b",
    re.IGNORECASE,
)


def extract_anchors(narrative: str, session_duration_ms: int) -> tuple[int, ...]:
    """All time mentions in the narrative as ms, clamped to the session,
    deduplicated keeping first occurrence order."""
    found: list[tuple[int, int]] = []  # (position, ms)
    for m in _MMSS_RE.finditer(narrative):
        ms = int(m.group(1)) * 60_000 + int(m.group(2)) * 1_000
        found.append((m.start(), ms))
    for m in _MINUTE_RE.finditer(narrative):
        found.append((m.start(), int(m.group(1)) * 60_000))
        if m.group(2) is not None:
            found.append((m.start() + 1, int(m.group(2)) * 60_000))
    found.sort(key=lambda pair: pair[0])
    anchors: list[int] = []
    for _, ms in found:
        clamped = min(max(ms, 0), session_duration_ms)
        if clamped not in anchors:
            anchors.append(clamped)
    return tuple(anchors)


def parse_feedback(raw: str, session_duration_ms: int,
                   provider_meta: dict | None = None) -> FeedbackReport:
    """Split ``raw`` on the marker grammar into a FeedbackReport.

    Raises ParseError naming every missing and duplicated section. Text
    before the first marker is ignored; unknown rubric headers are errors.
    """
    if not raw:
        raise ParseError("empty provider response", raw_text=raw)

    sections: dict[str, list[str]] = {}
    order: list[str] = []
    duplicated: list[str] = []
    unknown: list[str] = []
    current: list[str] | None = None

    for line in raw.splitlines():
        stripped = line.strip()
        if stripped.startswith("## RUBRIC:"):
            header = stripped[len("## RUBRIC:"):].strip()
            rubric = _BY_DISPLAY.get(header)
            if rubric is None:
                unknown.append(header)
                current = None
                continue
            key = rubric.value
            if key in sections:
                duplicated.append(key)
                current = sections[key]  # later text still lands somewhere
                continue
            sections[key] = current = []
            order.append(key)
        elif stripped == NARRATIVE_MARKER:
            key = "RevisionBehavior"
            if key in sections:
                duplicated.append(key)
                current = sections[key]
                continue
            sections[key] = current = []
            order.append(key)
        elif current is not None:
            current.append(line)

    missing = [r.value for r in RUBRIC_ORDER if r.value not in sections]
    if "RevisionBehavior" not in sections:
        missing.append("RevisionBehavior")
    if missing or duplicated or unknown:
        parts = []
        if missing:
            parts.append("missing: " + ", ".join(missing))
        if duplicated:
            parts.append("duplicated: " + ", ".join(duplicated))
        if unknown:
            parts.append("unknown: " + ", ".join(unknown))
        raise ParseError("feedback sections " + "; ".join(parts),
                         missing=tuple(missing), duplicated=tuple(duplicated),
                         raw_text=raw)

    def body(key: str) -> str:
        return "\n".join(sections[key]).strip("\n")

    narrative = body("RevisionBehavior")
    meta = dict(provider_meta or {})
    meta.setdefault("raw_text", raw)
    return FeedbackReport(
        rubric_feedback=tuple(
            RubricEntry(name, body(name.value)) for name in RUBRIC_ORDER
        ),
        revision_narrative=narrative,
        timestamp_anchors=extract_anchors(narrative, session_duration_ms),
        provider_meta=meta,
    )


def render_report(report: FeedbackReport) -> str:
    """Inverse of parse_feedback for well-formed reports: emit the exact
    marker grammar. parse(render(r)) reproduces names, commentaries, and
    narrative as long as the texts carry no marker lines of their own."""
    lines: list[str] = []
    for entry in report.rubric_feedback:
        lines.append(f"{RUBRIC_MARKER}{entry.name.display}")
        lines.append(entry.commentary)
        lines.append("")
    lines.append(NARRATIVE_MARKER)
    lines.append(report.revision_narrative)
    return "\n".join(lines)


def report_to_dict(report: FeedbackReport) -> dict:
    """JSON-ready view with stable field order."""
    meta = dict(report.provider_meta)
    generated = meta.get("generated_at")
    if isinstance(generated, datetime):
        meta["generated_at"] = generated.isoformat()
    return {
        "rubric_feedback": [
            {"name": entry.name.value, "display": entry.name.display,
             "commentary": entry.commentary}
            for entry in report.rubric_feedback
        ],
        "revision_narrative": report.revision_narrative,
        "timestamp_anchors": list(report.timestamp_anchors),
        "provider_meta": meta,
    }
