"""Prompt assembly: final essay, time-tagged snapshots, and the process
digest folded into one document under a token budget.

The digest is the only compressible part. When the assembled document is
over budget it is re-compressed at progressively smaller entry budgets; if
the document is still too large with no digest entries at all, the budget
is simply too small for the essay and a BudgetError is raised.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from ..analytics.digest import ProcessDigest, format_mmss, truncate_digest
from ..capture import Snapshot
from ..errors import BudgetError, ConfigError, SessionMismatch
from ..session import Session
from .report import NARRATIVE_MARKER, RUBRIC_ORDER

DEFAULT_PROMPT_BUDGET_TOKENS = 6_000


def estimate_tokens(text: str) -> int:
    """Budgeting heuristic only: one token per 4 characters, rounded up."""
    return (len(text) + 3) // 4


def load_instructions() -> str:
    return (
        resources.files("palimpsest.data")
        .joinpath("prompt_instructions.txt")
        .read_text(encoding="utf-8")
    )


@dataclass(frozen=True)
class PromptDocument:
    sections: tuple[tuple[str, str], ...]  # (heading, body), fixed order
    token_estimate: int

    def heading_index(self, prefix: str) -> int:
        for idx, (heading, _) in enumerate(self.sections):
            if heading.startswith(prefix):
                return idx
        raise KeyError(prefix)


def render_prompt(doc: PromptDocument) -> str:
    return "\n\n".join(f"# {heading}\n{body}" for heading, body in doc.sections)


def _digest_body(digest: ProcessDigest) -> str:
    totals = digest.totals
    lines = [
        f"Pause threshold: {digest.pause_threshold_ms // 1000}s. "
        f"Totals: {totals.pause_count} pauses, {totals.burst_count} revision "
        f"bursts, {totals.insert_tokens} words added, {totals.delete_tokens} "
        f"words removed, {totals.move_count} moved blocks."
    ]
    lines.extend(f"- {entry.summary}" for entry in digest.entries)
    return "\n".join(lines)


def _build_sections(session: Session, final: str, snapshots: list[Snapshot],
                    digest: ProcessDigest,
                    instructions: str) -> tuple[tuple[str, str], ...]:
    sections: list[tuple[str, str]] = [
        ("Topic", session.topic.prompt_text),
        ("Final essay", final),
    ]
    for snap in sorted(snapshots, key=lambda s: s.index):
        sections.append((f"Snapshot {snap.index} @ {format_mmss(snap.t_ms)}",
                         snap.content))
    sections.append(("Writing process", _digest_body(digest)))
    sections.append(("Output format", instructions))
    return tuple(sections)


def assemble_prompt(session: Session, final: str, snapshots: list[Snapshot],
                    digest: ProcessDigest,
                    budget_tokens: int = DEFAULT_PROMPT_BUDGET_TOKENS,
                    instructions: str | None = None) -> PromptDocument:
    """Build the ordered prompt document, shrinking the digest to fit."""
    if digest.session_id != session.session_id:
        raise SessionMismatch(
            f"digest belongs to {digest.session_id!r}, "
            f"not {session.session_id!r}")
    if instructions is None:
        instructions = load_instructions()
    for name in RUBRIC_ORDER:
        if name.display not in instructions:
            raise ConfigError(
                f"instructions asset does not name rubric {name.display!r}")
    if NARRATIVE_MARKER not in instructions:
        raise ConfigError("instructions asset lacks the narrative marker")

    working = digest
    while True:
        sections = _build_sections(session, final, snapshots, working,
                                   instructions)
        rendered = "\n\n".join(f"# {h}\n{b}" for h, b in sections)
        estimate = estimate_tokens(rendered)
        if estimate <= budget_tokens:
            return PromptDocument(sections, estimate)
        if not working.entries:
            raise BudgetError(
                f"essay and instructions need ~{estimate} tokens, "
                f"budget is {budget_tokens}")
        # Drop one entry per round; compression may fold several.
        working = truncate_digest(working, len(working.entries) - 1) \
            if len(working.entries) > 1 else \
            ProcessDigest(working.session_id, (), working.totals,
                          working.pause_threshold_ms)
