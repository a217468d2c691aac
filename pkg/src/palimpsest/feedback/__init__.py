"""Two-part feedback generation: rubric commentary plus a revision narrative
anchored to session timestamps."""

from .engine import FeedbackBundle, generate_feedback
from .prompt import (
    DEFAULT_PROMPT_BUDGET_TOKENS,
    PromptDocument,
    assemble_prompt,
    estimate_tokens,
    render_prompt,
)
from .provider import (
    ContextPinger,
    ProviderRequest,
    ProviderResponse,
    RemoteProvider,
    StubProvider,
)
from .report import (
    RUBRIC_ORDER,
    FeedbackReport,
    RubricEntry,
    RubricName,
    extract_anchors,
    parse_feedback,
    render_report,
)

__all__ = [
    "DEFAULT_PROMPT_BUDGET_TOKENS",
    "ContextPinger",
    "FeedbackBundle",
    "FeedbackReport",
    "PromptDocument",
    "ProviderRequest",
    "ProviderResponse",
    "RemoteProvider",
    "RUBRIC_ORDER",
    "RubricEntry",
    "RubricName",
    "StubProvider",
    "assemble_prompt",
    "estimate_tokens",
    "extract_anchors",
    "generate_feedback",
    "parse_feedback",
    "render_prompt",
    "render_report",
]
