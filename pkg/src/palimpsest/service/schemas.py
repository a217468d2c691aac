"""Wire schemas. Responses are closed: a field not declared here never
leaves the service (extra="forbid" on every model, enforced end to end by
a schema-conformance test)."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, model_validator


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TopicOut(_Model):
    topic_id: str
    category: str
    prompt_text: str


class SessionCreatedOut(_Model):
    session_id: str
    participant_id: str = Field(
        description="Opaque random code; shown once, never again on the wire.")
    topic: TopicOut
    guidelines_text: str
    duration_ms: int


class SessionOut(_Model):
    session_id: str
    state: str
    topic: TopicOut
    duration_ms: int
    consent_acknowledged: bool
    last_seq: int | None
    snapshot_count: int


class ConsentIn(_Model):
    acknowledged: bool


class StateOut(_Model):
    session_id: str
    state: str


class KeyEventIn(_Model):
    seq: int = Field(ge=0)
    kind: str = Field(pattern="^(keydown|keyup)$")
    key: str = Field(pattern="^(backspace|character|enter|other)$")
    t_ms: int = Field(ge=0)
    content: str | None = None

    @model_validator(mode="after")
    def _content_iff_backspace_keydown(self) -> "KeyEventIn":
        is_backspace_down = self.kind == "keydown" and self.key == "backspace"
        if is_backspace_down and self.content is None:
            raise ValueError("backspace keydown must carry content")
        if not is_backspace_down and self.content is not None:
            raise ValueError("only backspace keydown may carry content")
        return self


class EventBatchOut(_Model):
    accepted: int
    logs_finalized: int


class SnapshotIn(_Model):
    index: int = Field(ge=1)
    t_ms: int = Field(ge=0)
    content: str


class SnapshotOut(_Model):
    index: int
    t_ms: int


class SubmitIn(_Model):
    final_text: str
    t_ms: int | None = Field(
        default=None,
        description="Session clock at submit; defaults to the last event time.")


class SubmitOut(_Model):
    feedback_id: str
    state: str


class RubricFeedbackOut(_Model):
    name: str
    display: str
    commentary: str


class ProviderMetaOut(_Model):
    provider_id: str
    generated_at: str
    attempts: int
    raw_text: str
    usage: dict
    latency_ms: int


class FeedbackOut(_Model):
    rubric_feedback: list[RubricFeedbackOut]
    revision_narrative: str
    timestamp_anchors: list[int]
    provider_meta: ProviderMetaOut


class SurveyIn(_Model):
    likert: list[int] = Field(min_length=6, max_length=6)
    open: list[str] = Field(min_length=4, max_length=4)


class SurveyOut(_Model):
    stored_id: str
    state: str


class SurveyItemOut(_Model):
    item_id: str
    text: str


class InstrumentOut(_Model):
    version: int
    likert_items: list[SurveyItemOut]
    open_items: list[SurveyItemOut]


class ItemStatsOut(_Model):
    item_id: str
    mean: str
    mean_exact: list[int]
    counts: list[int]
    median: str
    q1: str
    q3: str


class AggregateOut(_Model):
    n: int
    quartile_method: str
    items: list[ItemStatsOut]


class SurveyAggregateOut(_Model):
    aggregate: AggregateOut
    plot_data_csv: str


class ImportOut(_Model):
    session_id: str


class ErrorOut(_Model):
    error: str
    detail: str
