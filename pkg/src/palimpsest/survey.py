"""Post-task survey: instrument loading, response validation, exact
aggregation, and a plot-ready CSV export.

Means are exact rationals (no float accumulation); quartiles use the
inclusive median-of-halves method, named in the export header so the file
is self-describing.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from datetime import datetime
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .errors import ConfigError, DuplicateError, EmptyError, RangeError, StateError

LIKERT_COUNT = 6
OPEN_COUNT = 4
LIKERT_MIN = 1
LIKERT_MAX = 5

QUARTILE_METHOD = "inclusive median-of-halves"


@dataclass(frozen=True)
class SurveyItem:
    item_id: str
    text: str


@dataclass(frozen=True)
class SurveyInstrument:
    likert_items: tuple[SurveyItem, ...]  # exactly 6
    open_items: tuple[SurveyItem, ...]  # exactly 4
    version: int = 1

    def __post_init__(self) -> None:
        if len(self.likert_items) != LIKERT_COUNT:
            raise ConfigError(
                f"instrument needs exactly {LIKERT_COUNT} Likert items, "
                f"got {len(self.likert_items)}")
        if len(self.open_items) != OPEN_COUNT:
            raise ConfigError(
                f"instrument needs exactly {OPEN_COUNT} open items, "
                f"got {len(self.open_items)}")
        ids = [item.item_id for item in self.likert_items + self.open_items]
        if len(set(ids)) != len(ids):
            raise ConfigError("instrument item_ids must be unique")


def load_instrument(path: str | Path | None = None) -> SurveyInstrument:
    """Bundled default instrument, or a custom JSON file of the same shape."""
    if path is None:
        raw = (resources.files("palimpsest.data")
               .joinpath("survey_instrument.json").read_text(encoding="utf-8"))
    else:
        raw = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"instrument file is not valid JSON: {exc}") from exc
    try:
        return SurveyInstrument(
            likert_items=tuple(SurveyItem(i["item_id"], i["text"])
                               for i in doc["likert_items"]),
            open_items=tuple(SurveyItem(i["item_id"], i["text"])
                             for i in doc["open_items"]),
            version=doc.get("version", 1),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"instrument file missing field: {exc}") from exc


@dataclass(frozen=True)
class SurveyResponse:
    session_id: str
    likert: tuple[int, ...]  # exactly 6 values in [1, 5]
    open: tuple[str, ...]  # exactly 4 texts, may be empty
    submitted_at: datetime

    def __post_init__(self) -> None:
        if len(self.likert) != LIKERT_COUNT:
            raise RangeError(
                f"expected {LIKERT_COUNT} Likert answers, got {len(self.likert)}")
        for idx, value in enumerate(self.likert):
            if not isinstance(value, int) or isinstance(value, bool) \
                    or not LIKERT_MIN <= value <= LIKERT_MAX:
                raise RangeError(
                    f"Likert answer {idx + 1} must be an integer in "
                    f"[{LIKERT_MIN}, {LIKERT_MAX}], got {value!r}")
        if len(self.open) != OPEN_COUNT:
            raise RangeError(
                f"expected {OPEN_COUNT} open answers, got {len(self.open)}")


def response_to_payload(resp: SurveyResponse) -> dict:
    return {
        "session_id": resp.session_id,
        "likert": list(resp.likert),
        "open": list(resp.open),
        "submitted_at": resp.submitted_at.isoformat(),
    }


def response_from_payload(payload: dict) -> SurveyResponse:
    return SurveyResponse(
        session_id=payload["session_id"],
        likert=tuple(payload["likert"]),
        open=tuple(payload["open"]),
        submitted_at=datetime.fromisoformat(payload["submitted_at"]),
    )


def record_response(resp: SurveyResponse, store) -> str:
    """Persist one response and advance the session to `surveyed`.

    The session must be in `feedback_ready` and must not have answered
    before. Returns the stored record's id.
    """
    session_record = store.latest(resp.session_id, "session")
    if session_record is None:
        raise KeyError(f"unknown session {resp.session_id!r}")
    if store.records(resp.session_id, "survey_response"):
        raise DuplicateError(
            f"session {resp.session_id!r} already submitted a response")
    state = session_record.payload.get("state")
    if state != "feedback_ready":
        raise StateError(
            f"survey requires state 'feedback_ready', session is {state!r}")
    stored = store.append(resp.session_id, "survey_response",
                          response_to_payload(resp))
    session_payload = dict(session_record.payload)
    session_payload["state"] = "surveyed"
    store.append(resp.session_id, "session", session_payload)
    return f"{resp.session_id}/survey_response/{stored.n}"


@dataclass(frozen=True)
class ItemStats:
    item_id: str
    mean: Fraction
    counts: tuple[int, ...]  # tallies for values 1..5
    median: Fraction
    q1: Fraction
    q3: Fraction


@dataclass(frozen=True)
class SurveyAggregate:
    n: int
    items: tuple[ItemStats, ...]  # one per Likert item, instrument order


def _median(sorted_values: list[int]) -> Fraction:
    k = len(sorted_values)
    mid = k // 2
    if k % 2 == 1:
        return Fraction(sorted_values[mid])
    return Fraction(sorted_values[mid - 1] + sorted_values[mid], 2)


def _quartiles(values: list[int]) -> tuple[Fraction, Fraction, Fraction]:
    """Inclusive median-of-halves: both halves contain the middle element
    when n is odd."""
    ordered = sorted(values)
    k = len(ordered)
    med = _median(ordered)
    if k == 1:
        only = Fraction(ordered[0])
        return only, only, only
    half = (k + 1) // 2
    lower = ordered[:half]
    upper = ordered[k - half:]
    return _median(lower), med, _median(upper)


def aggregate(responses: list[SurveyResponse],
              instrument: SurveyInstrument | None = None) -> SurveyAggregate:
    """Order-independent exact statistics per Likert item."""
    if not responses:
        raise EmptyError("cannot aggregate zero survey responses")
    if instrument is None:
        instrument = load_instrument()
    n = len(responses)
    items: list[ItemStats] = []
    for idx, item in enumerate(instrument.likert_items):
        values = sorted(resp.likert[idx] for resp in responses)
        counts = tuple(values.count(v)
                       for v in range(LIKERT_MIN, LIKERT_MAX + 1))
        q1, median, q3 = _quartiles(values)
        items.append(ItemStats(
            item_id=item.item_id,
            mean=Fraction(sum(values), n),
            counts=counts,
            median=median,
            q1=q1,
            q3=q3,
        ))
    return SurveyAggregate(n=n, items=tuple(items))


def _render_fraction(value: Fraction) -> str:
    """Two-decimal rendering with round-half-up, e.g. 85/18 -> 4.72."""
    scaled = value * 100
    rounded = (scaled.numerator * 2 + scaled.denominator) // (scaled.denominator * 2)
    return f"{rounded // 100}.{rounded % 100:02d}"


def export_plot_data(agg: SurveyAggregate) -> str:
    """CSV with one row per (item, Likert value): 6 items x 5 values = 30
    distribution rows. Deterministic, so re-export is byte-identical."""
    out = io.StringIO()
    out.write(f"# quartile_method={QUARTILE_METHOD}; n={agg.n}\n")
    out.write("item_id,value,count,mean,median,q1,q3\n")
    for item in agg.items:
        for value_idx, count in enumerate(item.counts):
            out.write(",".join([
                item.item_id,
                str(LIKERT_MIN + value_idx),
                str(count),
                _render_fraction(item.mean),
                _render_fraction(item.median),
                _render_fraction(item.q1),
                _render_fraction(item.q3),
            ]) + "\n")
    return out.getvalue()


def aggregate_to_dict(agg: SurveyAggregate) -> dict:
    """JSON-ready view; means and quartiles rendered to 2 decimals."""
    return {
        "n": agg.n,
        "quartile_method": QUARTILE_METHOD,
        "items": [
            {
                "item_id": item.item_id,
                "mean": _render_fraction(item.mean),
                "mean_exact": [item.mean.numerator, item.mean.denominator],
                "counts": list(item.counts),
                "median": _render_fraction(item.median),
                "q1": _render_fraction(item.q1),
                "q3": _render_fraction(item.q3),
            }
            for item in agg.items
        ],
    }
