"""Exception types shared across the package.

Every domain error derives from PalimpsestError so callers (and the HTTP
layer) can map them uniformly. Names are part of the public contract: the
service reports ``type(exc).__name__`` in error bodies.
"""

from __future__ import annotations


class PalimpsestError(Exception):
    """Base class for all domain errors."""


class ConfigError(PalimpsestError):
    """Invalid configuration: empty topic bank, non-positive duration, etc."""


class StateError(PalimpsestError):
    """Illegal session lifecycle transition (skip, backward, or consent gate)."""


class OrderError(PalimpsestError):
    """Event sequence number or timestamp regressed."""


class ProtocolError(PalimpsestError):
    """Malformed key event, e.g. a backspace keydown without a content payload."""


class SequenceError(PalimpsestError):
    """Snapshot arrived with an unexpected index."""


class CadenceError(PalimpsestError):
    """Snapshot (or event) timestamp falls outside its allowed time window."""


class SessionMismatch(PalimpsestError):
    """Digest inputs are not internally consistent as a single session."""


class BudgetError(PalimpsestError):
    """Prompt cannot fit the token budget even with an empty digest."""


class ParseError(PalimpsestError):
    """Provider output did not follow the section-marker grammar.

    ``missing`` and ``duplicated`` list the offending section names;
    ``raw_text`` keeps the unparsed provider output for audit.
    """

    def __init__(self, message: str = "unparseable feedback",
                 missing: tuple[str, ...] = (),
                 duplicated: tuple[str, ...] = (),
                 raw_text: str = ""):
        super().__init__(message)
        self.missing = tuple(missing)
        self.duplicated = tuple(duplicated)
        self.raw_text = raw_text


class ProviderError(PalimpsestError):
    """Text-generation provider failed after exhausting retries."""


class ProviderTransientError(ProviderError):
    """Retryable provider failure (timeout, 429, 5xx)."""


class DuplicateError(PalimpsestError):
    """A survey response for this session was already recorded."""


class RangeError(PalimpsestError):
    """A Likert value fell outside [1, 5]."""


class EmptyError(PalimpsestError):
    """Aggregation requested over zero responses."""
