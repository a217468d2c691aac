"""Revision analytics: word diffs, move detection, pauses, and the digest."""

from .diff import EditOp, apply_edit_script, detect_moves, tokenize, word_diff
from .digest import (
    DigestEntry,
    DigestTotals,
    Pause,
    ProcessDigest,
    build_digest,
    compress_entries,
    detect_pauses,
    digest_to_dict,
    format_mmss,
)

__all__ = [
    "EditOp",
    "apply_edit_script",
    "detect_moves",
    "tokenize",
    "word_diff",
    "DigestEntry",
    "DigestTotals",
    "Pause",
    "ProcessDigest",
    "build_digest",
    "compress_entries",
    "detect_pauses",
    "digest_to_dict",
    "format_mmss",
]
