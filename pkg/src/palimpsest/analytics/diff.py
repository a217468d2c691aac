"""Word-level edit scripts between two texts, and reorganization detection.

``word_diff`` runs a Myers shortest-edit-script search over word tokens and
groups the result into hunk-level ops: ``insert``, ``delete``, or
``substitute`` when a hunk touches both sides. Token edit count (deleted +
inserted tokens) is minimal, i.e. ``len(a) + len(b) - 2 * LCS``.

``detect_moves`` pairs large deleted blocks with similar inserted blocks into
``move`` ops, so a paragraph dragged elsewhere reads as one reorganization
rather than unrelated churn.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional


def tokenize(text: str) -> list[str]:
    """Whitespace-split word tokens; punctuation stays attached to its word."""
    return text.split()


@dataclass(frozen=True)
class EditOp:
    """One edit: spans are half-open token ranges; ``src_span`` indexes the
    source text (absent for insert), ``dst_span`` the target (absent for
    delete). ``tokens`` holds the removed tokens for a delete and the
    introduced tokens otherwise; a move's are as placed at the destination.
    ``window`` is the [from_ms, to_ms] interval the edit is attributed to.
    """

    kind: str  # insert | delete | substitute | move
    src_span: Optional[tuple[int, int]]
    dst_span: Optional[tuple[int, int]]
    tokens: tuple[str, ...]
    window: tuple[int, int] = (0, 0)

    def token_count(self) -> int:
        """Tokens touched: source side plus destination side."""
        src = self.src_span[1] - self.src_span[0] if self.src_span else 0
        if self.kind == "delete":
            return src
        if self.kind == "move":
            return len(self.tokens)
        return src + len(self.tokens)


def _myers_backtrack(a: list[str], b: list[str]) -> list[tuple[str, int, int]]:
    """Shortest edit path as (op, i, j) steps, op in {eq, del, ins}."""
    n, m = len(a), len(b)
    if n == 0 and m == 0:
        return []
    v: dict[int, int] = {1: 0}
    trace: list[dict[int, int]] = []
    for d in range(n + m + 1):
        trace.append(dict(v))
        for k in range(-d, d + 1, 2):
            if k == -d or (k != d and v.get(k - 1, 0) < v.get(k + 1, 0)):
                x = v.get(k + 1, 0)
            else:
                x = v.get(k - 1, 0) + 1
            y = x - k
            while x < n and y < m and a[x] == b[y]:
                x += 1
                y += 1
            v[k] = x
            if x >= n and y >= m:
                return _walk_trace(trace[: d + 1], n, m)
    raise AssertionError("unreachable: Myers search always terminates")


def _walk_trace(trace: list[dict[int, int]], n: int, m: int) -> list[tuple[str, int, int]]:
    steps: list[tuple[str, int, int]] = []
    x, y = n, m
    for d in range(len(trace) - 1, -1, -1):
        v = trace[d]
        k = x - y
        if k == -d or (k != d and v.get(k - 1, 0) < v.get(k + 1, 0)):
            prev_k = k + 1
        else:
            prev_k = k - 1
        prev_x = v.get(prev_k, 0)
        prev_y = prev_x - prev_k
        while x > prev_x and y > prev_y:
            steps.append(("eq", x - 1, y - 1))
            x -= 1
            y -= 1
        if d > 0:
            if x == prev_x:
                steps.append(("ins", x, prev_y))
            else:
                steps.append(("del", prev_x, y))
            x, y = prev_x, prev_y
    steps.reverse()
    return steps


def word_diff(a: str, b: str, window: tuple[int, int] = (0, 0)) -> list[EditOp]:
    """Minimal word-token edit script turning ``a`` into ``b``."""
    a_tok = tokenize(a)
    b_tok = tokenize(b)
    steps = _myers_backtrack(a_tok, b_tok)

    ops: list[EditOp] = []
    i = 0
    while i < len(steps):
        if steps[i][0] == "eq":
            i += 1
            continue
        # One hunk: a maximal run of non-equal steps.
        j = i
        while j < len(steps) and steps[j][0] != "eq":
            j += 1
        dels = [s for s in steps[i:j] if s[0] == "del"]
        inss = [s for s in steps[i:j] if s[0] == "ins"]
        src_span = (dels[0][1], dels[-1][1] + 1) if dels else None
        dst_span = (inss[0][2], inss[-1][2] + 1) if inss else None
        if dels and inss:
            ops.append(EditOp("substitute", src_span, dst_span,
                              tuple(b_tok[dst_span[0]:dst_span[1]]), window))
        elif dels:
            ops.append(EditOp("delete", src_span, None,
                              tuple(a_tok[src_span[0]:src_span[1]]), window))
        else:
            ops.append(EditOp("insert", None, dst_span,
                              tuple(b_tok[dst_span[0]:dst_span[1]]), window))
        i = j
    return ops


def apply_edit_script(ops: list[EditOp], a: str) -> str:
    """Apply a script produced by ``word_diff`` (optionally after
    ``detect_moves``) to ``a``, reconstructing the target text.

    Output whitespace is canonical (tokens joined by single spaces), matching
    the token level the script operates on.
    """
    a_tok = tokenize(a)

    removals: list[tuple[int, int]] = []
    insertions: list[tuple[int, tuple[str, ...]]] = []  # (dst_start, tokens)
    for op in ops:
        if op.kind in ("delete", "substitute", "move"):
            removals.append(op.src_span)
        if op.kind in ("insert", "substitute", "move"):
            insertions.append((op.dst_span[0], op.tokens))

    removed = [False] * len(a_tok)
    for start, end in removals:
        for idx in range(start, end):
            removed[idx] = True
    kept = [tok for idx, tok in enumerate(a_tok) if not removed[idx]]

    out: list[str] = []
    ki = 0
    for dst_start, tokens in sorted(insertions, key=lambda item: item[0]):
        while len(out) < dst_start:
            out.append(kept[ki])
            ki += 1
        out.extend(tokens)
    out.extend(kept[ki:])
    return " ".join(out)


def _multiset_jaccard(left: tuple[str, ...], right: tuple[str, ...]) -> Fraction:
    ca, cb = Counter(left), Counter(right)
    inter = sum((ca & cb).values())
    union = sum((ca | cb).values())
    if union == 0:
        return Fraction(1)
    return Fraction(inter, union)


def detect_moves(script: list[EditOp], min_tokens: int = 5,
                 min_similarity: float = 0.8) -> list[EditOp]:
    """Pair deleted blocks with similar inserted blocks into move ops.

    Both blocks must hold at least ``min_tokens`` tokens and their token
    multisets must reach ``min_similarity`` Jaccard overlap; pairing is
    greedy, highest similarity first, with positional tie-breaks. The move
    replaces the delete's slot and the insert disappears, so applying the
    result still reconstructs the target text.
    """
    deletes = [idx for idx, op in enumerate(script)
               if op.kind == "delete" and len(op.tokens) >= min_tokens]
    inserts = [idx for idx, op in enumerate(script)
               if op.kind == "insert" and len(op.tokens) >= min_tokens]

    threshold = Fraction(min_similarity).limit_denominator(10**6)
    candidates = []
    for d_idx in deletes:
        for i_idx in inserts:
            sim = _multiset_jaccard(script[d_idx].tokens, script[i_idx].tokens)
            if sim >= threshold:
                candidates.append((sim, d_idx, i_idx))
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))

    paired: dict[int, int] = {}  # delete index -> insert index
    used_inserts: set[int] = set()
    for _, d_idx, i_idx in candidates:
        if d_idx in paired or i_idx in used_inserts:
            continue
        paired[d_idx] = i_idx
        used_inserts.add(i_idx)

    result: list[EditOp] = []
    for idx, op in enumerate(script):
        if idx in used_inserts:
            continue
        if idx in paired:
            ins = script[paired[idx]]
            result.append(EditOp("move", op.src_span, ins.dst_span,
                                 ins.tokens, op.window))
        else:
            result.append(op)
    return result
