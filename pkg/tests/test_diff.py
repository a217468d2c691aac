"""Word diff: shortest edit script, round trip, and hunk grouping."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from palimpsest.analytics.diff import (
    EditOp,
    apply_edit_script,
    tokenize,
    word_diff,
)

VOCAB = ["the", "a", "cat", "dog", "ran", "sat", "fast", "slow", "home",
         "tree", "red", "blue", "bird", "song", "quiet", "loud"]


def lcs_length(a, b):
    """Quadratic DP oracle, independent of the production diff."""
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[len(a)][len(b)]


def edit_cost(ops):
    """Token edits implied by a script: substitutions count both sides."""
    cost = 0
    for op in ops:
        if op.kind == "insert":
            cost += len(op.tokens)
        elif op.kind == "delete":
            cost += op.src_span[1] - op.src_span[0]
        elif op.kind == "substitute":
            cost += (op.src_span[1] - op.src_span[0]) + len(op.tokens)
        else:
            raise AssertionError(f"unexpected op kind {op.kind}")
    return cost


def random_text(rng, max_tokens=50):
    return " ".join(rng.choice(VOCAB)
                    for _ in range(rng.randrange(0, max_tokens)))


def mutate(rng, text):
    """Edit a token list a few times so pairs are related, not independent."""
    tokens = tokenize(text)
    for _ in range(rng.randrange(0, 6)):
        choice = rng.random()
        if choice < 0.33 and tokens:
            tokens.pop(rng.randrange(len(tokens)))
        elif choice < 0.66:
            tokens.insert(rng.randrange(len(tokens) + 1), rng.choice(VOCAB))
        elif tokens:
            tokens[rng.randrange(len(tokens))] = rng.choice(VOCAB)
    return " ".join(tokens)


class TestTokenize:
    def test_whitespace_split_punctuation_attached(self):
        assert tokenize("Hello, world.  Twice  spaced") == [
            "Hello,", "world.", "Twice", "spaced"]

    def test_empty(self):
        assert tokenize("") == []
        assert tokenize("   ") == []


class TestRoundTrip:
    def test_hand_cases(self):
        cases = [
            ("", ""),
            ("", "one two three"),
            ("one two three", ""),
            ("a b c", "a b c"),
            ("a b c d", "a x c d"),
            ("the cat sat", "the cat sat down"),
            ("shared prefix then tail", "shared prefix new tail"),
        ]
        for a, b in cases:
            assert apply_edit_script(word_diff(a, b), a) == b

    def test_random_pairs_round_trip(self):
        rng = random.Random(321)
        for _ in range(300):
            a = random_text(rng)
            b = mutate(rng, a) if rng.random() < 0.7 else random_text(rng)
            ops = word_diff(a, b)
            assert apply_edit_script(ops, a) == b

    @settings(max_examples=150, deadline=None)
    @given(st.data())
    def test_property_round_trip(self, data):
        a = " ".join(data.draw(st.lists(st.sampled_from(VOCAB), max_size=30)))
        b = " ".join(data.draw(st.lists(st.sampled_from(VOCAB), max_size=30)))
        assert apply_edit_script(word_diff(a, b), a) == b


class TestMinimality:
    def test_matches_lcs_oracle_on_random_pairs(self):
        rng = random.Random(654)
        for _ in range(200):
            a = random_text(rng, max_tokens=50)
            b = mutate(rng, a) if rng.random() < 0.7 else random_text(rng, 50)
            ta, tb = tokenize(a), tokenize(b)
            expected = len(ta) + len(tb) - 2 * lcs_length(ta, tb)
            assert edit_cost(word_diff(a, b)) == expected

    def test_identical_texts_empty_script(self):
        assert word_diff("same text here", "same text here") == []

    def test_disjoint_texts_full_rewrite(self):
        a, b = "one two", "three four five"
        assert edit_cost(word_diff(a, b)) == 5


class TestHunkShape:
    def test_pure_insertion(self):
        ops = word_diff("a b", "a x y b")
        assert [op.kind for op in ops] == ["insert"]
        assert ops[0].tokens == ("x", "y")

    def test_pure_deletion(self):
        ops = word_diff("a x y b", "a b")
        assert [op.kind for op in ops] == ["delete"]
        assert ops[0].src_span == (1, 3)

    def test_adjacent_delete_insert_becomes_substitute(self):
        ops = word_diff("a old b", "a new b")
        assert [op.kind for op in ops] == ["substitute"]
        assert ops[0].tokens == ("new",)
        assert ops[0].src_span == (1, 2)

    def test_spans_index_into_their_texts(self):
        rng = random.Random(11)
        for _ in range(100):
            a = random_text(rng, 30)
            b = mutate(rng, a)
            ta, tb = tokenize(a), tokenize(b)
            for op in word_diff(a, b):
                if op.src_span is not None:
                    lo, hi = op.src_span
                    assert 0 <= lo <= hi <= len(ta)
                if op.dst_span is not None:
                    lo, hi = op.dst_span
                    assert 0 <= lo <= hi <= len(tb)
                if op.kind in ("insert", "substitute"):
                    lo, hi = op.dst_span
                    assert tuple(tb[lo:hi]) == op.tokens


class TestApplyEditScript:
    def test_rejects_nothing_silently(self):
        # Applying an empty script is the identity on canonical text.
        assert apply_edit_script([], "a b c") == "a b c"

    def test_output_is_whitespace_canonical(self):
        ops = word_diff("a  b   c", "a b c d")
        assert apply_edit_script(ops, "a  b   c") == "a b c d"
