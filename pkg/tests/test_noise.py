import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from firo.errors import ContractError
from firo.noise import (
    ALL_KINDS,
    DISTANCE_ONE_KINDS,
    OpKind,
    PerturbOp,
    apply_op,
    changing_ops,
    changing_variants,
    is_perturbable,
    parse_kinds,
    perturb_sentence,
    sample_changing_op,
    word_difference,
)
from firo.text import Sentence, tokenize

from oracles import single_edit_words


class TestApplyOp:
    def test_swap(self):
        assert apply_op("word", PerturbOp(OpKind.SWAP_ADJACENT, 1)) == "wrod"

    def test_delete(self):
        assert apply_op("word", PerturbOp(OpKind.DELETE, 2)) == "wod"

    def test_insert_at_end_and_middle(self):
        assert apply_op("cat", PerturbOp(OpKind.INSERT, 3, "r")) == "catr"
        assert apply_op("cat", PerturbOp(OpKind.INSERT, 2, "r")) == "cart"

    def test_substitute(self):
        assert apply_op("cat", PerturbOp(OpKind.SUBSTITUTE, 0, "b")) == "bat"

    @pytest.mark.parametrize("op", [
        PerturbOp(OpKind.DELETE, 5),
        PerturbOp(OpKind.SUBSTITUTE, 4, "x"),
        PerturbOp(OpKind.SWAP_ADJACENT, 3),
        PerturbOp(OpKind.INSERT, 9, "x"),
    ])
    def test_out_of_range_rejected(self, op):
        with pytest.raises(ContractError):
            apply_op("word", op)

    def test_delete_single_char_rejected(self):
        with pytest.raises(ContractError):
            apply_op("a", PerturbOp(OpKind.DELETE, 0))


class TestChangingOps:
    def test_covers_single_edit_neighborhood(self):
        for word in ["cat", "aa", "don't", "zz"]:
            got = set(changing_variants(word))
            expected = {
                w for w in single_edit_words(word)
                if tokenize(w) == [w]  # stays a single token
            }
            assert got == expected, word

    def test_swap_excludes_equal_chars(self):
        ops = changing_ops("aab", OpKind.SWAP_ADJACENT)
        assert [op.position for op in ops] == [1]

    def test_apostrophe_edge_exposure_excluded(self):
        # deleting the final "t" of "don't" would leave "don'" which
        # re-tokenizes into two tokens
        results = {apply_op("don't", op) for op in changing_ops("don't", OpKind.DELETE)}
        assert "don'" not in results
        assert "dont" in results

    def test_sample_uniform_member(self):
        rng = random.Random(0)
        for _ in range(50):
            op = sample_changing_op("cat", rng)
            assert apply_op("cat", op) != "cat"

    def test_sample_none_when_nothing_changes(self):
        rng = random.Random(0)
        assert sample_changing_op("aa", rng, kinds={OpKind.SWAP_ADJACENT}) is None

    def test_sampler_matches_enumeration_support(self):
        # every sampled op must be in the enumerated changing set
        rng = random.Random(3)
        for word in ["cat", "aa", "don't"]:
            enumerated = {
                (op.kind, op.position, op.char)
                for kind in ALL_KINDS
                for op in changing_ops(word, kind)
            }
            for _ in range(200):
                op = sample_changing_op(word, rng)
                assert (op.kind, op.position, op.char) in enumerated


class TestIsPerturbable:
    def test_rules(self):
        assert is_perturbable("cat")
        assert is_perturbable("ab")
        assert not is_perturbable("a")
        assert not is_perturbable(",")
        assert not is_perturbable("...")
        assert is_perturbable("don't")


class TestPerturbSentence:
    def test_zero_budget_identity(self):
        s = Sentence.from_raw("the cat sat")
        assert perturb_sentence(s, 0, 1) == s

    def test_budget_one_changes_exactly_one(self):
        s = Sentence.from_raw("the cat sat")
        for seed in range(30):
            noisy = perturb_sentence(s, 1, seed)
            assert word_difference(s, noisy) == 1

    def test_budget_clamped_to_perturbable(self):
        s = Sentence.from_raw("the cat sat")
        noisy = perturb_sentence(s, 7, 3)
        assert word_difference(s, noisy) <= 3

    def test_punctuation_and_short_tokens_untouched(self):
        s = Sentence.from_tokens(["a", ",", "cat", "..."])
        for seed in range(20):
            noisy = perturb_sentence(s, 4, seed)
            assert noisy.tokens[0] == "a"
            assert noisy.tokens[1] == ","
            assert noisy.tokens[3] == "..."

    def test_deterministic(self):
        s = Sentence.from_raw("the quick brown fox jumps")
        assert perturb_sentence(s, 2, 42) == perturb_sentence(s, 2, 42)

    def test_each_change_is_one_basic_op(self):
        s = Sentence.from_raw("the quick brown fox jumps over lazy dogs")
        for seed in range(25):
            noisy = perturb_sentence(s, 3, seed)
            for before, after in zip(s.tokens, noisy.tokens):
                if before != after:
                    assert after in single_edit_words(before), (before, after)

    def test_distance_one_kinds_keep_cluster_reachability(self):
        s = Sentence.from_raw("the quick brown fox")
        for seed in range(25):
            noisy = perturb_sentence(s, 2, seed, DISTANCE_ONE_KINDS)
            for before, after in zip(s.tokens, noisy.tokens):
                if before != after:
                    from oracles import levenshtein_dp
                    assert levenshtein_dp(before, after) == 1

    @given(st.integers(0, 10), st.integers(0, 2**32 - 1))
    @settings(max_examples=80)
    def test_budget_law(self, budget, seed):
        s = Sentence.from_raw("one two three four five six")
        noisy = perturb_sentence(s, budget, seed)
        assert word_difference(s, noisy) <= budget

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=60)
    def test_perturbed_sentence_stays_canonical(self, seed):
        # the Sentence invariant: tokens == tokenize(original)
        s = Sentence.from_raw("don't stop the state-of-the-art work")
        noisy = perturb_sentence(s, 3, seed)
        assert tuple(tokenize(noisy.original)) == noisy.tokens


class TestWordDifference:
    def test_identical(self):
        s = Sentence.from_raw("a b c")
        assert word_difference(s, s) == 0

    def test_one_diff(self):
        assert word_difference(Sentence.from_raw("a b c"), Sentence.from_raw("a z c")) == 1

    def test_all_diff(self):
        assert word_difference(Sentence.from_raw("a b"), Sentence.from_raw("z y")) == 2

    def test_length_mismatch_rejected(self):
        with pytest.raises(ContractError):
            word_difference(Sentence.from_raw("a b"), Sentence.from_raw("a"))


def test_parse_kinds():
    assert parse_kinds("swap,sub,del,ins") == ALL_KINDS
    assert parse_kinds("sub") == frozenset({OpKind.SUBSTITUTE})
    with pytest.raises(ContractError):
        parse_kinds("explode")
    with pytest.raises(ContractError):
        parse_kinds("")
