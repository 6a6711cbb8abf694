import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from firo.cluster import build_index
from firo.errors import BadMagicError, ConfigError, ContractError, TruncatedError, VersionError
from firo.model import (
    CharTable,
    FiroModel,
    aggregate_context,
    compose_word_embedding,
    firo_sanitizer,
    init_model,
    load_model,
    sanitize,
    save_model,
    score_cluster,
)
from firo.text import Sentence

from oracles import levenshtein_dp

WORD_ALPHABET = "abcdefghijklmnopqrstuvwxyz"


def toy_chars() -> CharTable:
    """d_char=2 table with the vectors from the composition examples."""
    alphabet = "aordw"
    vectors = np.zeros((len(alphabet) + 1, 2))
    assignments = {"w": [1, 0], "o": [0, 1], "r": [0, 2], "d": [2, 0], "a": [3, 1]}
    for ch, vec in assignments.items():
        vectors[alphabet.index(ch)] = vec
    return CharTable(alphabet, vectors)


def toy_model(vocab_size=1, fingerprint=0) -> FiroModel:
    return FiroModel(
        chars=toy_chars(),
        alpha_raw=0.0,
        output_vectors=np.zeros((vocab_size, 6)),
        vocab_fingerprint=fingerprint,
    )


class TestComposeWordEmbedding:
    def test_word(self):
        m = toy_model()
        np.testing.assert_array_equal(
            compose_word_embedding(m, "word"), [1, 0, 0, 1.5, 2, 0]
        )

    def test_internal_permutation_invariant(self):
        m = toy_model()
        np.testing.assert_array_equal(
            compose_word_embedding(m, "wrod"), [1, 0, 0, 1.5, 2, 0]
        )

    def test_single_char(self):
        m = toy_model()
        np.testing.assert_array_equal(compose_word_embedding(m, "a"), [3, 1, 0, 0, 3, 1])

    def test_two_chars_have_zero_internal(self):
        m = toy_model()
        np.testing.assert_array_equal(compose_word_embedding(m, "ad"), [3, 1, 0, 0, 2, 0])

    def test_unknown_char_uses_unk_row(self):
        chars = toy_chars()
        chars.vectors[-1] = [9, 9]
        m = FiroModel(chars, 0.0, np.zeros((1, 6)), 0)
        np.testing.assert_array_equal(compose_word_embedding(m, "z"), [9, 9, 0, 0, 9, 9])

    def test_empty_word_rejected(self):
        with pytest.raises(ContractError):
            compose_word_embedding(toy_model(), "")

    @given(st.text(alphabet=WORD_ALPHABET, min_size=2, max_size=15), st.integers(0, 2**31))
    @settings(max_examples=200)
    def test_anagram_invariance_bitwise(self, word, seed):
        model = init_model(4, 0, d_char=16, seed=3)
        rng = random.Random(seed)
        internal = list(word[1:-1])
        rng.shuffle(internal)
        shuffled = word[0] + "".join(internal) + word[-1]
        a = compose_word_embedding(model, word)
        b = compose_word_embedding(model, shuffled)
        assert a.tobytes() == b.tobytes()


class TestAggregateContext:
    def test_middle_position(self):
        m = toy_model()  # alpha_raw=0 -> alpha=0.5
        h = np.array([[2.0, 0.0], [0.0, 2.0], [4.0, 4.0]])
        out = aggregate_context(m, h)
        np.testing.assert_allclose(out[1], [1.5, 2.0])

    def test_boundary_zero_padding(self):
        m = toy_model()
        h = np.array([[2.0, 0.0], [0.0, 2.0], [4.0, 4.0]])
        out = aggregate_context(m, h)
        np.testing.assert_allclose(out[0], [1.0, 0.5])

    def test_alpha_one_is_identity(self):
        m = toy_model()
        m.alpha_raw = 60.0  # logistic saturates to exactly 1.0 in float64
        assert m.alpha == 1.0
        h = np.array([[2.0, 0.0], [0.0, 2.0], [4.0, 4.0]])
        np.testing.assert_array_equal(aggregate_context(m, h), h)

    def test_length_preserved(self):
        m = toy_model()
        h = np.ones((5, 2))
        assert aggregate_context(m, h).shape == (5, 2)

    def test_accepts_list_of_vectors(self):
        m = toy_model()
        out = aggregate_context(m, [np.array([2.0, 0.0]), np.array([0.0, 2.0])])
        assert out.shape == (2, 2)

    def test_empty_rejected(self):
        with pytest.raises(ContractError):
            aggregate_context(toy_model(), np.zeros((0, 2)))

    def test_locality_of_perturbation(self):
        """Changing embedding i moves only contextual positions i-1, i, i+1."""
        m = toy_model()
        rng = np.random.default_rng(0)
        h = rng.normal(size=(9, 2))
        base = aggregate_context(m, h)
        h2 = h.copy()
        h2[4] += 1.0
        moved = aggregate_context(m, h2)
        for i in range(9):
            if 3 <= i <= 5:
                assert not np.array_equal(base[i], moved[i])
            else:
                assert base[i].tobytes() == moved[i].tobytes()


class TestScoreCluster:
    def test_singleton(self):
        m = toy_model(vocab_size=3)
        probs = score_cluster(m, np.ones(6), (1,))
        np.testing.assert_array_equal(probs, [1.0])

    def test_equal_logits(self):
        m = toy_model(vocab_size=2)
        probs = score_cluster(m, np.ones(6), (0, 1))
        np.testing.assert_allclose(probs, [0.5, 0.5])

    def test_closed_form_softmax(self):
        m = toy_model(vocab_size=2)
        m.output_vectors = np.array([[1.0, 0, 0, 0, 0, 0], [0.0, 0, 0, 0, 0, 0]])
        contextual = np.array([1.0, 0, 0, 0, 0, 0])  # logits (1, 0)
        probs = score_cluster(m, contextual, (0, 1))
        e = math.exp(1.0)
        np.testing.assert_allclose(probs, [e / (e + 1), 1 / (e + 1)], atol=1e-12)

    def test_normalization(self):
        rng = np.random.default_rng(4)
        m = toy_model(vocab_size=6)
        m.output_vectors = rng.normal(size=(6, 6))
        probs = score_cluster(m, rng.normal(size=6), (0, 2, 4, 5))
        assert abs(probs.sum() - 1.0) < 1e-6

    def test_constant_logit_shift_leaves_scores_unchanged(self):
        # adding the same delta row to every candidate shifts all logits by
        # the same constant; probabilities and the argmax must not move
        rng = np.random.default_rng(11)
        m = toy_model(vocab_size=5)
        m.output_vectors = rng.normal(size=(5, 6))
        c = rng.normal(size=6)
        cluster = (0, 1, 3, 4)
        base = score_cluster(m, c, cluster)
        shifted = toy_model(vocab_size=5)
        shifted.output_vectors = m.output_vectors + rng.normal(size=6)
        moved = score_cluster(shifted, c, cluster)
        np.testing.assert_allclose(moved, base, atol=1e-9)
        assert int(np.argmax(moved)) == int(np.argmax(base))

    def test_empty_cluster_rejected(self):
        with pytest.raises(ContractError):
            score_cluster(toy_model(), np.zeros(6), ())


class TestSanitize:
    @pytest.fixture
    def setup(self, small_vocab):
        index = build_index(small_vocab)
        model = init_model(len(small_vocab), small_vocab.fingerprint, d_char=4, seed=2)
        return model, index

    def test_passthrough_on_empty_cluster(self, setup):
        model, index = setup
        result = sanitize(model, index, Sentence.from_tokens(["zzzqqq", "the"]))
        assert result.output_tokens[0] == "zzzqqq"
        assert result.per_token[0].chosen_id is None
        assert result.per_token[0].cluster_size == 0

    def test_token_count_preserved(self, setup):
        model, index = setup
        for raw in ["the cat sat", "", "a b c d e f g", "don't stop!"]:
            s = Sentence.from_raw(raw)
            assert len(sanitize(model, index, s).output_tokens) == len(s)

    def test_outputs_within_one_edit_or_passthrough(self, setup):
        model, index = setup
        rng = random.Random(6)
        for _ in range(40):
            tokens = rng.choices(list(index.vocab.words) + ["qqq", "zzz"], k=5)
            noisy = []
            for t in tokens:
                pos = rng.randrange(len(t))
                noisy.append(t[:pos] + rng.choice("abcdefghijklmnopqrstuvwxyz") + t[pos + 1:])
            result = sanitize(model, index, Sentence.from_tokens(noisy))
            for before, after, info in zip(noisy, result.output_tokens, result.per_token):
                if info.chosen_id is not None:
                    assert levenshtein_dp(before, after) <= 1

    def test_fingerprint_mismatch_rejected(self, setup):
        model, index = setup
        model.vocab_fingerprint ^= 1
        with pytest.raises(ConfigError):
            sanitize(model, index, Sentence.from_raw("the cat"))

    def test_empty_sentence(self, setup):
        model, index = setup
        result = sanitize(model, index, Sentence.from_raw(""))
        assert result.output_tokens == ()

    def test_sanitizer_callable(self, setup):
        model, index = setup
        run = firo_sanitizer(model, index)
        out = run(Sentence.from_raw("the cat"))
        assert len(out) == 2


class TestConcurrency:
    def test_concurrent_sanitize_matches_serial(self, small_vocab):
        """Model and index are shared read-only; the query cache must not
        corrupt results under concurrent access."""
        from concurrent.futures import ThreadPoolExecutor

        index = build_index(small_vocab)
        model = init_model(len(small_vocab), small_vocab.fingerprint, d_char=4, seed=3)
        rng = random.Random(0)
        sentences = [
            Sentence.from_tokens(rng.choices(list(small_vocab.words) + ["czt", "qqq"], k=6))
            for _ in range(200)
        ]
        serial = [sanitize(model, index, s).output_tokens for s in sentences]
        index._cache.clear()
        with ThreadPoolExecutor(max_workers=8) as pool:
            threaded = list(pool.map(lambda s: sanitize(model, index, s).output_tokens,
                                     sentences))
        assert threaded == serial


class TestModelSerialization:
    def test_roundtrip_bit_exact(self, tmp_path, small_vocab):
        model = init_model(len(small_vocab), small_vocab.fingerprint, d_char=6, seed=9)
        path = tmp_path / "m.firo"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.chars.alphabet == model.chars.alphabet
        assert loaded.chars.vectors.tobytes() == model.chars.vectors.tobytes()
        assert loaded.alpha_raw == model.alpha_raw
        assert loaded.output_vectors.tobytes() == model.output_vectors.tobytes()
        assert loaded.vocab_fingerprint == model.vocab_fingerprint

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.firo"
        path.write_bytes(b"JUNKJUNKJUNK")
        with pytest.raises(BadMagicError, match="not a FiRo model"):
            load_model(path)

    def test_version_mismatch(self, tmp_path, small_vocab):
        model = init_model(len(small_vocab), small_vocab.fingerprint, d_char=4, seed=9)
        path = tmp_path / "m.firo"
        save_model(model, path)
        data = bytearray(path.read_bytes())
        data[4] = 2
        path.write_bytes(bytes(data))
        with pytest.raises(VersionError):
            load_model(path)

    def test_truncated_mid_table(self, tmp_path, small_vocab):
        model = init_model(len(small_vocab), small_vocab.fingerprint, d_char=4, seed=9)
        path = tmp_path / "m.firo"
        save_model(model, path)
        data = path.read_bytes()
        path.write_bytes(data[: len(data) // 2])
        with pytest.raises(TruncatedError):
            load_model(path)
