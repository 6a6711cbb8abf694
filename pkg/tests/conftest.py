import random

import pytest

from firo.cluster import build_index
from firo.model import init_model
from firo.text import Sentence, Vocabulary


@pytest.fixture
def small_vocab():
    words = [
        ("the", 1000), ("cat", 500), ("bat", 400), ("hat", 300), ("car", 250),
        ("cart", 200), ("dog", 150), ("dig", 120), ("sun", 100), ("run", 90),
        ("pen", 80), ("mat", 70),
    ]
    return Vocabulary(words)


@pytest.fixture
def small_index(small_vocab):
    return build_index(small_vocab)


@pytest.fixture
def small_model(small_vocab):
    return init_model(len(small_vocab), small_vocab.fingerprint, d_char=4, seed=11)


def random_vocabulary(rng: random.Random, size: int, min_len: int = 2,
                      max_len: int = 9) -> Vocabulary:
    """Random lowercase vocabulary with distinct counts."""
    words = set()
    while len(words) < size:
        n = rng.randint(min_len, max_len)
        words.add("".join(rng.choice("abcdefghijklmnopqrstuvwxyz") for _ in range(n)))
    ordered = sorted(words)
    rng.shuffle(ordered)
    return Vocabulary([(w, size * 10 - i) for i, w in enumerate(ordered)])


def random_sentence(rng: random.Random, vocab: Vocabulary, length: int) -> Sentence:
    return Sentence.from_tokens(rng.choices(vocab.words, k=length))
