import filecmp

import pytest

from firo.cluster import build_index
from firo.text import load_vocabulary, read_corpus, read_labeled
from firo.toybench import (
    CLS_TEST,
    CLS_TRAIN,
    HELDOUT_SENTENCES,
    LABELS,
    TRAIN_SENTENCES,
    VOCAB_SIZE,
    gen_toybench,
)


@pytest.fixture(scope="module")
def bench(tmp_path_factory):
    out = tmp_path_factory.mktemp("bench")
    return gen_toybench(out, seed=13), out


def test_deterministic_tree(tmp_path, bench):
    paths, _ = bench
    other = tmp_path / "again"
    again = gen_toybench(other, seed=13)
    for name, path in paths.items():
        assert filecmp.cmp(path, again[name], shallow=False), name


def test_different_seed_differs(tmp_path, bench):
    paths, _ = bench
    other = gen_toybench(tmp_path / "s2", seed=14)
    assert paths["vocab"].read_bytes() != other["vocab"].read_bytes()


def test_vocab_shape(bench):
    paths, _ = bench
    vocab = load_vocabulary(paths["vocab"], max_size=10_000)
    assert len(vocab) == VOCAB_SIZE
    assert len(paths["vocab"].read_text().splitlines()) == VOCAB_SIZE
    # confusable families exist: some clusters have more than one member
    index = build_index(vocab)
    assert any(len(index.query(w)) > 1 for w in vocab.words)


def test_corpus_shape(bench):
    paths, _ = bench
    train = read_corpus(paths["train"])
    heldout = read_corpus(paths["heldout"])
    assert len(train) == TRAIN_SENTENCES
    assert len(heldout) == HELDOUT_SENTENCES
    vocab = load_vocabulary(paths["vocab"], max_size=10_000)
    for sentence in train[:200] + heldout[:100]:
        assert 6 <= len(sentence) <= 12
        assert all(t in vocab for t in sentence.tokens)


def test_classification_sets(bench):
    paths, _ = bench
    train = read_labeled(paths["cls_train"])
    test = read_labeled(paths["cls_test"])
    assert len(train) == CLS_TRAIN
    assert len(test) == CLS_TEST
    assert {label for _, label in train} == set(LABELS)
    counts = {label: 0 for label in LABELS}
    for _, label in train:
        counts[label] += 1
    assert counts[LABELS[0]] == counts[LABELS[1]]
