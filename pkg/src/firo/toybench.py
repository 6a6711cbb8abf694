"""Deterministic synthetic benchmark generator.

Produces a 300-word vocabulary with Zipf-like counts (including planted
one-edit confusable families), a bigram-grammar corpus with a held-out split,
and a two-label classification set whose label is carried by planted keyword
groups. Everything derives from one seed, so two runs emit identical bytes.
"""

from __future__ import annotations

import random
from pathlib import Path

from .text import Sentence, Vocabulary, write_corpus, write_vocabulary

VOCAB_SIZE = 300
BASE_WORDS = 240
KEYWORDS_PER_LABEL = 8
FILLER_WORDS = VOCAB_SIZE - 2 * KEYWORDS_PER_LABEL
TRAIN_SENTENCES = 5000
HELDOUT_SENTENCES = 500
CLS_TRAIN = 2000
CLS_TEST = 400
SUCCESSORS_PER_WORD = 4
LABELS = ("pos", "neg")

# Filler alphabet deliberately omits q and x: those initials are reserved for
# the two keyword groups, giving the bag-of-embeddings victim a clean linear
# signal to learn (and the attacker a clean signal to destroy).
_CONSONANTS = "bcdfghjklmnprstvwz"
_VOWELS = "aeiou"
_KEYWORD_INITIALS = ("q", "x")


def _pseudo_word(rng: random.Random) -> str:
    syllables = rng.randint(2, 3)
    parts = []
    for _ in range(syllables):
        parts.append(rng.choice(_CONSONANTS))
        parts.append(rng.choice(_VOWELS))
    if rng.random() < 0.4:
        parts.append(rng.choice(_CONSONANTS))
    return "".join(parts)


def _make_words(rng: random.Random) -> list[str]:
    words: list[str] = []
    seen: set[str] = set()
    while len(words) < BASE_WORDS:
        w = _pseudo_word(rng)
        if w not in seen:
            seen.add(w)
            words.append(w)
    # One-edit variants of existing words create confusable families, so a
    # context-free corrector has something to get wrong.
    variant_chars = _CONSONANTS + _VOWELS
    while len(words) < FILLER_WORDS:
        base = rng.choice(words[:BASE_WORDS])
        pos = rng.randrange(len(base))
        char = rng.choice([c for c in variant_chars if c != base[pos]])
        variant = base[:pos] + char + base[pos + 1 :]
        if variant not in seen:
            seen.add(variant)
            words.append(variant)
    return words


def _make_keywords(rng: random.Random, fillers: list[str]) -> tuple[list[str], list[str]]:
    """Two groups of keyword words with reserved initials and no one-edit
    neighbor anywhere in the vocabulary (their clusters stay singletons)."""
    from .cluster import within_one_edit

    taken = list(fillers)
    groups: list[list[str]] = []
    for initial in _KEYWORD_INITIALS:
        group: list[str] = []
        while len(group) < KEYWORDS_PER_LABEL:
            candidate = initial + _pseudo_word(rng)
            if candidate in taken:
                continue
            if any(within_one_edit(candidate, w) for w in taken):
                continue
            group.append(candidate)
            taken.append(candidate)
        groups.append(group)
    return groups[0], groups[1]


def _sentence_length(rng: random.Random) -> int:
    # 6..12 tokens, weighted toward longer sentences.
    return rng.choices(range(6, 13), weights=range(1, 8))[0]


class _Grammar:
    """Seeded bigram templates: each word owns a fixed successor set."""

    def __init__(self, vocab: Vocabulary, rng: random.Random):
        n = len(vocab)
        self.vocab = vocab
        self.successors = [rng.sample(range(n), SUCCESSORS_PER_WORD) for _ in range(n)]
        self.start_weights = list(vocab.counts)

    def sentence_ids(self, rng: random.Random, length: int) -> list[int]:
        current = rng.choices(range(len(self.vocab)), weights=self.start_weights)[0]
        ids = [current]
        while len(ids) < length:
            current = rng.choice(self.successors[current])
            ids.append(current)
        return ids

    def sentence(self, rng: random.Random) -> Sentence:
        ids = self.sentence_ids(rng, _sentence_length(rng))
        return Sentence.from_tokens(self.vocab.word(i) for i in ids)


def _classification_rows(grammar: _Grammar, groups: tuple[list[str], list[str]],
                         rng: random.Random, count: int) -> list[str]:
    keyword_set = set(groups[0]) | set(groups[1])
    non_keyword_ids = [
        i for i, w in enumerate(grammar.vocab.words) if w not in keyword_set
    ]
    rows = []
    for i in range(count):
        label_idx = i % 2
        tokens = [grammar.vocab.word(j) for j in
                  grammar.sentence_ids(rng, _sentence_length(rng))]
        # Strip accidental keyword occurrences so the planted one decides the label.
        tokens = [
            t if t not in keyword_set
            else grammar.vocab.word(rng.choice(non_keyword_ids))
            for t in tokens
        ]
        slot = rng.randrange(len(tokens))
        tokens[slot] = rng.choice(groups[label_idx])
        rows.append(" ".join(tokens) + "\t" + LABELS[label_idx])
    return rows


def gen_toybench(out_dir: str | Path, seed: int) -> dict[str, Path]:
    """Write the benchmark files into `out_dir` and return their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)

    fillers = _make_words(rng)
    groups = _make_keywords(rng, fillers)
    words = fillers + groups[0] + groups[1]
    order = list(words)
    rng.shuffle(order)
    entries = [(w, 1_000_000 // (rank + 1)) for rank, w in enumerate(order)]
    vocab = Vocabulary(entries)

    paths = {
        "vocab": out / "vocab.tsv",
        "train": out / "train.txt",
        "heldout": out / "heldout.txt",
        "cls_train": out / "cls_train.tsv",
        "cls_test": out / "cls_test.tsv",
    }
    write_vocabulary(vocab, paths["vocab"])

    grammar = _Grammar(vocab, rng)
    write_corpus([grammar.sentence(rng) for _ in range(TRAIN_SENTENCES)], paths["train"])
    write_corpus([grammar.sentence(rng) for _ in range(HELDOUT_SENTENCES)], paths["heldout"])

    for key, count in (("cls_train", CLS_TRAIN), ("cls_test", CLS_TEST)):
        rows = _classification_rows(grammar, groups, rng, count)
        with open(paths[key], "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(rows) + "\n")
    return paths
