"""Tokenization, vocabulary handling and corpus file I/O.

The whole pipeline operates on lowercase, whitespace-free tokens. This module
owns that normalization plus the two line-oriented file formats everything
else consumes: corpora (one sentence per line, UTF-8, LF) and vocabularies
(``word<TAB>count`` per line).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ContractError, DataFormatError

# Characters detached from token edges. Apostrophes and hyphens inside a word
# ("don't", "state-of-the-art") are left alone.
PUNCT_CHARS = frozenset(".,!?;:\"'()[]")

_FNV64_OFFSET = 0xCBF29CE484222325
_FNV64_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def tokenize(raw: str) -> list[str]:
    """Split raw text into lowercase tokens.

    Tokens are whitespace-separated chunks with any leading and any trailing
    punctuation run detached as its own token. A chunk that is nothing but
    punctuation stays whole. Joining the result with single spaces loses only
    the original spacing and casing.
    """
    tokens: list[str] = []
    for chunk in raw.lower().split():
        i = 0
        while i < len(chunk) and chunk[i] in PUNCT_CHARS:
            i += 1
        if i == len(chunk):
            tokens.append(chunk)
            continue
        j = len(chunk)
        while chunk[j - 1] in PUNCT_CHARS:
            j -= 1
        if i:
            tokens.append(chunk[:i])
        tokens.append(chunk[i:j])
        if j < len(chunk):
            tokens.append(chunk[j:])
    return tokens


def join_tokens(tokens: Iterable[str]) -> str:
    return " ".join(tokens)


def is_canonical_token(token: str) -> bool:
    """True if `token` survives tokenization unchanged as a single token."""
    return bool(token) and tokenize(token) == [token]


@dataclass(frozen=True)
class Sentence:
    """A tokenized line of text; `tokens` is always ``tokenize(original)``."""

    tokens: tuple[str, ...]
    original: str

    @classmethod
    def from_raw(cls, raw: str) -> "Sentence":
        return cls(tuple(tokenize(raw)), raw)

    @classmethod
    def from_tokens(cls, tokens: Iterable[str]) -> "Sentence":
        toks = tuple(tokens)
        return cls(toks, join_tokens(toks))

    def __len__(self) -> int:
        return len(self.tokens)


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash, used as the vocabulary fingerprint."""
    h = _FNV64_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV64_PRIME) & _MASK64
    return h


class Vocabulary:
    """Frequency-ranked word list with stable integer ids.

    Entries are ordered by count descending with ties broken lexicographically,
    and the id of a word is its position in that ordering.
    """

    __slots__ = ("words", "counts", "_ids", "_fingerprint")

    def __init__(self, entries: Iterable[tuple[str, int]]):
        ordered = sorted(entries, key=lambda e: (-e[1], e[0]))
        self.words: tuple[str, ...] = tuple(w for w, _ in ordered)
        self.counts: tuple[int, ...] = tuple(c for _, c in ordered)
        self._ids = {w: i for i, w in enumerate(self.words)}
        if len(self._ids) != len(self.words):
            raise ContractError("vocabulary contains duplicate words")
        self._fingerprint: int | None = None

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._ids

    def id_of(self, word: str) -> int:
        return self._ids[word]

    def get_id(self, word: str) -> int | None:
        return self._ids.get(word)

    def word(self, idx: int) -> str:
        return self.words[idx]

    def items(self) -> Iterable[tuple[str, int]]:
        return zip(self.words, self.counts)

    @property
    def fingerprint(self) -> int:
        """FNV-1a 64 of the newline-joined words, cached after first use."""
        if self._fingerprint is None:
            self._fingerprint = fnv1a64("\n".join(self.words).encode("utf-8"))
        return self._fingerprint


def load_vocabulary(path: str | Path, max_size: int) -> Vocabulary:
    """Read a ``word<TAB>count`` file and keep the top `max_size` entries.

    Words are lowercased; duplicate lines (after case folding) are merged by
    summing counts. Malformed lines raise with the offending line number.
    """
    merged: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataFormatError(
                    f"{path}: line {lineno}: expected 'word<TAB>count', got {line!r}"
                )
            word, count_text = parts
            word = word.lower()
            if not is_canonical_token(word):
                raise DataFormatError(
                    f"{path}: line {lineno}: not a valid single token: {parts[0]!r}"
                )
            try:
                count = int(count_text)
            except ValueError:
                raise DataFormatError(
                    f"{path}: line {lineno}: count is not an integer: {count_text!r}"
                ) from None
            if count < 0:
                raise DataFormatError(
                    f"{path}: line {lineno}: count must be non-negative"
                )
            merged[word] = merged.get(word, 0) + count
    ordered = sorted(merged.items(), key=lambda e: (-e[1], e[0]))
    return Vocabulary(ordered[:max_size])


def write_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for word, count in vocab.items():
            fh.write(f"{word}\t{count}\n")


def read_corpus(path: str | Path) -> list[Sentence]:
    """One sentence per line; empty lines become empty sentences."""
    with open(path, encoding="utf-8") as fh:
        return [Sentence.from_raw(line.rstrip("\n")) for line in fh]


def write_corpus(sentences: Sequence[Sentence], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for sentence in sentences:
            fh.write(join_tokens(sentence.tokens) + "\n")


def read_labeled(path: str | Path) -> list[tuple[Sentence, str]]:
    """``text<TAB>label`` per line, as used by the classification commands."""
    examples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataFormatError(
                    f"{path}: line {lineno}: expected 'text<TAB>label'"
                )
            examples.append((Sentence.from_raw(parts[0]), parts[1]))
    return examples


def read_pairs(path: str | Path) -> tuple[list[tuple[Sentence, Sentence]], int]:
    """``noisy<TAB>clean`` pairs; token-misaligned pairs are dropped and counted.

    Returns (aligned pairs, number of misaligned pairs skipped).
    """
    pairs = []
    skipped = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataFormatError(
                    f"{path}: line {lineno}: expected 'noisy<TAB>clean'"
                )
            noisy = Sentence.from_raw(parts[0])
            clean = Sentence.from_raw(parts[1])
            if len(noisy) != len(clean):
                skipped += 1
                continue
            pairs.append((noisy, clean))
    return pairs, skipped
