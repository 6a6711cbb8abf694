"""Distance-1 candidate clusters over a vocabulary.

Two words are within one unit edit iff they are equal, one is a
single-character deletion of the other, or they share a single-character
deletion (the substitution case). The index therefore files every vocabulary
word under itself and each of its one-character deletions; a query gathers
candidate ids through the same key set and verifies each candidate with an
exact distance check, so correctness never depends on the key heuristic alone.
"""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

from . import binio
from .errors import ContractError, DataFormatError
from .text import Vocabulary

# A cluster is the ascending tuple of vocabulary ids within distance <= 1.
Cluster = tuple[int, ...]

INDEX_MAGIC = b"FIDX"
INDEX_VERSION = 1

_CACHE_LIMIT = 1 << 20


def deletion_keys(word: str) -> set[str]:
    """The word itself plus every string obtained by deleting one character."""
    keys = {word}
    for i in range(len(word)):
        keys.add(word[:i] + word[i + 1 :])
    return keys


def within_one_edit(a: str, b: str) -> bool:
    """Unit-cost Levenshtein(a, b) <= 1, checked in a single scan."""
    la, lb = len(a), len(b)
    if abs(la - lb) > 1:
        return False
    if la == lb:
        if a == b:
            return True
        mismatches = 0
        for x, y in zip(a, b):
            if x != y:
                mismatches += 1
                if mismatches > 1:
                    return False
        return True
    if la > lb:
        a, b = b, a
        la, lb = lb, la
    # b is one character longer: a must equal b minus one character
    i = 0
    while i < la and a[i] == b[i]:
        i += 1
    return a[i:] == b[i + 1 :]


class ClusterIndex:
    """Answers "which vocabulary words are within one edit of this string?".

    Immutable after construction; queries are memoized but correct with the
    cache disabled (plain dict writes are atomic under the GIL, so concurrent
    readers are safe).
    """

    def __init__(self, vocab: Vocabulary):
        if len(vocab) == 0:
            raise ContractError("cannot index an empty vocabulary")
        self.vocab = vocab
        self.max_word_len = max(len(w) for w in vocab.words)
        deletion_map: dict[str, set[int]] = defaultdict(set)
        for idx, word in enumerate(vocab.words):
            for key in deletion_keys(word):
                deletion_map[key].add(idx)
        self.deletion_map: dict[str, frozenset[int]] = {
            k: frozenset(v) for k, v in deletion_map.items()
        }
        self._cache: dict[str, Cluster] = {}

    def query(self, word: str) -> Cluster:
        if not word:
            raise ContractError("query word must be non-empty")
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        if len(word) > self.max_word_len + 1:
            result: Cluster = ()
        else:
            candidates: set[int] = set()
            for key in deletion_keys(word):
                bucket = self.deletion_map.get(key)
                if bucket:
                    candidates.update(bucket)
            words = self.vocab.words
            result = tuple(
                sorted(i for i in candidates if within_one_edit(word, words[i]))
            )
        if len(self._cache) < _CACHE_LIMIT:
            self._cache[word] = result
        return result


def build_index(vocab: Vocabulary) -> ClusterIndex:
    return ClusterIndex(vocab)


def query_cluster(index: ClusterIndex, word: str) -> Cluster:
    return index.query(word)


def effective_vocabulary(index: ClusterIndex) -> set[int]:
    """Union of the clusters of all vocabulary words (equals the full id set)."""
    covered: set[int] = set()
    for word in index.vocab.words:
        covered.update(index.query(word))
    return covered


def save_index(index: ClusterIndex, path: str | Path) -> None:
    """Serialize the vocabulary; the deletion map is rebuilt on load."""
    vocab = index.vocab
    with open(path, "wb") as fh:
        fh.write(INDEX_MAGIC)
        binio.write_u8(fh, INDEX_VERSION)
        binio.write_u64(fh, vocab.fingerprint)
        binio.write_u32(fh, len(vocab))
        for word, count in vocab.items():
            encoded = word.encode("utf-8")
            binio.write_u16(fh, len(encoded))
            fh.write(encoded)
            binio.write_u64(fh, count)


def load_index(path: str | Path) -> ClusterIndex:
    with open(path, "rb") as fh:
        reader = binio.Reader(fh, "FiRo index")
        binio.expect_magic(reader, INDEX_MAGIC)
        binio.expect_version(reader, INDEX_VERSION)
        fingerprint = reader.u64()
        size = reader.u32()
        entries = []
        for _ in range(size):
            n = reader.u16()
            word = reader.utf8(n)
            count = reader.u64()
            entries.append((word, count))
    vocab = Vocabulary(entries)
    if vocab.fingerprint != fingerprint:
        raise DataFormatError(
            "FiRo index file is corrupt: vocabulary fingerprint mismatch"
        )
    return ClusterIndex(vocab)
