"""The sanitizer network.

Words become semi-character embeddings (first char, unordered mean of internal
chars, last char), a learned convex combination mixes each embedding with its
immediate neighbors, and the result is scored against the output embeddings of
the token's edit-distance-1 candidate cluster. The highest-probability
candidate is emitted; tokens with an empty cluster pass through verbatim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import binio
from .cluster import Cluster, ClusterIndex
from .errors import ConfigError, ContractError
from .text import Sentence

ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789'-"

MODEL_MAGIC = b"FIRO"
MODEL_VERSION = 1

DEFAULT_CHAR_DIM = 64


def logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def round_f32(array: np.ndarray) -> np.ndarray:
    """Snap float64 values onto the float32 grid used by the file format."""
    return array.astype(np.float32).astype(np.float64)


class CharTable:
    """Character embedding rows; the final extra row embeds any unsupported character."""

    __slots__ = ("alphabet", "vectors", "_row")

    def __init__(self, alphabet: str, vectors: np.ndarray):
        if vectors.ndim != 2 or vectors.shape[0] != len(alphabet) + 1:
            raise ContractError(
                "char table needs one row per alphabet character plus the unknown row"
            )
        self.alphabet = alphabet
        self.vectors = vectors
        self._row = {c: i for i, c in enumerate(alphabet)}

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def row(self, char: str) -> int:
        return self._row.get(char, len(self.alphabet))


def compose_word(chars: CharTable, word: str) -> np.ndarray:
    """Semi-character embedding: ``[first | mean of internal | last]``.

    Internal rows are summed in sorted-row order, so any permutation of the
    internal characters produces a bit-identical vector. Words of length one
    use the same character as both ends; the internal block is zero for words
    shorter than three characters.
    """
    if not word:
        raise ContractError("cannot embed an empty word")
    d = chars.dim
    rows = [chars.row(c) for c in word]
    out = np.zeros(3 * d)
    out[:d] = chars.vectors[rows[0]]
    out[2 * d :] = chars.vectors[rows[-1]]
    if len(rows) > 2:
        inner = np.asarray(sorted(rows[1:-1]), dtype=np.intp)
        out[d : 2 * d] = chars.vectors[inner].sum(axis=0) / inner.size
    return out


@dataclass
class FiroModel:
    """Trainable parameters plus the fingerprint of the vocabulary they target."""

    chars: CharTable
    alpha_raw: float
    output_vectors: np.ndarray  # one row per vocabulary word, width 3 * chars.dim
    vocab_fingerprint: int

    @property
    def d_char(self) -> int:
        return self.chars.dim

    @property
    def alpha(self) -> float:
        """Self-weight of the context mix, always in (0, 1)."""
        return logistic(self.alpha_raw)


def init_model(vocab_size: int, vocab_fingerprint: int,
               d_char: int = DEFAULT_CHAR_DIM, seed: int = 13) -> FiroModel:
    """Fresh model with U[-1/sqrt(d), 1/sqrt(d)] tables and alpha = 0.5.

    Initial values are rounded to float32 so a freshly saved model reloads
    bit-exactly.
    """
    rng = np.random.default_rng(seed)
    bound = 1.0 / math.sqrt(d_char)
    char_vectors = round_f32(
        rng.uniform(-bound, bound, size=(len(ALPHABET) + 1, d_char))
    )
    output_vectors = round_f32(
        rng.uniform(-bound, bound, size=(vocab_size, 3 * d_char))
    )
    return FiroModel(
        chars=CharTable(ALPHABET, char_vectors),
        alpha_raw=0.0,
        output_vectors=output_vectors,
        vocab_fingerprint=vocab_fingerprint,
    )


def compose_word_embedding(model: FiroModel, word: str) -> np.ndarray:
    return compose_word(model.chars, word)


def aggregate_context(model: FiroModel, embeddings: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    """Mix each embedding with its neighbors: ``a*h[i] + 0.5*(1-a)*(h[i-1]+h[i+1])``.

    Positions past either end count as zero vectors.
    """
    h = np.asarray(embeddings, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] == 0:
        raise ContractError("need a non-empty list of equal-length vectors")
    a = model.alpha
    side = 0.5 * (1.0 - a)
    out = a * h
    out[1:] += side * h[:-1]
    out[:-1] += side * h[1:]
    return out


def score_cluster(model: FiroModel, contextual: np.ndarray, cluster: Cluster) -> np.ndarray:
    """Softmax of the contextual embedding dotted with each candidate's output row."""
    if not cluster:
        raise ContractError("cannot score an empty cluster")
    logits = model.output_vectors[list(cluster)] @ contextual
    logits -= logits.max()
    probs = np.exp(logits)
    probs /= probs.sum()
    return probs


@dataclass(frozen=True)
class TokenDecision:
    """What happened at one position; `chosen_id` is None for pass-through."""

    cluster_size: int
    chosen_id: int | None
    probability: float


@dataclass(frozen=True)
class SanitizeResult:
    output_tokens: tuple[str, ...]
    per_token: tuple[TokenDecision, ...]

    def sentence(self) -> Sentence:
        return Sentence.from_tokens(self.output_tokens)


def check_compatible(model: FiroModel, index: ClusterIndex) -> None:
    if model.vocab_fingerprint != index.vocab.fingerprint:
        raise ConfigError(
            "model/index mismatch: the model was trained against a different vocabulary"
        )
    if model.output_vectors.shape[0] != len(index.vocab):
        raise ConfigError(
            "model/index mismatch: output table row count differs from vocabulary size"
        )


def sanitize(model: FiroModel, index: ClusterIndex, sentence: Sentence) -> SanitizeResult:
    """Infer the noise-free form of every token.

    Each token's cluster is scored with the token's contextual embedding; the
    argmax candidate is emitted (ties go to the lowest vocabulary id, i.e. the
    most frequent word). Tokens with an empty cluster pass through verbatim,
    so out-of-vocabulary content is preserved.
    """
    check_compatible(model, index)
    tokens = sentence.tokens
    if not tokens:
        return SanitizeResult((), ())
    composed = np.stack([compose_word(model.chars, t) for t in tokens])
    contextual = aggregate_context(model, composed)
    out_tokens: list[str] = []
    decisions: list[TokenDecision] = []
    words = index.vocab.words
    for i, token in enumerate(tokens):
        cluster = index.query(token)
        if cluster:
            probs = score_cluster(model, contextual[i], cluster)
            k = int(np.argmax(probs))  # first max wins: lowest id among ties
            out_tokens.append(words[cluster[k]])
            decisions.append(TokenDecision(len(cluster), cluster[k], float(probs[k])))
        else:
            out_tokens.append(token)
            decisions.append(TokenDecision(0, None, 1.0))
    return SanitizeResult(tuple(out_tokens), tuple(decisions))


def firo_sanitizer(model: FiroModel, index: ClusterIndex) -> Callable[[Sentence], Sentence]:
    """Bind model and index into a plain Sentence -> Sentence function."""
    check_compatible(model, index)

    def run(sentence: Sentence) -> Sentence:
        return sanitize(model, index, sentence).sentence()

    return run


def save_model(model: FiroModel, path: str | Path) -> None:
    """Binary little-endian format; see `load_model` for the layout.

    The char table is written with one extra row (the unknown-character
    vector) after the alphabet rows.
    """
    alphabet_bytes = model.chars.alphabet.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        binio.write_u8(fh, MODEL_VERSION)
        binio.write_u32(fh, model.d_char)
        binio.write_u32(fh, len(alphabet_bytes))
        fh.write(alphabet_bytes)
        binio.write_f32_block(fh, model.chars.vectors)
        binio.write_f32(fh, model.alpha_raw)
        binio.write_u32(fh, model.output_vectors.shape[0])
        binio.write_u64(fh, model.vocab_fingerprint)
        binio.write_f32_block(fh, model.output_vectors)


def load_model(path: str | Path) -> FiroModel:
    with open(path, "rb") as fh:
        reader = binio.Reader(fh, "FiRo model")
        binio.expect_magic(reader, MODEL_MAGIC)
        binio.expect_version(reader, MODEL_VERSION)
        d_char = reader.u32()
        alphabet_len = reader.u32()
        alphabet = reader.utf8(alphabet_len)
        n_rows = len(alphabet) + 1
        char_vectors = reader.f32_block(n_rows * d_char).astype(np.float64)
        char_vectors = char_vectors.reshape(n_rows, d_char)
        alpha_raw = float(reader.f32())
        vocab_size = reader.u32()
        fingerprint = reader.u64()
        output = reader.f32_block(vocab_size * 3 * d_char).astype(np.float64)
        output = output.reshape(vocab_size, 3 * d_char)
    return FiroModel(
        chars=CharTable(alphabet, char_vectors),
        alpha_raw=alpha_raw,
        output_vectors=output,
        vocab_fingerprint=fingerprint,
    )
