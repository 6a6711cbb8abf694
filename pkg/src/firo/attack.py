"""Black-box adversarial search against a pluggable victim.

The beam search only ever calls `predict`/`loss` on the victim, both of which
count queries; it never inspects parameters. A small bag-of-embeddings linear
classifier is included as a desk-scale victim, and a wrapper runs any victim
behind the sanitizer so combined pipelines can be attacked the same way.
"""

from __future__ import annotations

import abc
import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import binio
from .cluster import ClusterIndex
from .errors import ContractError
from .model import CharTable, FiroModel, compose_word, firo_sanitizer, round_f32
from .noise import ALL_KINDS, OpKind, apply_op, is_perturbable, sample_changing_op, changing_variants
from .seeds import derive
from .text import Sentence

logger = logging.getLogger("firo.attack")

VICTIM_MAGIC = b"FVIC"
VICTIM_VERSION = 1


class Victim(abc.ABC):
    """Query-only classification interface.

    `queries` counts every predict/loss call, which is all an attacker may do.
    """

    def __init__(self):
        self.queries = 0

    def predict(self, sentence: Sentence) -> str:
        self.queries += 1
        return self._predict(sentence)

    def loss(self, sentence: Sentence, gold: str) -> float:
        self.queries += 1
        return self._loss(sentence, gold)

    @abc.abstractmethod
    def _predict(self, sentence: Sentence) -> str: ...

    @abc.abstractmethod
    def _loss(self, sentence: Sentence, gold: str) -> float: ...


class ToyVictim(Victim):
    """Mean of semi-character word embeddings -> linear layer -> softmax."""

    def __init__(self, chars: CharTable, weights: np.ndarray, bias: np.ndarray,
                 labels: tuple[str, ...], train_accuracy: float = float("nan")):
        super().__init__()
        self.chars = chars
        self.weights = weights
        self.bias = bias
        self.labels = labels
        self.train_accuracy = train_accuracy
        self._label_idx = {lab: i for i, lab in enumerate(labels)}

    def embed(self, sentence: Sentence) -> np.ndarray:
        if not sentence.tokens:
            return np.zeros(self.weights.shape[1])
        parts = [compose_word(self.chars, t) for t in sentence.tokens]
        return np.add.reduce(parts) / len(parts)

    def _probs(self, sentence: Sentence) -> np.ndarray:
        logits = self.weights @ self.embed(sentence) + self.bias
        logits -= logits.max()
        p = np.exp(logits)
        return p / p.sum()

    def _predict(self, sentence: Sentence) -> str:
        return self.labels[int(np.argmax(self._probs(sentence)))]

    def _loss(self, sentence: Sentence, gold: str) -> float:
        idx = self._label_idx.get(gold)
        if idx is None:
            raise ContractError(f"unknown gold label {gold!r}")
        return float(-np.log(self._probs(sentence)[idx]))


def train_toy_victim(examples: Sequence[tuple[Sentence, str]], d_char: int = 32,
                     seed: int = 7, learning_rate: float = 0.05,
                     max_rounds: int = 400, target_accuracy: float = 0.99) -> ToyVictim:
    """Fit the linear head on top of a fixed seeded char table.

    Embeddings are constant, so this is softmax regression on precomputed
    features, run full-batch with Adam until the training accuracy target or
    the round limit. A corpus the head cannot separate to at least 90% yields
    a best-effort victim plus a warning.
    """
    labels = tuple(sorted({label for _, label in examples}))
    if len(labels) < 2:
        raise ContractError("need at least two distinct labels to train a victim")
    from .model import ALPHABET  # shared character set

    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(d_char)
    chars = CharTable(
        ALPHABET,
        round_f32(rng.uniform(-bound, bound, size=(len(ALPHABET) + 1, d_char))),
    )
    dim = 3 * d_char
    probe = ToyVictim(chars, np.zeros((len(labels), dim)), np.zeros(len(labels)), labels)
    features = np.stack([probe.embed(s) for s, _ in examples])
    y = np.array([labels.index(label) for _, label in examples])
    onehot = np.eye(len(labels))[y]

    weights = round_f32(rng.uniform(-bound, bound, size=(len(labels), dim)))
    bias = np.zeros(len(labels))
    m_w = np.zeros_like(weights)
    v_w = np.zeros_like(weights)
    m_b = np.zeros_like(bias)
    v_b = np.zeros_like(bias)
    b1, b2, eps = 0.9, 0.999, 1e-8
    accuracy = 0.0
    for t in range(1, max_rounds + 1):
        logits = features @ weights.T + bias
        logits -= logits.max(axis=1, keepdims=True)
        probs = np.exp(logits)
        probs /= probs.sum(axis=1, keepdims=True)
        accuracy = float(np.mean(np.argmax(probs, axis=1) == y))
        if accuracy >= target_accuracy:
            break
        g = (probs - onehot) / len(examples)
        g_w = g.T @ features
        g_b = g.sum(axis=0)
        m_w = b1 * m_w + (1 - b1) * g_w
        v_w = b2 * v_w + (1 - b2) * g_w**2
        weights -= learning_rate * (m_w / (1 - b1**t)) / (np.sqrt(v_w / (1 - b2**t)) + eps)
        m_b = b1 * m_b + (1 - b1) * g_b
        v_b = b2 * v_b + (1 - b2) * g_b**2
        bias -= learning_rate * (m_b / (1 - b1**t)) / (np.sqrt(v_b / (1 - b2**t)) + eps)
    if accuracy < 0.9:
        logger.warning("toy victim plateaued at training accuracy %.3f", accuracy)
    return ToyVictim(chars, round_f32(weights), round_f32(bias), labels, accuracy)


class SanitizedVictim(Victim):
    """Runs the sanitizer in front of another victim; attacked as one model."""

    def __init__(self, model: FiroModel, index: ClusterIndex, inner: Victim):
        super().__init__()
        self._sanitize = firo_sanitizer(model, index)
        self.inner = inner

    def _predict(self, sentence: Sentence) -> str:
        return self.inner.predict(self._sanitize(sentence))

    def _loss(self, sentence: Sentence, gold: str) -> float:
        return self.inner.loss(self._sanitize(sentence), gold)


@dataclass(frozen=True)
class AttackResult:
    adversarial: Sentence
    success: bool
    words_changed: int
    queries_used: int
    beam_trace: tuple | None = None


def _sampled_variants(token: str, rng: random.Random, branch: int,
                      kinds: frozenset[OpKind]) -> list[str]:
    seen: list[str] = []
    for _ in range(branch):
        op = sample_changing_op(token, rng, kinds)
        if op is None:
            break
        variant = apply_op(token, op)
        if variant not in seen:
            seen.append(variant)
    return seen


def beam_attack(victim: Victim, x: Sentence, gold: str, budget: int,
                beam: int = 5, branch: int | None = 8, seed: int = 0,
                kinds: frozenset[OpKind] = ALL_KINDS,
                record_trace: bool = False) -> AttackResult:
    """Beam search over single-token edits, one extra modified token per round.

    Each round expands every beam entry at every not-yet-modified perturbable
    position with `branch` sampled single-edit candidates (all distinct edits
    when `branch` is None), scoring candidates by victim loss. The search
    stops early when the top candidate flips the prediction. Loss queries are
    bounded by budget * beam * positions * branch, plus at most budget + 1
    prediction probes for flip detection.
    """
    if budget < 1:
        raise ContractError("attack budget must be >= 1")
    if beam < 1:
        raise ContractError("beam width must be >= 1")
    start_queries = victim.queries
    positions = [i for i, t in enumerate(x.tokens) if is_perturbable(t)]
    if not positions:
        return AttackResult(x, False, 0, 0, () if record_trace else None)

    rng = random.Random(derive(seed, len(x.tokens)))
    frontier: list[tuple[tuple[str, ...], frozenset[int]]] = [(x.tokens, frozenset())]
    best_score = -float("inf")
    best_tokens = x.tokens
    best_modified: frozenset[int] = frozenset()
    trace: list[tuple[str, float]] = []

    for _ in range(budget):
        scored: list[tuple[float, tuple[str, ...], frozenset[int]]] = []
        for tokens, modified in frontier:
            for pos in positions:
                if pos in modified:
                    continue
                if branch is None:
                    variants = changing_variants(tokens[pos], kinds)
                else:
                    variants = _sampled_variants(tokens[pos], rng, branch, kinds)
                for variant in variants:
                    cand = tokens[:pos] + (variant,) + tokens[pos + 1 :]
                    score = victim.loss(Sentence.from_tokens(cand), gold)
                    scored.append((score, cand, modified | {pos}))
        if not scored:
            break
        # ties broken by token text; stable sort keeps expansion order beyond that
        scored.sort(key=lambda item: (-item[0], item[1]))
        top_score, top_tokens, top_modified = scored[0]
        if top_score > best_score:
            best_score, best_tokens, best_modified = top_score, top_tokens, top_modified
        if record_trace:
            trace.append((" ".join(top_tokens), top_score))
        top_sentence = Sentence.from_tokens(top_tokens)
        if victim.predict(top_sentence) != gold:
            return AttackResult(
                top_sentence, True, len(top_modified),
                victim.queries - start_queries,
                tuple(trace) if record_trace else None,
            )
        frontier = [(tokens, modified) for _, tokens, modified in scored[:beam]]

    final = Sentence.from_tokens(best_tokens)
    success = victim.predict(final) != gold
    return AttackResult(
        final, success, len(best_modified),
        victim.queries - start_queries,
        tuple(trace) if record_trace else None,
    )


# span = (start, end) token offsets; entities compare as (span, type) pairs.
Entity = tuple[tuple[int, int], str]


def tagging_objective(victim_tagger, x: Sentence, gold_entities: Iterable[Entity]) -> float:
    """Count of non-overlapping entities between gold and predicted sets.

    Zero when the tagger reproduces the gold set exactly; grows with every
    missed or spurious entity, so it drops in as a beam-search score.
    """
    gold = set(gold_entities)
    predicted = set(victim_tagger.predict_entities(x))
    return float(len(gold | predicted) - len(gold & predicted))


class TaggingAttackVictim(Victim):
    """Adapts an entity tagger to the attack interface.

    `gold` passed to `loss` is the gold entity set (any iterable of entities);
    `predict` returns the predicted set, so a flip means the entity output
    changed at all.
    """

    def __init__(self, tagger):
        super().__init__()
        self.tagger = tagger

    def _predict(self, sentence: Sentence) -> frozenset:
        return frozenset(self.tagger.predict_entities(sentence))

    def _loss(self, sentence: Sentence, gold) -> float:
        return tagging_objective(self.tagger, sentence, gold)


def save_victim(victim: ToyVictim, path: str | Path) -> None:
    alphabet_bytes = victim.chars.alphabet.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(VICTIM_MAGIC)
        binio.write_u8(fh, VICTIM_VERSION)
        binio.write_u32(fh, victim.chars.dim)
        binio.write_u32(fh, len(alphabet_bytes))
        fh.write(alphabet_bytes)
        binio.write_f32_block(fh, victim.chars.vectors)
        binio.write_u32(fh, len(victim.labels))
        for label in victim.labels:
            encoded = label.encode("utf-8")
            binio.write_u16(fh, len(encoded))
            fh.write(encoded)
        binio.write_f32_block(fh, victim.weights)
        binio.write_f32_block(fh, victim.bias)


def load_victim(path: str | Path) -> ToyVictim:
    with open(path, "rb") as fh:
        reader = binio.Reader(fh, "FiRo victim")
        binio.expect_magic(reader, VICTIM_MAGIC)
        binio.expect_version(reader, VICTIM_VERSION)
        d_char = reader.u32()
        alphabet = reader.utf8(reader.u32())
        rows = len(alphabet) + 1
        char_vectors = reader.f32_block(rows * d_char).astype(np.float64).reshape(rows, d_char)
        n_labels = reader.u32()
        labels = tuple(reader.utf8(reader.u16()) for _ in range(n_labels))
        weights = reader.f32_block(n_labels * 3 * d_char).astype(np.float64)
        weights = weights.reshape(n_labels, 3 * d_char)
        bias = reader.f32_block(n_labels).astype(np.float64)
    return ToyVictim(CharTable(alphabet, char_vectors), weights, bias, labels)
