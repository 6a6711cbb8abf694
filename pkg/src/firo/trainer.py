"""Training: noise-augmented cross-entropy over restricted clusters.

The loss at each position is -log p(clean token | noisy token's cluster),
averaged over positions where the cluster can express the target. Gradients
are derived by hand (the model is three small pieces: char table, one mixing
scalar, output rows) and applied with Adam. Output-table moments are allocated
lazily per row so untouched rows stay bit-identical across steps.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cluster import ClusterIndex
from .errors import ContractError
from .model import FiroModel, compose_word, init_model, round_f32, sanitize
from .noise import ALL_KINDS, DISTANCE_ONE_KINDS, perturb_sentence, perturb_sentence_with_rng
from .seeds import derive
from .text import Sentence, Vocabulary

logger = logging.getLogger("firo.trainer")

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class TrainConfig:
    batch_size: int = 50
    learning_rate: float = 1e-3
    noise_budget: int = 2
    max_epochs: int = 50
    patience: int = 3
    seed: int = 13
    d_char: int = 64
    holdout_fraction: float = 0.1

    def __post_init__(self):
        if self.batch_size < 1:
            raise ContractError("batch_size must be >= 1")
        if self.learning_rate < 0:
            raise ContractError("learning_rate must be non-negative")
        if self.noise_budget < 0:
            raise ContractError("noise_budget must be non-negative")


@dataclass
class TrainStats:
    losses: list[float] = field(default_factory=list)
    recoveries: list[float] = field(default_factory=list)
    final_alpha: float = 0.5
    best_epoch: int = -1


@dataclass
class LossGradients:
    """Gradients for the char table, the raw mixing scalar, and only the
    output rows that appeared in some cluster."""

    char: np.ndarray
    alpha_raw: float
    output_rows: dict[int, np.ndarray]


def _zero_gradients(model: FiroModel) -> LossGradients:
    return LossGradients(np.zeros_like(model.chars.vectors), 0.0, {})


def training_loss(model: FiroModel, index: ClusterIndex,
                  clean: Sentence, noisy: Sentence) -> tuple[float, LossGradients, int]:
    """Mean cluster cross-entropy over the valid positions of one pair.

    A position is valid when the noisy token's cluster is non-empty and
    contains the clean token. Returns (loss, gradients, number of valid
    positions); a pair with no valid position contributes zero loss and zero
    gradients.
    """
    if len(clean) != len(noisy):
        raise ContractError("clean and noisy sentences must be token-aligned")
    length = len(noisy)
    if length == 0:
        return 0.0, _zero_gradients(model), 0

    chars = model.chars
    d = chars.dim
    composed = np.stack([compose_word(chars, t) for t in noisy.tokens])
    a = model.alpha
    side = 0.5 * (1.0 - a)
    contextual = a * composed
    contextual[1:] += side * composed[:-1]
    contextual[:-1] += side * composed[1:]

    vocab = index.vocab
    records = []
    loss = 0.0
    for i in range(length):
        cluster = index.query(noisy.tokens[i])
        if not cluster:
            continue
        target_id = vocab.get_id(clean.tokens[i])
        if target_id is None or target_id not in cluster:
            continue
        rows = model.output_vectors[list(cluster)]
        logits = rows @ contextual[i]
        logits -= logits.max()
        probs = np.exp(logits)
        probs /= probs.sum()
        t_idx = cluster.index(target_id)
        loss -= np.log(probs[t_idx])
        records.append((i, cluster, t_idx, probs, rows))

    n_valid = len(records)
    if n_valid == 0:
        return 0.0, _zero_gradients(model), 0
    loss /= n_valid

    # Backward pass. d_logits = (p - onehot(target)) / n_valid per position.
    inv = 1.0 / n_valid
    g_contextual = np.zeros_like(contextual)
    output_rows: dict[int, np.ndarray] = {}
    for i, cluster, t_idx, probs, rows in records:
        d_logits = probs * inv
        d_logits[t_idx] -= inv
        g_contextual[i] = rows.T @ d_logits
        for j, cid in enumerate(cluster):
            contrib = d_logits[j] * contextual[i]
            existing = output_rows.get(cid)
            if existing is None:
                output_rows[cid] = contrib
            else:
                existing += contrib

    # Context mix: c_i = a*h_i + side*(h_{i-1} + h_{i+1}).
    g_composed = a * g_contextual
    g_composed[:-1] += side * g_contextual[1:]
    g_composed[1:] += side * g_contextual[:-1]

    left = np.zeros_like(composed)
    left[1:] = composed[:-1]
    right = np.zeros_like(composed)
    right[:-1] = composed[1:]
    g_alpha = float(np.sum(g_contextual * (composed - 0.5 * (left + right))))
    g_alpha_raw = g_alpha * a * (1.0 - a)

    char_grad = np.zeros_like(chars.vectors)
    for k, token in enumerate(noisy.tokens):
        g = g_composed[k]
        if not g.any():
            continue
        rows_k = [chars.row(c) for c in token]
        char_grad[rows_k[0]] += g[:d]
        char_grad[rows_k[-1]] += g[2 * d :]
        if len(rows_k) > 2:
            inner = rows_k[1:-1]
            share = g[d : 2 * d] / len(inner)
            for r in inner:
                char_grad[r] += share
    return float(loss), LossGradients(char_grad, g_alpha_raw, output_rows), n_valid


class _AdamState:
    def __init__(self, model: FiroModel):
        self.t = 0
        self.char_m = np.zeros_like(model.chars.vectors)
        self.char_v = np.zeros_like(model.chars.vectors)
        self.alpha_m = 0.0
        self.alpha_v = 0.0
        # row id -> [m, v, step count]; created on first touch
        self.rows: dict[int, list] = {}

    def step(self, model: FiroModel, grads: LossGradients, lr: float) -> None:
        b1, b2, eps = ADAM_BETA1, ADAM_BETA2, ADAM_EPS
        self.t += 1
        t = self.t

        self.char_m = b1 * self.char_m + (1 - b1) * grads.char
        self.char_v = b2 * self.char_v + (1 - b2) * grads.char**2
        m_hat = self.char_m / (1 - b1**t)
        v_hat = self.char_v / (1 - b2**t)
        vectors = model.chars.vectors
        vectors -= lr * m_hat / (np.sqrt(v_hat) + eps)
        vectors[:] = round_f32(vectors)

        self.alpha_m = b1 * self.alpha_m + (1 - b1) * grads.alpha_raw
        self.alpha_v = b2 * self.alpha_v + (1 - b2) * grads.alpha_raw**2
        m_hat_a = self.alpha_m / (1 - b1**t)
        v_hat_a = self.alpha_v / (1 - b2**t)
        new_alpha = model.alpha_raw - lr * m_hat_a / (v_hat_a**0.5 + eps)
        model.alpha_raw = float(np.float32(new_alpha))

        for cid in sorted(grads.output_rows):
            g = grads.output_rows[cid]
            state = self.rows.get(cid)
            if state is None:
                state = [np.zeros_like(g), np.zeros_like(g), 0]
                self.rows[cid] = state
            state[2] += 1
            state[0] = b1 * state[0] + (1 - b1) * g
            state[1] = b2 * state[1] + (1 - b2) * g**2
            m_hat_r = state[0] / (1 - b1 ** state[2])
            v_hat_r = state[1] / (1 - b2 ** state[2])
            row = model.output_vectors[cid]
            row -= lr * m_hat_r / (np.sqrt(v_hat_r) + eps)
            model.output_vectors[cid] = round_f32(row)


def _holdout_recovery(model: FiroModel, index: ClusterIndex,
                      holdout: Sequence[Sentence], seed: int) -> float:
    """Token match rate against clean text after single-token noising.

    Uses the reversible op set: swaps land outside every cluster by
    construction and would only add a constant miss floor to the metric.
    """
    matches = 0
    total = 0
    for i, clean in enumerate(holdout):
        if len(clean) == 0:
            continue
        noisy = perturb_sentence(clean, 1, derive(seed, i), DISTANCE_ONE_KINDS)
        out = sanitize(model, index, noisy).output_tokens
        matches += sum(o == c for o, c in zip(out, clean.tokens))
        total += len(clean)
    return matches / total if total else 1.0


def train(corpus: Sequence[Sentence], vocab: Vocabulary, index: ClusterIndex,
          config: TrainConfig, holdout: Sequence[Sentence] | None = None,
          on_epoch: Callable[[int, float, float, float], None] | None = None,
          ) -> tuple[FiroModel, TrainStats]:
    """Minibatch training with per-epoch re-noising and early stopping.

    Each sentence is re-noised every epoch with a budget drawn uniformly from
    {0..noise_budget} (budget 0 keeps clean inputs in the mix). Training stops
    after `max_epochs` or once held-out recovery has not improved for
    `patience` consecutive epochs; the best-held-out checkpoint is returned.
    Fully deterministic for a given config.
    """
    if not corpus:
        raise ContractError("training corpus is empty")
    if vocab is not index.vocab and vocab.fingerprint != index.vocab.fingerprint:
        raise ContractError("index was built for a different vocabulary")

    split_rng = random.Random(derive(config.seed, 0x5EED))
    if holdout is None:
        order = list(range(len(corpus)))
        split_rng.shuffle(order)
        n_hold = int(len(corpus) * config.holdout_fraction)
        if len(corpus) > 1:
            n_hold = min(max(n_hold, 1), len(corpus) - 1)
        else:
            n_hold = 0
        holdout = [corpus[i] for i in order[:n_hold]]
        train_set = [corpus[i] for i in order[n_hold:]]
    else:
        train_set = list(corpus)
        holdout = list(holdout)

    model = init_model(len(vocab), vocab.fingerprint, config.d_char, config.seed)
    opt = _AdamState(model)
    stats = TrainStats()
    eval_seed = derive(config.seed, 0xE7A1)

    best_recovery = -1.0
    best_snapshot = None
    stale = 0
    for epoch in range(config.max_epochs):
        order = list(range(len(train_set)))
        random.Random(derive(config.seed, epoch, 0xB4)).shuffle(order)
        epoch_loss = 0.0
        skipped = 0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            scale = 1.0 / len(batch)
            batch_grads = _zero_gradients(model)
            for idx in batch:
                clean = train_set[idx]
                pair_rng = random.Random(derive(config.seed, epoch, idx))
                budget = pair_rng.randint(0, config.noise_budget)
                noisy = perturb_sentence_with_rng(clean, budget, pair_rng, ALL_KINDS)
                loss, grads, n_valid = training_loss(model, index, clean, noisy)
                if n_valid == 0:
                    skipped += 1
                    continue
                epoch_loss += loss
                batch_grads.char += scale * grads.char
                batch_grads.alpha_raw += scale * grads.alpha_raw
                for cid, g in grads.output_rows.items():
                    existing = batch_grads.output_rows.get(cid)
                    if existing is None:
                        batch_grads.output_rows[cid] = scale * g
                    else:
                        existing += scale * g
            opt.step(model, batch_grads, config.learning_rate)
        mean_loss = epoch_loss / len(train_set)
        recovery = _holdout_recovery(model, index, holdout, eval_seed)
        stats.losses.append(mean_loss)
        stats.recoveries.append(recovery)
        if skipped:
            logger.debug("epoch %d: %d sentences had no trainable position", epoch, skipped)
        if on_epoch is not None:
            on_epoch(epoch, mean_loss, recovery, model.alpha)

        if recovery > best_recovery:
            best_recovery = recovery
            best_snapshot = (
                model.chars.vectors.copy(),
                model.alpha_raw,
                model.output_vectors.copy(),
            )
            stats.best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                logger.info("early stop at epoch %d (best recovery %.4f)", epoch, best_recovery)
                break

    if best_snapshot is not None:
        model.chars.vectors[:] = best_snapshot[0]
        model.alpha_raw = best_snapshot[1]
        model.output_vectors[:] = best_snapshot[2]
    stats.final_alpha = model.alpha
    return model, stats
