"""Character-level perturbation: the four basic in-word operations and
budgeted sentence noising used for training augmentation, attacks, and the
robustness/fidelity protocol.
"""

from __future__ import annotations

import enum
import random
import string
from dataclasses import dataclass
from typing import Iterable

from .errors import ContractError
from .text import PUNCT_CHARS, Sentence, is_canonical_token

REPLACEMENT_CHARS = string.ascii_lowercase


class OpKind(enum.Enum):
    SUBSTITUTE = "sub"
    DELETE = "del"
    INSERT = "ins"
    SWAP_ADJACENT = "swap"


# Fixed order so seeded sampling is reproducible regardless of set iteration.
_KIND_ORDER = (OpKind.SUBSTITUTE, OpKind.DELETE, OpKind.INSERT, OpKind.SWAP_ADJACENT)

ALL_KINDS = frozenset(OpKind)

# Swapping two distinct adjacent characters lands at unit-cost distance 2, so
# a swapped token can never re-enter its original's cluster. Evaluations that
# measure cluster decoding quality restrict noise to these reversible ops.
DISTANCE_ONE_KINDS = frozenset({OpKind.SUBSTITUTE, OpKind.DELETE, OpKind.INSERT})

KINDS_BY_NAME = {kind.value: kind for kind in OpKind}


@dataclass(frozen=True)
class PerturbOp:
    """One in-word edit. `char` is the replacement/inserted character and is
    only meaningful for SUBSTITUTE and INSERT."""

    kind: OpKind
    position: int
    char: str | None = None


def apply_op(word: str, op: PerturbOp) -> str:
    """Apply a single edit; positions must be valid and the result non-empty."""
    n = len(word)
    kind, pos = op.kind, op.position
    if kind is OpKind.SUBSTITUTE:
        if not 0 <= pos < n:
            raise ContractError(f"substitute position {pos} out of range for {word!r}")
        if op.char is None:
            raise ContractError("substitute needs a replacement character")
        return word[:pos] + op.char + word[pos + 1 :]
    if kind is OpKind.DELETE:
        if not 0 <= pos < n:
            raise ContractError(f"delete position {pos} out of range for {word!r}")
        if n < 2:
            raise ContractError("refusing to delete the only character of a word")
        return word[:pos] + word[pos + 1 :]
    if kind is OpKind.INSERT:
        if not 0 <= pos <= n:
            raise ContractError(f"insert position {pos} out of range for {word!r}")
        if op.char is None:
            raise ContractError("insert needs a character")
        return word[:pos] + op.char + word[pos:]
    if kind is OpKind.SWAP_ADJACENT:
        if not 0 <= pos < n - 1:
            raise ContractError(f"swap position {pos} out of range for {word!r}")
        return word[:pos] + word[pos + 1] + word[pos] + word[pos + 2 :]
    raise ContractError(f"unknown op kind {kind!r}")


def is_perturbable(token: str) -> bool:
    """Tokens of length >= 2 that are not detached punctuation runs."""
    return len(token) >= 2 and any(c not in PUNCT_CHARS for c in token)


def _result_ok(word: str, op: PerturbOp) -> bool:
    """The op changes the word and the result is still a single valid token."""
    result = apply_op(word, op)
    return result != word and is_canonical_token(result)


def changing_ops(word: str, kind: OpKind) -> list[PerturbOp]:
    """Every application of `kind` that changes `word` into a valid single token.

    Identity substitutions and equal-character swaps are excluded, as are the
    rare edits that would push an internal apostrophe or hyphen onto a token
    edge (the result would no longer survive tokenization whole).
    """
    ops: list[PerturbOp] = []
    n = len(word)
    # Only words carrying punctuation can produce a non-canonical result.
    plain = not any(c in PUNCT_CHARS for c in word)
    if kind is OpKind.SUBSTITUTE:
        candidates = [
            PerturbOp(kind, pos, c)
            for pos in range(n)
            for c in REPLACEMENT_CHARS
            if c != word[pos]
        ]
    elif kind is OpKind.DELETE:
        candidates = [PerturbOp(kind, pos) for pos in range(n)] if n >= 2 else []
    elif kind is OpKind.INSERT:
        candidates = [
            PerturbOp(kind, pos, c)
            for pos in range(n + 1)
            for c in REPLACEMENT_CHARS
        ]
    elif kind is OpKind.SWAP_ADJACENT:
        candidates = [
            PerturbOp(kind, pos) for pos in range(n - 1) if word[pos] != word[pos + 1]
        ]
    else:
        raise ContractError(f"unknown op kind {kind!r}")
    for op in candidates:
        if plain or _result_ok(word, op):
            ops.append(op)
    return ops


def _sample_op_of_kind(word: str, kind: OpKind, rng: random.Random) -> PerturbOp | None:
    """Uniform draw among the changing applications of one kind."""
    n = len(word)
    if not any(c in PUNCT_CHARS for c in word):
        # Fast path: every candidate below is changing and canonical.
        if kind is OpKind.SUBSTITUTE:
            pos = rng.randrange(n)
            others = [c for c in REPLACEMENT_CHARS if c != word[pos]]
            return PerturbOp(kind, pos, rng.choice(others))
        if kind is OpKind.DELETE:
            return PerturbOp(kind, rng.randrange(n)) if n >= 2 else None
        if kind is OpKind.INSERT:
            return PerturbOp(kind, rng.randrange(n + 1), rng.choice(REPLACEMENT_CHARS))
        if kind is OpKind.SWAP_ADJACENT:
            spots = [i for i in range(n - 1) if word[i] != word[i + 1]]
            return PerturbOp(kind, rng.choice(spots)) if spots else None
        raise ContractError(f"unknown op kind {kind!r}")
    ops = changing_ops(word, kind)
    return rng.choice(ops) if ops else None


def _available_kinds(word: str, kinds: Iterable[OpKind]) -> list[OpKind]:
    wanted = set(kinds)
    n = len(word)
    available = []
    plain = not any(c in PUNCT_CHARS for c in word)
    for kind in _KIND_ORDER:
        if kind not in wanted:
            continue
        if plain:
            if kind is OpKind.SUBSTITUTE or kind is OpKind.INSERT:
                ok = n >= 1
            elif kind is OpKind.DELETE:
                ok = n >= 2
            else:
                ok = any(word[i] != word[i + 1] for i in range(n - 1))
        else:
            ok = bool(changing_ops(word, kind))
        if ok:
            available.append(kind)
    return available


def sample_changing_op(word: str, rng: random.Random,
                       kinds: Iterable[OpKind] = ALL_KINDS) -> PerturbOp | None:
    """Pick an op kind uniformly among kinds that can change the word, then a
    uniform valid application of that kind. None if nothing can change it."""
    available = _available_kinds(word, kinds)
    if not available:
        return None
    kind = rng.choice(available)
    return _sample_op_of_kind(word, kind, rng)


def changing_variants(word: str, kinds: Iterable[OpKind] = ALL_KINDS) -> list[str]:
    """All distinct single-op results, sorted for deterministic iteration."""
    results = set()
    for kind in kinds:
        for op in changing_ops(word, kind):
            results.add(apply_op(word, op))
    return sorted(results)


def perturb_sentence_with_rng(sentence: Sentence, budget: int, rng: random.Random,
                              kinds: Iterable[OpKind] = ALL_KINDS) -> Sentence:
    if budget < 0:
        raise ContractError("budget must be non-negative")
    if budget == 0:
        return sentence
    positions = [i for i, t in enumerate(sentence.tokens) if is_perturbable(t)]
    if not positions:
        return sentence
    chosen = sorted(rng.sample(positions, min(budget, len(positions))))
    tokens = list(sentence.tokens)
    for pos in chosen:
        op = sample_changing_op(tokens[pos], rng, kinds)
        if op is not None:
            tokens[pos] = apply_op(tokens[pos], op)
    return Sentence.from_tokens(tokens)


def perturb_sentence(sentence: Sentence, budget: int, rng_seed: int,
                     kinds: Iterable[OpKind] = ALL_KINDS) -> Sentence:
    """Noise up to `budget` distinct tokens, one random edit each.

    Token positions are drawn uniformly among perturbable tokens (length >= 2,
    not detached punctuation). Deterministic for a given seed.
    """
    return perturb_sentence_with_rng(sentence, budget, random.Random(rng_seed), kinds)


def word_difference(x: Sentence, x_star: Sentence) -> int:
    """Number of positions whose tokens differ; lengths must match."""
    if len(x) != len(x_star):
        raise ContractError(
            f"sentences differ in token count: {len(x)} vs {len(x_star)}"
        )
    return sum(a != b for a, b in zip(x.tokens, x_star.tokens))


def parse_kinds(text: str) -> frozenset[OpKind]:
    """Parse a comma list like ``swap,sub,del,ins`` into op kinds."""
    kinds = set()
    for name in text.split(","):
        name = name.strip()
        if not name:
            continue
        if name not in KINDS_BY_NAME:
            raise ContractError(
                f"unknown op {name!r}; expected some of {sorted(KINDS_BY_NAME)}"
            )
        kinds.add(KINDS_BY_NAME[name])
    if not kinds:
        raise ContractError("no perturbation ops selected")
    return frozenset(kinds)
