"""Robustness/fidelity estimation and word-level spell-correction scoring.

Robustness measures how many of the denoised outputs coincide; fidelity
measures how closely they match the clean input tokenwise. Both are computed
over a set Z built from sanitizer outputs on increasingly noisy copies of each
sentence plus an identity element.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Sequence

from .cluster import ClusterIndex
from .errors import ContractError
from .noise import ALL_KINDS, OpKind, apply_op, is_perturbable, sample_changing_op
from .seeds import derive
from .text import Sentence

Sanitizer = Callable[[Sentence], Sentence]

PROTOCOL_COPIES = 10


@dataclass(frozen=True)
class DenoisedSet:
    """Clean reference x plus the multiset Z of denoised outputs for it."""

    x: Sentence
    outputs: tuple[Sentence, ...]

    def __post_init__(self):
        if not self.outputs:
            raise ContractError("denoised set must be non-empty")


def robustness(denoised: DenoisedSet) -> float:
    """(|Z| + 1 - |uniq(Z)|) / |Z|; 1.0 when all outputs coincide."""
    z = denoised.outputs
    unique = {s.tokens for s in z}
    return (len(z) + 1 - len(unique)) / len(z)


def fidelity(denoised: DenoisedSet) -> float:
    """Mean over Z of the per-position token match rate against x."""
    x_tokens = denoised.x.tokens
    length = len(x_tokens)
    total = 0.0
    for z in denoised.outputs:
        if len(z.tokens) != length:
            raise ContractError("denoised output is not token-aligned with x")
        if length:
            total += sum(a == b for a, b in zip(z.tokens, x_tokens)) / length
        else:
            total += 1.0
    return total / len(denoised.outputs)


@dataclass(frozen=True)
class RobFidReport:
    robustness: float
    fidelity: float
    arithmetic: float
    geometric: float
    harmonic: float

    @classmethod
    def from_values(cls, rob: float, fid: float) -> "RobFidReport":
        arith = 0.5 * (rob + fid)
        geo = math.sqrt(rob * fid)
        har = 2 * rob * fid / (rob + fid) if rob + fid > 0 else 0.0
        return cls(rob, fid, arith, geo, har)

    def as_dict(self) -> dict[str, float]:
        return {
            "robustness": self.robustness,
            "fidelity": self.fidelity,
            "arith": self.arithmetic,
            "geo": self.geometric,
            "har": self.harmonic,
        }


def identity_sanitizer(sentence: Sentence) -> Sentence:
    return sentence


def frequency_sanitizer(index: ClusterIndex) -> Sanitizer:
    """Context-free baseline: always the most frequent cluster candidate."""
    words = index.vocab.words

    def run(sentence: Sentence) -> Sentence:
        out = []
        for token in sentence.tokens:
            cluster = index.query(token)
            out.append(words[cluster[0]] if cluster else token)
        return Sentence.from_tokens(out)

    return run


def noisy_copy_ladder(sentence: Sentence, rng: random.Random,
                      copies: int = PROTOCOL_COPIES,
                      kinds: frozenset[OpKind] = ALL_KINDS) -> list[Sentence]:
    """Sequentially noised copies: copy k carries the first k sampled edits.

    Positions are drawn without replacement while unused perturbable positions
    remain, then with replacement, so later edits can compound noise already
    sitting on a token.
    """
    perturbable = [i for i, t in enumerate(sentence.tokens) if is_perturbable(t)]
    ladder: list[Sentence] = []
    if not perturbable:
        return [sentence] * copies
    first = perturbable.copy()
    rng.shuffle(first)
    positions = first[:copies]
    while len(positions) < copies:
        positions.append(rng.choice(perturbable))
    tokens = list(sentence.tokens)
    for pos in positions:
        op = sample_changing_op(tokens[pos], rng, kinds)
        if op is not None:
            tokens[pos] = apply_op(tokens[pos], op)
        ladder.append(Sentence.from_tokens(tokens))
    return ladder


def robfid_protocol(sanitizer: Sanitizer, corpus: Sequence[Sentence], seed: int,
                    copies: int = PROTOCOL_COPIES,
                    identity: str = "sanitized",
                    kinds: frozenset[OpKind] = ALL_KINDS) -> RobFidReport:
    """Average robustness/fidelity over a corpus under the noisy-copy ladder.

    Each sentence gets `copies` increasingly noisy versions; all are sanitized
    and an identity element joins Z. With identity="sanitized" (default) that
    element is the sanitizer's own output on the clean sentence, so corrupting
    clean input costs fidelity; identity="literal" appends the clean sentence
    itself. `kinds` selects the noise ops for the ladder.
    """
    if not corpus:
        raise ContractError("protocol corpus is empty")
    if identity not in ("sanitized", "literal"):
        raise ContractError("identity must be 'sanitized' or 'literal'")
    rob_total = 0.0
    fid_total = 0.0
    for i, sentence in enumerate(corpus):
        rng = random.Random(derive(seed, i))
        ladder = noisy_copy_ladder(sentence, rng, copies, kinds)
        outputs = [sanitizer(noisy) for noisy in ladder]
        outputs.append(sanitizer(sentence) if identity == "sanitized" else sentence)
        denoised = DenoisedSet(sentence, tuple(outputs))
        rob_total += robustness(denoised)
        fid_total += fidelity(denoised)
    n = len(corpus)
    return RobFidReport.from_values(rob_total / n, fid_total / n)


@dataclass(frozen=True)
class SpellReport:
    precision: float
    recall: float
    f1: float
    skipped_misaligned: int
    true_positives: int
    system_edits: int
    reference_edits: int

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "skipped_misaligned": self.skipped_misaligned,
        }


def spell_eval(pairs: Sequence[tuple[Sentence, Sentence]],
               outputs: Sequence[Sentence]) -> SpellReport:
    """Word-level precision/recall/F1 of corrections.

    A system edit is a position where the output differs from the noisy input;
    a reference edit is one where clean differs from noisy; a true positive is
    an edited position restored exactly to the clean token. Zero denominators
    yield zero scores. Misaligned triples are skipped and counted.
    """
    if len(pairs) != len(outputs):
        raise ContractError("need one output per pair")
    tp = 0
    system_edits = 0
    reference_edits = 0
    skipped = 0
    for (noisy, clean), output in zip(pairs, outputs):
        if not (len(noisy) == len(clean) == len(output)):
            skipped += 1
            continue
        for n_tok, c_tok, o_tok in zip(noisy.tokens, clean.tokens, output.tokens):
            sys_edit = o_tok != n_tok
            ref_edit = c_tok != n_tok
            if sys_edit:
                system_edits += 1
            if ref_edit:
                reference_edits += 1
            if sys_edit and ref_edit and o_tok == c_tok:
                tp += 1
    precision = tp / system_edits if system_edits else 0.0
    recall = tp / reference_edits if reference_edits else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return SpellReport(precision, recall, f1, skipped, tp, system_edits, reference_edits)
