"""Command-line entry point wiring the library into file-based commands.

Exit codes: 0 success, 1 usage error (including missing files), 2
configuration/fingerprint error, 3 data-format error. FIRO_LOG in
{error,warn,info,debug} controls logging on standard error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import attack as attack_mod
from . import cluster as cluster_mod
from . import metrics as metrics_mod
from . import model as model_mod
from . import trainer as trainer_mod
from . import toybench
from .errors import ConfigError, ContractError, DataFormatError, FiroError
from .manifest import write_manifest
from .noise import parse_kinds, perturb_sentence
from .seeds import derive
from .text import join_tokens, load_vocabulary, read_corpus, read_labeled, read_pairs

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_FORMAT = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _configure_logging() -> None:
    level = _LOG_LEVELS.get(os.environ.get("FIRO_LOG", "warn").lower(), logging.WARNING)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("firo")
    root.handlers[:] = [handler]
    root.setLevel(level)


def _print_json(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _load_model_index(model_path: str, index_path: str):
    model = model_mod.load_model(model_path)
    index = cluster_mod.load_index(index_path)
    model_mod.check_compatible(model, index)
    return model, index


def _flags(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if k != "run"}


def cmd_build_index(args) -> int:
    vocab = load_vocabulary(args.vocab, args.max_size)
    index = cluster_mod.build_index(vocab)
    cluster_mod.save_index(index, args.out)
    write_manifest(args.out, "build-index", _flags(args), [args.vocab])
    _print_json({"words": len(vocab), "out": str(args.out)})
    return EXIT_OK


def cmd_train(args) -> int:
    vocab = load_vocabulary(args.vocab, args.max_size)
    index = cluster_mod.build_index(vocab)
    corpus = read_corpus(args.corpus)
    holdout = read_corpus(args.holdout) if args.holdout else None
    config = trainer_mod.TrainConfig(
        batch_size=args.batch,
        learning_rate=args.lr,
        noise_budget=args.noise,
        max_epochs=args.epochs,
        patience=args.patience,
        seed=args.seed,
        d_char=args.dim,
    )

    def emit(epoch: int, loss: float, recovery: float, alpha: float) -> None:
        sys.stdout.write(json.dumps(
            {"epoch": epoch, "loss": loss, "recovery": recovery, "alpha": alpha}
        ) + "\n")
        sys.stdout.flush()

    model, _ = trainer_mod.train(corpus, vocab, index, config,
                                 holdout=holdout, on_epoch=emit)
    model_mod.save_model(model, args.out)
    inputs = [args.corpus, args.vocab] + ([args.holdout] if args.holdout else [])
    write_manifest(args.out, "train", _flags(args), inputs)
    return EXIT_OK


def cmd_sanitize(args) -> int:
    model, index = _load_model_index(args.model, args.index)
    sentences = read_corpus(args.infile)
    cleaned = [
        model_mod.sanitize(model, index, s).output_tokens for s in sentences
    ]
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for tokens in cleaned:
            fh.write(join_tokens(tokens) + "\n")
    write_manifest(args.out, "sanitize", _flags(args),
                   [args.model, args.index, args.infile])
    return EXIT_OK


def cmd_noise(args) -> int:
    kinds = parse_kinds(args.ops)
    sentences = read_corpus(args.infile)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for i, sentence in enumerate(sentences):
            noisy = perturb_sentence(sentence, args.budget, derive(args.seed, i), kinds)
            fh.write(join_tokens(noisy.tokens) + "\n")
    write_manifest(args.out, "noise", _flags(args), [args.infile])
    return EXIT_OK


def _parse_budgets(text: str) -> list[int]:
    try:
        budgets = sorted({int(part) for part in text.split(",") if part.strip() != ""})
    except ValueError:
        raise ContractError(f"bad budget list {text!r}; expected e.g. '2' or '0,1,2'")
    if not budgets or any(b < 0 for b in budgets):
        raise ContractError("budgets must be non-negative integers")
    return budgets


def cmd_attack(args) -> int:
    inner = attack_mod.load_victim(args.victim)
    use_model = bool(args.model) and args.model.lower() != "none"
    if use_model:
        if not args.index:
            raise ConfigError("--index is required when attacking through a model")
        model, index = _load_model_index(args.model, args.index)
        victim: attack_mod.Victim = attack_mod.SanitizedVictim(model, index, inner)
    else:
        victim = inner
    examples = read_labeled(args.infile)
    if args.limit:
        examples = examples[: args.limit]
    budgets = _parse_budgets(args.budget)

    per_example = []
    accuracy_by_budget = {}
    for budget in budgets:
        correct = 0
        for i, (sentence, gold) in enumerate(examples):
            if budget == 0:
                ok = victim.predict(sentence) == gold
                record = {"budget": budget, "example": i, "success": not ok,
                          "words_changed": 0, "queries": 1}
            else:
                result = attack_mod.beam_attack(
                    victim, sentence, gold, budget,
                    beam=args.beam, branch=args.branch,
                    seed=derive(args.seed, budget, i),
                )
                ok = not result.success
                record = {"budget": budget, "example": i,
                          "success": result.success,
                          "words_changed": result.words_changed,
                          "queries": result.queries_used}
            correct += ok
            per_example.append(record)
        accuracy_by_budget[budget] = correct / len(examples) if examples else 0.0

    report = {
        "accuracy_by_budget": {str(b): acc for b, acc in accuracy_by_budget.items()},
        "examples": len(examples),
        "per_example": per_example,
        "sanitized": use_model,
    }
    with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    from .plots import save_attack_sweep

    figure = save_attack_sweep(accuracy_by_budget, Path(args.report).with_suffix(".png"))
    inputs = [args.victim, args.infile]
    if use_model:
        inputs += [args.model, args.index]
    write_manifest(args.report, "attack", _flags(args), inputs)
    _print_json({"accuracy_by_budget": report["accuracy_by_budget"],
                 "report": str(args.report), "figure": str(figure)})
    return EXIT_OK


def cmd_eval_robfid(args) -> int:
    model, index = _load_model_index(args.model, args.index)
    corpus = read_corpus(args.corpus)
    report = metrics_mod.robfid_protocol(
        model_mod.firo_sanitizer(model, index), corpus, args.seed,
        identity=args.identity, kinds=parse_kinds(args.ops),
    )
    payload = report.as_dict()
    _print_json(payload)
    if args.report:
        with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        from .plots import save_robfid_bars

        save_robfid_bars(payload, Path(args.report).with_suffix(".png"))
        write_manifest(args.report, "eval-robfid", _flags(args),
                       [args.model, args.index, args.corpus])
    return EXIT_OK


def cmd_eval_spell(args) -> int:
    model, index = _load_model_index(args.model, args.index)
    pairs, skipped_load = read_pairs(args.pairs)
    outputs = [
        model_mod.sanitize(model, index, noisy).sentence() for noisy, _ in pairs
    ]
    report = metrics_mod.spell_eval(pairs, outputs)
    payload = report.as_dict()
    payload["skipped_misaligned"] += skipped_load
    _print_json(payload)
    if args.report:
        with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        from .plots import save_spell_bars

        save_spell_bars(payload, Path(args.report).with_suffix(".png"))
        write_manifest(args.report, "eval-spell", _flags(args),
                       [args.model, args.index, args.pairs])
    return EXIT_OK


def cmd_gen_toybench(args) -> int:
    paths = toybench.gen_toybench(args.out, args.seed)
    write_manifest(Path(args.out) / "toybench", "gen-toybench", _flags(args), [])
    _print_json({name: str(path) for name, path in paths.items()})
    return EXIT_OK


def cmd_victim_train(args) -> int:
    examples = read_labeled(args.corpus)
    victim = attack_mod.train_toy_victim(examples, d_char=args.dim, seed=args.seed)
    attack_mod.save_victim(victim, args.out)
    write_manifest(args.out, "victim-train", _flags(args), [args.corpus])
    _print_json({"train_accuracy": victim.train_accuracy,
                 "labels": list(victim.labels), "out": str(args.out)})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=13)
    common.add_argument("--deterministic", action="store_true",
                        help="single-worker fixed-order execution (always on in this build)")

    parser = _Parser(prog="firo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-index", parents=[common],
                       help="build and serialize the cluster index for a vocabulary")
    p.add_argument("--vocab", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-size", type=int, default=100_000)
    p.set_defaults(run=cmd_build_index)

    p = sub.add_parser("train", parents=[common], help="train a sanitizer model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-size", type=int, default=100_000)
    p.add_argument("--batch", type=int, default=50)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--noise", type=int, default=2)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--patience", type=int, default=3)
    p.add_argument("--dim", type=int, default=model_mod.DEFAULT_CHAR_DIM)
    p.add_argument("--holdout", default=None,
                   help="held-out corpus for early stopping (default: 10%% split)")
    p.set_defaults(run=cmd_train)

    p = sub.add_parser("sanitize", parents=[common], help="sanitize a corpus line by line")
    p.add_argument("--model", required=True)
    p.add_argument("--index", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(run=cmd_sanitize)

    p = sub.add_parser("noise", parents=[common], help="inject character-level noise")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--ops", default="swap,sub,del,ins")
    p.set_defaults(run=cmd_noise)

    p = sub.add_parser("attack", parents=[common],
                       help="beam-search attack a victim, optionally behind the sanitizer")
    p.add_argument("--victim", required=True)
    p.add_argument("--model", default="none",
                   help="sanitizer model path, or 'none' to attack the victim directly")
    p.add_argument("--index", default=None)
    p.add_argument("--in", dest="infile", required=True,
                   help="labeled tsv: text<TAB>label")
    p.add_argument("--budget", required=True,
                   help="budget D, or a comma list like 0,1,2,...,7")
    p.add_argument("--beam", type=int, default=5)
    p.add_argument("--branch", type=int, default=8)
    p.add_argument("--limit", type=int, default=0, help="attack only the first N examples")
    p.add_argument("--report", required=True)
    p.set_defaults(run=cmd_attack)

    p = sub.add_parser("eval-robfid", parents=[common],
                       help="estimate robustness and fidelity on a corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--index", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--identity", choices=("sanitized", "literal"), default="sanitized")
    p.add_argument("--ops", default="swap,sub,del,ins",
                   help="noise ops for the copy ladder, e.g. sub,del,ins")
    p.add_argument("--report", default=None)
    p.set_defaults(run=cmd_eval_robfid)

    p = sub.add_parser("eval-spell", parents=[common],
                       help="word-level spell correction metrics on noisy/clean pairs")
    p.add_argument("--model", required=True)
    p.add_argument("--index", required=True)
    p.add_argument("--pairs", required=True, help="tsv: noisy<TAB>clean")
    p.add_argument("--report", default=None)
    p.set_defaults(run=cmd_eval_spell)

    p = sub.add_parser("gen-toybench", parents=[common],
                       help="generate the synthetic desk-scale benchmark")
    p.add_argument("--out", required=True)
    p.set_defaults(run=cmd_gen_toybench)

    p = sub.add_parser("victim-train", parents=[common],
                       help="train the toy bag-of-embeddings classifier")
    p.add_argument("--corpus", required=True, help="labeled tsv: text<TAB>label")
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int, default=32)
    p.set_defaults(run=cmd_victim_train)
    return parser


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.run(args) or EXIT_OK
    except ConfigError as exc:
        print(f"firo: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataFormatError as exc:
        print(f"firo: data format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except ContractError as exc:
        print(f"firo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"firo: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_USAGE
    except FiroError as exc:
        print(f"firo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
