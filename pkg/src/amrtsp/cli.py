"""Command-line entry point: ``amrtsp {train-lm,train-transitions,generate,evaluate}``.

Exit codes: 0 success, 1 usage, 2 I/O, 3 data/format, 4 infeasible or
degenerate training.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, fields, replace
from typing import List, Optional

from .agtsp import CoverageError, InfeasibleError
from .amr import PenmanError, iter_amr_blocks, parse_penman
from .generator import GeneratorConfig, MissingReferenceError, evaluate_corpus, generate
from .lm import ArpaFormatError, read_arpa, read_corpus, train as train_lm, write_arpa
from .mining import mine_examples, write_examples_tsv
from .rules import DEFAULT_SKIP_LIST, RuleBank, RuleFileError, VerbalizationList, load_rules
from .transition import TrainingError, TransitionModel, accuracy, train as train_model

log = logging.getLogger("amrtsp")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DATA, EXIT_TRAINING = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


@dataclass
class Config:
    top_n: int = 10
    order: int = 4
    exact_limit: int = 16
    negatives: int = 3
    epochs: int = 500
    learning_rate: float = 0.5
    l2: float = 1e-3
    seed: int = 0
    skip_list: tuple = tuple(sorted(DEFAULT_SKIP_LIST))
    rules: Optional[str] = None
    verbalizations: Optional[str] = None
    lm: Optional[str] = None
    model: Optional[str] = None
    baseline_bigram: bool = False
    lowercase: bool = True
    restarts: int = 30

    def validate(self):
        checks = [
            (self.top_n >= 1, "top_n must be >= 1"),
            (self.order >= 1, "order must be >= 1"),
            (1 <= self.exact_limit <= 24, "exact_limit must be in 1..24"),
            (self.negatives >= 0, "negatives must be >= 0"),
            (self.epochs >= 1, "epochs must be >= 1"),
            (self.learning_rate > 0, "learning_rate must be > 0"),
            (self.l2 >= 0, "l2 must be >= 0"),
            (self.restarts >= 0, "restarts must be >= 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise UsageError(msg)
        return self

    def generator_config(self, verbalizations=None) -> GeneratorConfig:
        return GeneratorConfig(
            top_n=self.top_n, exact_limit=self.exact_limit, seed=self.seed,
            skip_list=frozenset(self.skip_list), verbalizations=verbalizations,
            baseline_bigram=self.baseline_bigram, lowercase_lm=self.lowercase,
            heuristic_restarts=self.restarts,
        )


_FLAG_FIELDS = {
    "top_n", "order", "exact_limit", "negatives", "epochs", "learning_rate", "l2", "seed",
    "rules", "verbalizations", "lm", "model", "baseline_bigram", "restarts",
}


def load_config(args) -> Config:
    """Config file values, then command-line flags on top."""
    cfg = Config()
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
        known = {f.name for f in fields(Config)}
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        if "skip_list" in data:
            data["skip_list"] = tuple(data["skip_list"])
        cfg = replace(cfg, **data)
    overrides = {k: v for k, v in vars(args).items() if k in _FLAG_FIELDS and v is not None and v is not False}
    if getattr(args, "no_lowercase", False):
        overrides["lowercase"] = False
    return replace(cfg, **overrides).validate()


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text} is not a positive integer")
    return value


def _nonneg(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"{text} is negative")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="amrtsp", description="AMR-to-text generation as an asymmetric generalized TSP")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(sp, rules=True):
        sp.add_argument("--config", help="JSON config file; flags override its values")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--verbose", action="store_true")
        if rules:
            sp.add_argument("--rules", help="rule file: FRAGMENT ||| translation ||| COUNT")
            sp.add_argument("--verbalizations", help="verbalization list")
            sp.add_argument("--lm", help="ARPA language model")
            sp.add_argument("--top-n", dest="top_n", type=_positive)
            sp.add_argument("--no-lowercase", action="store_true",
                            help="score the LM on cased tokens")

    sp = sub.add_parser("train-lm", help="train an n-gram LM and write ARPA")
    sp.add_argument("corpus", help="one whitespace-tokenised sentence per line")
    sp.add_argument("-o", "--out", required=True)
    sp.add_argument("--order", type=_positive)
    sp.add_argument("--no-lowercase", action="store_true")
    common(sp, rules=False)

    sp = sub.add_parser("train-transitions", help="mine transitions and train the maxent model")
    sp.add_argument("corpus", help="AMR-bank file with '# ::snt' references")
    sp.add_argument("-o", "--out", required=True)
    sp.add_argument("--negatives", type=_nonneg)
    sp.add_argument("--epochs", type=_positive)
    sp.add_argument("--learning-rate", dest="learning_rate", type=float)
    sp.add_argument("--l2", type=float)
    sp.add_argument("--examples-tsv", help="also dump mined examples here")
    common(sp)

    for name, helptext in (("generate", "generate one sentence per AMR block"),
                           ("evaluate", "generate and score corpus BLEU")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("input", help="AMR-bank file, '-' for stdin" if name == "generate" else "AMR-bank file")
        sp.add_argument("--model", help="transition model file")
        sp.add_argument("--exact-limit", dest="exact_limit", type=_positive)
        sp.add_argument("--baseline-bigram", dest="baseline_bigram", action="store_true",
                        help="score transitions with the LM alone")
        sp.add_argument("--restarts", type=_nonneg)
        if name == "generate":
            sp.add_argument("--abort-on-error", action="store_true")
        common(sp)
    return p


def _read_text(path) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _resources(cfg: Config, need_model: bool):
    bank = load_rules(cfg.rules, cfg.top_n) if cfg.rules else RuleBank(top_n=cfg.top_n)
    verbal = VerbalizationList.load(cfg.verbalizations) if cfg.verbalizations else None
    if not cfg.lm:
        raise UsageError("--lm is required")
    lm = read_arpa(cfg.lm)
    model = None
    if need_model:
        if cfg.model:
            model = TransitionModel.load(cfg.model)
        elif not cfg.baseline_bigram:
            raise UsageError("--model is required unless --baseline-bigram is given")
    return bank, verbal, lm, model


# ---------------------------------------------------------------------------
# commands

def cmd_train_lm(args, cfg: Config, out=sys.stdout) -> int:
    corpus = read_corpus(args.corpus, lowercase=cfg.lowercase)
    if not corpus:
        print(f"error: {args.corpus} contains no sentences", file=sys.stderr)
        return EXIT_DATA
    lm = train_lm(corpus, cfg.order)
    write_arpa(lm, args.out)
    print(f"vocabulary: {len(lm.vocab)}", file=out)
    print("ngrams: " + " ".join(f"{n}={c}" for n, c in enumerate(lm.counts(), 1)), file=out)
    return EXIT_OK


def cmd_train_transitions(args, cfg: Config, out=sys.stdout) -> int:
    bank, verbal, lm, _ = _resources(cfg, need_model=False)
    pairs = []
    for block in iter_amr_blocks(_read_text(args.corpus)):
        if block.sentence is None:
            raise MissingReferenceError(f"block {block.index + 1} has no '# ::snt' reference")
        pairs.append((parse_penman(block.penman), block.sentence))
    mined = mine_examples(pairs, bank, lm, cfg.negatives, cfg.seed, frozenset(cfg.skip_list),
                          verbal, cfg.lowercase)
    print(f"pairs: {len(pairs)}", file=out)
    print(f"skipped: {mined.skipped}", file=out)
    print(f"positives: {mined.positives}", file=out)
    print(f"negatives: {mined.negatives}", file=out)
    if mined.positives == 0:
        print("error: no training signal (no pair yields a gold cut)", file=sys.stderr)
        return EXIT_TRAINING
    if mined.negatives == 0:
        print("error: no training signal (no negative transitions)", file=sys.stderr)
        return EXIT_TRAINING
    if args.examples_tsv:
        write_examples_tsv(mined.examples, args.examples_tsv)
    model = train_model(mined.examples, cfg.l2, cfg.epochs, cfg.learning_rate, cfg.seed)
    model.save(args.out)
    print(f"final loss: {model.losses[-1]:.6f}", file=out)
    print(f"training accuracy: {accuracy(model, mined.examples):.4f}", file=out)
    return EXIT_OK


def cmd_generate(args, cfg: Config, out=sys.stdout) -> int:
    bank, verbal, lm, model = _resources(cfg, need_model=True)
    gcfg = cfg.generator_config(verbal)
    status = EXIT_OK
    for block in iter_amr_blocks(_read_text(args.input)):
        k = block.index + 1
        try:
            graph = parse_penman(block.penman)
            result = generate(graph, bank, model, lm, gcfg)
        except (PenmanError, CoverageError, InfeasibleError) as exc:
            print(f"error: block {k} (line {block.line}): {exc}", file=sys.stderr)
            if args.abort_on_error:
                return EXIT_DATA if isinstance(exc, PenmanError) else EXIT_TRAINING
            status = EXIT_DATA
            print("", file=out)
            continue
        print(result.text, file=out)
        if cfg_verbose(args):
            record = {
                "block": k,
                "sentence": result.text,
                "cost": result.cost,
                "tour": [str(result.instance.nodes[i]) for i in result.tour.nodes],
                "rules": [str(m) for m in result.used_rules],
            }
            print(json.dumps(record, ensure_ascii=False), file=sys.stderr)
    return status


def cmd_evaluate(args, cfg: Config, out=sys.stdout) -> int:
    bank, verbal, lm, model = _resources(cfg, need_model=True)
    blocks = list(iter_amr_blocks(_read_text(args.input)))
    report = evaluate_corpus(blocks, bank, model, lm, cfg.generator_config(verbal))
    print(f"instances: {report.total}", file=out)
    print(f"filtered: {report.filtered}", file=out)
    print(f"retained: {report.retained}", file=out)
    print(f"BLEU: {report.bleu:.2f}", file=out)
    print(f"induced-rule concept coverage: {100 * report.concept_coverage:.2f}%", file=out)
    print(f"induced-rule graph coverage: {100 * report.graph_coverage:.2f}%", file=out)
    if cfg_verbose(args):
        for hyp, cost in zip(report.outputs, report.costs):
            print(json.dumps({"sentence": hyp, "cost": cost}, ensure_ascii=False), file=sys.stderr)
    return EXIT_OK


def cfg_verbose(args) -> bool:
    return bool(getattr(args, "verbose", False))


COMMANDS = {
    "train-lm": cmd_train_lm,
    "train-transitions": cmd_train_transitions,
    "generate": cmd_generate,
    "evaluate": cmd_evaluate,
}


def main(argv: Optional[List[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](args, cfg, out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (TrainingError, InfeasibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except (PenmanError, RuleFileError, ArpaFormatError, MissingReferenceError,
            CoverageError, json.JSONDecodeError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
