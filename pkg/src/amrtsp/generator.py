"""End-to-end generation: candidates -> AGTSP instance -> tour -> sentence."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import FrozenSet, List, Optional, Sequence

from .agtsp import (
    DEFAULT_EXACT_LIMIT,
    AgtspInstance,
    Tour,
    build_instance,
    solve_exact,
    solve_heuristic,
)
from .amr import AmrBlock, AmrGraph, parse_penman
from .bleu import bleu
from .lm import NgramLm
from .rules import (
    DEFAULT_SKIP_LIST,
    DEFAULT_TOP_N,
    INDUCED,
    MatchedRule,
    RuleBank,
    VerbalizationList,
    candidates,
)
from .transition import TransitionModel

log = logging.getLogger(__name__)

MAX_REFERENCE_WORDS = 30


class MissingReferenceError(ValueError):
    pass


@dataclass
class GeneratorConfig:
    top_n: int = DEFAULT_TOP_N
    exact_limit: int = DEFAULT_EXACT_LIMIT
    seed: int = 0
    skip_list: FrozenSet[str] = DEFAULT_SKIP_LIST
    verbalizations: Optional[VerbalizationList] = None
    baseline_bigram: bool = False
    lowercase_lm: bool = True
    concept_rules: bool = True
    heuristic_restarts: int = 30
    max_reference_words: int = MAX_REFERENCE_WORDS


@dataclass
class GenerationResult:
    sentence: List[str]
    tour: Tour
    used_rules: List[MatchedRule]
    cost: float
    instance: Optional[AgtspInstance] = field(default=None, repr=False, compare=False)

    @property
    def text(self) -> str:
        return " ".join(self.sentence)


def decode(instance: AgtspInstance, tour: Tour):
    """Rules in visiting order and the concatenated sentence.

    A rule is emitted when the tour enters its first fragment node.
    """
    used: List[MatchedRule] = []
    sentence: List[str] = []
    for idx in tour.nodes[1:-1]:
        node = instance.nodes[idx]
        if node.concept == node.rule.first:
            used.append(node.rule)
            sentence.extend(node.rule.translation)
    covered = [c for m in used for c in m.covered]
    if len(covered) != len(set(covered)) or len(covered) != instance.m:
        raise AssertionError("decoded rules do not partition the input concepts")
    return used, sentence


def generate(
    graph: AmrGraph,
    bank: Optional[RuleBank],
    model: Optional[TransitionModel],
    lm: NgramLm,
    config: Optional[GeneratorConfig] = None,
) -> GenerationResult:
    config = config or GeneratorConfig()
    cands = candidates(graph, bank, config.skip_list, config.verbalizations, config.concept_rules)
    instance = build_instance(graph, cands, model, lm, lowercase=config.lowercase_lm,
                              baseline_bigram=config.baseline_bigram)
    if instance.m <= config.exact_limit:
        tour = solve_exact(instance, config.exact_limit)
    else:
        tour = solve_heuristic(instance, config.seed, restarts=config.heuristic_restarts)
    used, sentence = decode(instance, tour)
    return GenerationResult(sentence, tour, used, tour.total_cost, instance)


# ---------------------------------------------------------------------------
# evaluation

@dataclass
class EvaluationReport:
    total: int = 0
    filtered: int = 0
    bleu: float = 0.0
    outputs: List[str] = field(default_factory=list)
    references: List[str] = field(default_factory=list)
    costs: List[float] = field(default_factory=list)
    concepts: int = 0
    induced_concepts: int = 0
    graphs_fully_induced: int = 0

    @property
    def retained(self) -> int:
        return self.total - self.filtered

    @property
    def concept_coverage(self) -> float:
        """Fraction of concepts covered by at least one matched induced rule."""
        return self.induced_concepts / self.concepts if self.concepts else 0.0

    @property
    def graph_coverage(self) -> float:
        return self.graphs_fully_induced / self.retained if self.retained else 0.0


def evaluate_corpus(
    blocks: Sequence[AmrBlock],
    bank: Optional[RuleBank],
    model: Optional[TransitionModel],
    lm: NgramLm,
    config: Optional[GeneratorConfig] = None,
) -> EvaluationReport:
    """Generate every block whose reference has at most 30 words and score BLEU."""
    config = config or GeneratorConfig()
    report = EvaluationReport(total=len(blocks))
    hyps, refs = [], []
    for block in blocks:
        if block.sentence is None:
            raise MissingReferenceError(f"block {block.index + 1} (line {block.line}) has no '# ::snt' reference")
        ref = block.sentence.split()
        if len(ref) > config.max_reference_words:
            report.filtered += 1
            continue
        graph = parse_penman(block.penman)
        result = generate(graph, bank, model, lm, config)
        hyps.append(result.sentence)
        refs.append(ref)
        report.outputs.append(result.text)
        report.references.append(block.sentence)
        report.costs.append(result.cost)

        induced = candidates(graph, bank, config.skip_list, concept_rules=False) if bank else []
        covered = set()
        for m in induced:
            if m.origin == INDUCED:
                covered |= m.covered
        report.concepts += len(graph.nodes)
        report.induced_concepts += len(covered)
        report.graphs_fully_induced += len(covered) == len(graph.nodes)
    report.bleu = bleu(hyps, refs) if refs else 0.0
    return report
