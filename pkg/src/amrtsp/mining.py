"""Mine maxent training examples from (AMR, reference sentence) pairs.

A gold cut is found greedily: scan the reference left to right and take the
candidate whose translation matches the longest prefix of what remains and
does not overlap concepts already covered.  Consecutive rules of the gold cut
give "yes" transitions; legal moves out of the same source node that the gold
cut did not take are sampled as "no" transitions.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

from .agtsp import END, START, AgtspNode
from .amr import AmrGraph, bfs_order
from .lm import NgramLm
from .rules import DEFAULT_SKIP_LIST, INDUCED, MatchedRule, RuleBank, candidates
from .transition import TransitionExample, extract_features

_START = AgtspNode(None, None, START)
_END = AgtspNode(None, None, END)


@dataclass
class MiningResult:
    examples: List[TransitionExample] = field(default_factory=list)
    positives: int = 0
    negatives: int = 0
    used_pairs: int = 0
    skipped: int = 0


def _lower(tokens: Sequence[str]) -> Tuple[str, ...]:
    return tuple(t.lower() for t in tokens)


def gold_cut(graph: AmrGraph, tokens: Sequence[str], cands: Sequence[MatchedRule]) -> Optional[List[MatchedRule]]:
    """Greedy longest-match cut, or None when the sentence or graph cannot be covered."""
    toks = _lower(tokens)
    covered = set()
    cut: List[MatchedRule] = []
    i = 0
    while i < len(toks):
        best, best_key = None, None
        for m in cands:
            tr = _lower(m.translation)
            if not tr or toks[i:i + len(tr)] != tr or not covered.isdisjoint(m.covered):
                continue
            key = (-len(tr), -len(m.covered), m.origin != INDUCED, m.mapping, tr)
            if best_key is None or key < best_key:
                best, best_key = m, key
        if best is None:
            return None
        cut.append(best)
        covered |= best.covered
        i += len(best.translation)
    # concepts left over may only be absorbed by empty-translation rules
    for concept in bfs_order(graph, graph.root):
        if concept in covered:
            continue
        filler = next((m for m in cands if not m.translation and concept in m.covered
                       and covered.isdisjoint(m.covered)), None)
        if filler is None:
            return None
        cut.append(filler)
        covered |= filler.covered
    return cut


def gold_transitions(cut: Sequence[MatchedRule]) -> List[Tuple[AgtspNode, AgtspNode]]:
    moves = []
    prev = _START
    for m in cut:
        moves.append((prev, AgtspNode(m.first, m)))
        prev = AgtspNode(m.last, m)
    moves.append((prev, _END))
    return moves


def legal_targets(src: AgtspNode, cands: Sequence[MatchedRule]) -> List[AgtspNode]:
    """Destinations reachable from ``src`` with a scored (non-zero, finite) move."""
    if src.is_start:
        return [AgtspNode(m.first, m) for m in cands]
    out = [AgtspNode(m.first, m) for m in cands if src.rule.covered.isdisjoint(m.covered)]
    out.append(_END)
    return out


def mine_examples(
    pairs: Iterable[Tuple[AmrGraph, Sequence[str]]],
    bank: Optional[RuleBank],
    lm: NgramLm,
    negatives_per_positive: int = 3,
    seed: int = 0,
    skip_list=DEFAULT_SKIP_LIST,
    verbalizations=None,
    lowercase: bool = True,
) -> MiningResult:
    rng = random.Random(seed)
    result = MiningResult()
    for graph, sentence in pairs:
        tokens = sentence.split() if isinstance(sentence, str) else list(sentence)
        cands = candidates(graph, bank, skip_list, verbalizations)
        cut = gold_cut(graph, tokens, cands)
        if cut is None:
            result.skipped += 1
            continue
        result.used_pairs += 1
        for src, dst in gold_transitions(cut):
            f = extract_features(src, dst, graph, lm, lowercase)
            result.examples.append(TransitionExample(f, True))
            result.positives += 1
            pool = [t for t in legal_targets(src, cands) if t != dst]
            k = min(negatives_per_positive, len(pool))
            for neg in rng.sample(pool, k):
                f = extract_features(src, neg, graph, lm, lowercase)
                result.examples.append(TransitionExample(f, False))
                result.negatives += 1
    return result


def write_examples_tsv(examples: Sequence[TransitionExample], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("label\tlm_score\tword_count\tpath_length\n")
        for e in examples:
            f = e.features
            fh.write(f"{'yes' if e.label else 'no'}\t{f.lm_score!r}\t{f.word_count}\t{f.path_length}\n")
