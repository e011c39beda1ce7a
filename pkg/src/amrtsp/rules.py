"""Graph-to-string rules: storage, concept-rule generation and fragment matching."""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

from .amr import (
    AmrGraph,
    ConceptNode,
    NodeId,
    PenmanError,
    bfs_order,
    canonical_key,
    parse_penman,
)
from . import morphology

log = logging.getLogger(__name__)

INDUCED = "induced"
CONCEPT = "concept"
VERBALIZATION = "verbalization"

DEFAULT_SKIP_LIST = frozenset({"have-rel-role-91", "have-org-role-91", "multi-sentence", "amr-unknown"})
DEFAULT_TOP_N = 10


class RuleFileError(ValueError):
    def __init__(self, message: str, lineno: int):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class Rule:
    fragment: AmrGraph
    translation: Tuple[str, ...]
    count: int = 0
    origin: str = INDUCED

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("rule count must be non-negative")

    @cached_property
    def key(self) -> str:
        return canonical_key(self.fragment)

    @property
    def root_concept(self) -> str:
        return self.fragment.nodes[self.fragment.root].concept

    def __str__(self):
        return f"{self.fragment} ||| {' '.join(self.translation)} ||| {self.count}"


@dataclass(frozen=True)
class MatchedRule:
    """A rule anchored in an input graph.

    ``mapping[k]`` is the input node that fragment node ``k`` maps to.
    """

    rule: Rule
    mapping: Tuple[NodeId, ...]

    @cached_property
    def covered(self) -> FrozenSet[NodeId]:
        return frozenset(self.mapping)

    @cached_property
    def order(self) -> Tuple[NodeId, ...]:
        frag = self.rule.fragment
        return tuple(self.mapping[v] for v in bfs_order(frag, frag.root))

    @property
    def root(self) -> NodeId:
        return self.order[0]

    @property
    def first(self) -> NodeId:
        return self.order[0]

    @property
    def last(self) -> NodeId:
        return self.order[-1]

    @cached_property
    def successor(self) -> Dict[NodeId, NodeId]:
        return dict(zip(self.order, self.order[1:]))

    @property
    def translation(self) -> Tuple[str, ...]:
        return self.rule.translation

    @property
    def origin(self) -> str:
        return self.rule.origin

    def __str__(self):
        return f"{self.rule.fragment} ||| {' '.join(self.translation)} @ {list(self.mapping)}"


class RuleBank:
    """Induced rules indexed by fragment root concept.

    Each distinct fragment keeps at most ``top_n`` translations, highest count
    first and ties broken by translation string.
    """

    def __init__(self, rules: Iterable[Rule] = (), top_n: int = DEFAULT_TOP_N):
        if top_n < 1:
            raise ValueError("top_n must be positive")
        self.top_n = top_n
        merged: Dict[str, Dict[Tuple[str, ...], int]] = defaultdict(dict)
        fragments: Dict[str, AmrGraph] = {}
        for rule in rules:
            fragments.setdefault(rule.key, rule.fragment)
            counts = merged[rule.key]
            counts[rule.translation] = counts.get(rule.translation, 0) + rule.count
        self._by_root: Dict[str, List[Rule]] = defaultdict(list)
        for key in sorted(merged):
            ranked = sorted(merged[key].items(), key=lambda kv: (-kv[1], " ".join(kv[0])))
            frag = fragments[key]
            for translation, count in ranked[:top_n]:
                rule = Rule(frag, translation, count, INDUCED)
                self._by_root[rule.root_concept].append(rule)

    def rules_for_root(self, concept: str) -> List[Rule]:
        return self._by_root.get(concept, [])

    def __iter__(self) -> Iterator[Rule]:
        for concept in sorted(self._by_root):
            yield from self._by_root[concept]

    def __len__(self) -> int:
        return sum(len(v) for v in self._by_root.values())

    def dump(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for rule in self:
                fh.write(str(rule) + "\n")


def parse_rule_line(line: str, lineno: int = 0) -> Rule:
    fields = [f.strip() for f in line.split("|||")]
    if len(fields) != 3:
        raise RuleFileError(f"expected 3 '|||'-separated fields, got {len(fields)}", lineno)
    frag_text, translation, count_text = fields
    try:
        fragment = parse_penman(frag_text)
    except PenmanError as exc:
        raise RuleFileError(f"bad fragment: {exc}", lineno) from exc
    try:
        count = int(count_text)
    except ValueError:
        raise RuleFileError(f"count {count_text!r} is not an integer", lineno) from None
    if count < 0:
        raise RuleFileError(f"negative count {count}", lineno)
    tokens = tuple(translation.split())
    if not tokens:
        raise RuleFileError("empty translation", lineno)
    return Rule(fragment, tokens, count, INDUCED)


def read_rules(lines: Iterable[str]) -> List[Rule]:
    rules = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        rules.append(parse_rule_line(line, lineno))
    return rules


def load_rules(path, top_n: int = DEFAULT_TOP_N) -> RuleBank:
    with open(path, encoding="utf-8") as fh:
        return RuleBank(read_rules(fh), top_n=top_n)


# ---------------------------------------------------------------------------
# verbalization list

@dataclass(frozen=True)
class Verbalization:
    token: str
    concept: str
    roles: Tuple[Tuple[str, str], ...] = ()

    @cached_property
    def fragment(self) -> AmrGraph:
        nodes = [ConceptNode(0, "v0", self.concept)]
        edges = []
        for i, (role, concept) in enumerate(self.roles, 1):
            nodes.append(ConceptNode(i, f"v{i}", concept))
            edges.append((0, role, i))
        return AmrGraph(tuple(nodes), tuple(edges), 0)


@dataclass
class VerbalizationList:
    entries: List[Verbalization] = field(default_factory=list)
    skipped: int = 0

    @classmethod
    def parse(cls, lines: Iterable[str]) -> "VerbalizationList":
        out = cls()
        for line in lines:
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            entry = _parse_verbalization(parts)
            if entry is None:
                out.skipped += 1
            else:
                out.entries.append(entry)
        if out.skipped:
            log.warning("verbalization list: skipped %d unusable lines", out.skipped)
        return out

    @classmethod
    def load(cls, path) -> "VerbalizationList":
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)


def _parse_verbalization(parts: Sequence[str]) -> Optional[Verbalization]:
    # VERBALIZE <token> TO <concept> [:ROLE <concept> ...]
    if len(parts) < 4 or parts[0] != "VERBALIZE" or parts[2] != "TO":
        return None
    rest = parts[4:]
    if len(rest) % 2:
        return None
    roles = []
    for role, concept in zip(rest[::2], rest[1::2]):
        if not role.startswith(":") or len(role) < 2 or concept.startswith(":"):
            return None
        roles.append((role, concept))
    return Verbalization(parts[1], parts[3], tuple(roles))


# ---------------------------------------------------------------------------
# concept rules

def _single_node_fragment(node: ConceptNode) -> AmrGraph:
    return AmrGraph((ConceptNode(0, node.variable, node.concept, node.is_constant),), (), 0)


def _constant_translation(token: str) -> Tuple[str, ...]:
    if token.startswith('"') and token.endswith('"') and len(token) >= 2:
        return tuple(token[1:-1].split())
    if token == "-":
        return ("not",)
    return (token,)


def generate_concept_rules(
    graph: AmrGraph,
    skip_list: Iterable[str] = DEFAULT_SKIP_LIST,
    verbalizations: Optional[Iterable[Verbalization]] = None,
) -> List[Rule]:
    """Rules that guarantee every node of ``graph`` can be translated.

    Concepts sharing a label share their rules (matching later anchors them
    on every node with that label).  Skip-list concepts get one rule with an
    empty translation.
    """
    skip = frozenset(skip_list)
    rules: List[Rule] = []
    seen = set()

    def emit(rule: Rule):
        marker = (rule.key, rule.translation)
        if marker not in seen:
            seen.add(marker)
            rules.append(rule)

    for node in graph.nodes:
        fragment = _single_node_fragment(node)
        if node.is_constant:
            forms = [_constant_translation(node.concept)]
        elif node.concept in skip:
            forms = [()]
        else:
            forms = [(form,) for form in morphology.variants(node.concept)]
        for tokens in forms:
            emit(Rule(fragment, tokens, 0, CONCEPT))

    for entry in verbalizations or ():
        found = match_fragment(graph, entry.fragment)
        if not found:
            continue
        mapping = found[0]
        renamed = tuple(
            ConceptNode(k, graph.nodes[mapping[k]].variable, n.concept, n.is_constant)
            for k, n in enumerate(entry.fragment.nodes)
        )
        fragment = AmrGraph(renamed, entry.fragment.edges, 0)
        emit(Rule(fragment, (entry.token,), 0, VERBALIZATION))
    return rules


# ---------------------------------------------------------------------------
# matching

def match_fragment(graph: AmrGraph, fragment: AmrGraph) -> List[Tuple[NodeId, ...]]:
    """All injective, label- and edge-preserving maps of ``fragment`` into ``graph``.

    Each result is a tuple indexed by fragment node id.  Results are sorted
    lexicographically.  Extra input edges among matched nodes are allowed.
    """
    order = bfs_order(fragment, fragment.root)
    if len(order) != len(fragment.nodes):
        raise ValueError("fragment is not rooted and connected")
    # For each non-root fragment node, the edge from an earlier node that reached it.
    anchor: Dict[NodeId, Tuple[NodeId, str]] = {}
    for v in order:
        for rel, child in fragment.children[v]:
            if child not in anchor and child != fragment.root:
                anchor[child] = (v, rel)
    labels = [n.label for n in fragment.nodes]
    results: List[Tuple[NodeId, ...]] = []
    assignment: Dict[NodeId, NodeId] = {}
    used = set()

    def consistent(v: NodeId, target: NodeId) -> bool:
        for src, rel, tgt in fragment.edges:
            if src == v or tgt == v:
                a = target if src == v else assignment.get(src)
                b = target if tgt == v else assignment.get(tgt)
                if a is not None and b is not None and (a, rel, b) not in graph.edge_set:
                    return False
        return True

    def extend(depth: int):
        if depth == len(order):
            results.append(tuple(assignment[k] for k in range(len(fragment.nodes))))
            return
        v = order[depth]
        if depth == 0:
            pool = range(len(graph.nodes))
        else:
            parent, rel = anchor[v]
            pool = [t for r, t in graph.children[assignment[parent]] if r == rel]
        for target in pool:
            if target in used or graph.nodes[target].label != labels[v]:
                continue
            if not consistent(v, target):
                continue
            assignment[v] = target
            used.add(target)
            extend(depth + 1)
            used.discard(target)
            del assignment[v]

    extend(0)
    return sorted(set(results))


def candidates(
    graph: AmrGraph,
    bank: Optional[RuleBank] = None,
    skip_list: Iterable[str] = DEFAULT_SKIP_LIST,
    verbalizations: Optional[Iterable[Verbalization]] = None,
    concept_rules: bool = True,
) -> List[MatchedRule]:
    """Matched induced rules followed by matched concept/verbalization rules."""
    out: List[MatchedRule] = []
    seen = set()

    def add(rule: Rule):
        for mapping in match_fragment(graph, rule.fragment):
            m = MatchedRule(rule, mapping)
            marker = (rule.key, rule.translation, mapping)
            if marker not in seen:
                seen.add(marker)
                out.append(m)

    if bank is not None:
        for concept in sorted({n.concept for n in graph.nodes}):
            for rule in bank.rules_for_root(concept):
                add(rule)
    if concept_rules:
        for rule in generate_concept_rules(graph, skip_list, verbalizations):
            add(rule)
    return out


def uncovered(graph: AmrGraph, matched: Iterable[MatchedRule]) -> List[NodeId]:
    covered = set()
    for m in matched:
        covered |= m.covered
    return [n.id for n in graph.nodes if n.id not in covered]
