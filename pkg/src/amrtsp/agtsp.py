"""Asymmetric generalized TSP instances built from matched rules, and solvers.

Nodes are ``(concept, matched rule)`` pairs plus a start and an end node.
Every input concept owns one group; start and end are singleton groups.
Illegal moves cost ``INFINITE`` (IEEE infinity, so sums saturate).

Node layout: index 0 is the start node, the last index is the end node and
the ordinary nodes sit in between, grouped by concept in input BFS order.
"""
from __future__ import annotations

import itertools
import math
import random
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .amr import AmrGraph, NodeId, bfs_order
from .lm import NgramLm, score_continuation
from .rules import MatchedRule, uncovered
from .transition import TransitionModel, extract_features

INFINITE = math.inf
DEFAULT_EXACT_LIMIT = 16
START, END, NODE = "start", "end", "node"


class CoverageError(ValueError):
    pass


class InfeasibleError(RuntimeError):
    pass


class InvalidTourError(ValueError):
    pass


@dataclass(frozen=True)
class AgtspNode:
    concept: Optional[NodeId]
    rule: Optional[MatchedRule]
    kind: str = NODE

    @property
    def is_start(self) -> bool:
        return self.kind == START

    @property
    def is_end(self) -> bool:
        return self.kind == END

    def __str__(self):
        if self.kind != NODE:
            return "<s>" if self.is_start else "</s>"
        if self.rule is None:
            return f"({self.concept})"
        return f"({self.concept}, {' '.join(self.rule.translation) or '∅'})"


@dataclass(frozen=True)
class Tour:
    nodes: Tuple[int, ...]
    total_cost: float


class AgtspInstance:
    def __init__(self, nodes: Sequence[AgtspNode], groups: Sequence[Sequence[int]], costs: np.ndarray):
        self.nodes = tuple(nodes)
        self.groups = tuple(tuple(g) for g in groups)
        self.costs = np.asarray(costs, dtype=float)
        n = len(self.nodes)
        if self.costs.shape != (n, n):
            raise ValueError(f"cost matrix shape {self.costs.shape} does not match {n} nodes")
        self.start, self.end = 0, n - 1
        if not (self.nodes[0].is_start and self.nodes[-1].is_end):
            raise ValueError("node 0 must be the start node and the last node the end node")
        self.group_of = np.full(n, -1, dtype=int)
        for gi, members in enumerate(self.groups):
            for v in members:
                if self.group_of[v] != -1:
                    raise ValueError(f"node {v} is in two groups")
                self.group_of[v] = gi
        if (self.group_of == -1).any():
            raise ValueError("group partition does not cover every node")
        if self.groups[0] != (0,) or self.groups[-1] != (n - 1,):
            raise ValueError("start and end must be singleton first/last groups")
        if np.any(self.costs < 0) or np.any(np.isnan(self.costs)):
            raise ValueError("costs must be non-negative")
        if not (self.costs[0, n - 1] == INFINITE and self.costs[n - 1, 0] == 0):
            raise ValueError("cost[start][end] must be infinite and cost[end][start] zero")
        if not np.all(np.diag(self.costs) == INFINITE):
            raise ValueError("diagonal costs must be infinite")

    @classmethod
    def from_matrix(cls, costs, groups: Sequence[Sequence[int]]) -> "AgtspInstance":
        """Instance over an explicit matrix; ``groups`` lists the ordinary groups."""
        costs = np.asarray(costs, dtype=float)
        n = costs.shape[0]
        nodes = [AgtspNode(None, None, START)]
        nodes += [AgtspNode(i, None, NODE) for i in range(1, n - 1)]
        nodes.append(AgtspNode(None, None, END))
        return cls(nodes, [(0,)] + [tuple(g) for g in groups] + [(n - 1,)], costs)

    @property
    def ordinary_groups(self) -> Tuple[Tuple[int, ...], ...]:
        return self.groups[1:-1]

    @property
    def m(self) -> int:
        return len(self.groups) - 2

    def __len__(self):
        return len(self.nodes)

    def index_of(self, concept: NodeId, rule: MatchedRule) -> int:
        for i, node in enumerate(self.nodes):
            if node.concept == concept and node.rule == rule:
                return i
        raise KeyError((concept, rule))


# ---------------------------------------------------------------------------
# building

class TransitionScorer:
    """ModelScore(n_i, n_j) = -ln p(yes | n_i, n_j), cached per rule pair.

    With ``baseline_bigram`` the maxent model is replaced by the LM's own
    transition probability with a one-token history.
    """

    def __init__(self, graph: AmrGraph, model: Optional[TransitionModel], lm: NgramLm,
                 lowercase: bool = True, baseline_bigram: bool = False):
        if model is None and not baseline_bigram:
            raise ValueError("a transition model is required unless baseline_bigram is set")
        self.graph = graph
        self.model = model
        self.lm = lm
        self.lowercase = lowercase
        self.baseline_bigram = baseline_bigram
        self._cache: Dict[Tuple, float] = {}

    def features(self, src: AgtspNode, dst: AgtspNode):
        return extract_features(src, dst, self.graph, self.lm, self.lowercase)

    def __call__(self, src: AgtspNode, dst: AgtspNode) -> float:
        key = (src.kind, src.rule, dst.kind, dst.rule)
        cost = self._cache.get(key)
        if cost is None:
            cost = self._compute(src, dst)
            self._cache[key] = cost
        return cost

    def _tokens(self, tokens):
        return [t.lower() for t in tokens] if self.lowercase else list(tokens)

    def _compute(self, src: AgtspNode, dst: AgtspNode) -> float:
        if not self.baseline_bigram:
            return self.model.cost(self.features(src, dst))
        ctx = ["<s>"] if src.is_start else self._tokens(src.rule.translation)[-1:]
        cont = ["</s>"] if dst.is_end else self._tokens(dst.rule.translation)
        return -score_continuation(self.lm, ctx, cont) * math.log(10.0)


def build_instance(
    graph: AmrGraph,
    candidates: Sequence[MatchedRule],
    model: Optional[TransitionModel] = None,
    lm: Optional[NgramLm] = None,
    *,
    scorer: Optional[Callable[[AgtspNode, AgtspNode], float]] = None,
    lowercase: bool = True,
    baseline_bigram: bool = False,
) -> AgtspInstance:
    """Fill the traveling-cost matrix.

    start -> n_i is scored iff c_i heads its rule's BFS order, n_i -> end iff
    c_i is last.  Inside one rule, stepping to the BFS successor costs 0.
    Between rules with disjoint coverage, last -> first is scored.  Every
    other move is infinite.
    """
    missing = uncovered(graph, candidates)
    if missing:
        names = ", ".join(graph.nodes[i].concept for i in missing)
        raise CoverageError(f"no candidate rule covers: {names}")
    if scorer is None:
        scorer = TransitionScorer(graph, model, lm, lowercase, baseline_bigram)

    nodes: List[AgtspNode] = [AgtspNode(None, None, START)]
    groups: List[Tuple[int, ...]] = [(0,)]
    for concept in bfs_order(graph, graph.root):
        members = []
        for matched in candidates:
            if concept in matched.covered:
                members.append(len(nodes))
                nodes.append(AgtspNode(concept, matched))
        groups.append(tuple(members))
    end = len(nodes)
    nodes.append(AgtspNode(None, None, END))
    groups.append((end,))

    n = len(nodes)
    T = np.full((n, n), INFINITE)
    T[end, 0] = 0.0
    s_node, e_node = nodes[0], nodes[end]
    for i in range(1, end):
        ni = nodes[i]
        if ni.concept == ni.rule.first:
            T[0, i] = scorer(s_node, ni)
        if ni.concept == ni.rule.last:
            T[i, end] = scorer(ni, e_node)
    for i in range(1, end):
        ni = nodes[i]
        ri = ni.rule
        for j in range(1, end):
            nj = nodes[j]
            rj = nj.rule
            if ri == rj:
                if ri.successor.get(ni.concept) == nj.concept:
                    T[i, j] = 0.0
            elif (ni.concept == ri.last and nj.concept == rj.first
                  and ri.covered.isdisjoint(rj.covered)):
                T[i, j] = scorer(ni, nj)
    return AgtspInstance(nodes, groups, T)


# ---------------------------------------------------------------------------
# evaluation

def check_tour(instance: AgtspInstance, nodes: Sequence[int]) -> None:
    if len(nodes) < 2 or nodes[0] != instance.start or nodes[-1] != instance.end:
        raise InvalidTourError("a tour runs from the start node to the end node")
    seen = [instance.group_of[v] for v in nodes]
    if len(set(seen)) != len(seen):
        raise InvalidTourError("a group is visited twice")
    if len(seen) != len(instance.groups):
        raise InvalidTourError("a group is never visited")


def tour_cost(instance: AgtspInstance, nodes: Sequence[int]) -> float:
    """Sum of consecutive costs plus the closing end -> start step."""
    if isinstance(nodes, Tour):
        nodes = nodes.nodes
    check_tour(instance, nodes)
    C = instance.costs
    total = 0.0
    for a, b in zip(nodes, nodes[1:]):
        total += C[a, b]
    return float(total + C[instance.end, instance.start])


def _make_tour(instance: AgtspInstance, nodes: Sequence[int]) -> Tour:
    nodes = tuple(int(v) for v in nodes)
    return Tour(nodes, tour_cost(instance, nodes))


# ---------------------------------------------------------------------------
# exact dynamic program

def solve_exact(instance: AgtspInstance, limit: int = DEFAULT_EXACT_LIMIT) -> Tour:
    """Optimal tour by DP over (visited-group subset, current node).

    Values are computed backwards (cost to finish); the tour is then rebuilt
    forwards taking the lowest node index among optimal moves, which gives
    the lexicographically smallest optimal node sequence.
    """
    m = instance.m
    if m > limit:
        raise ValueError(f"{m} groups exceed the exact limit of {limit}")
    C = instance.costs
    ordinary = np.arange(1, len(instance) - 1)
    k = len(ordinary)
    bit = np.array([1 << (instance.group_of[v] - 1) for v in ordinary], dtype=np.int64)
    inner = C[1:-1, 1:-1]
    to_end = C[1:-1, -1]
    from_start = C[0, 1:-1]
    full = (1 << m) - 1

    best = np.full((full + 1, k), INFINITE)
    best[full] = to_end
    for mask in range(full - 1, 0, -1):
        visited = (bit & mask) != 0
        if not visited.any():
            continue
        rest = ~visited
        u = np.nonzero(rest)[0]
        vals = best[mask | bit[u], u]
        v = np.nonzero(visited)[0]
        best[mask, v] = (inner[np.ix_(v, u)] + vals).min(axis=1)

    first = from_start + best[bit, np.arange(k)]
    total = float(first.min())
    if not math.isfinite(total):
        raise InfeasibleError("no finite tour exists")

    def tol(x):
        return 1e-12 * max(1.0, abs(x))

    seq = [instance.start]
    target = total
    row = from_start
    mask = 0
    for _ in range(m):
        cand = np.nonzero((bit & mask) == 0)[0]
        values = row[cand] + best[mask | bit[cand], cand]
        pick = int(cand[np.nonzero(values <= target + tol(target))[0][0]])
        seq.append(int(ordinary[pick]))
        mask |= int(bit[pick])
        target = float(best[mask, pick])
        row = inner[pick]
    seq.append(instance.end)
    return _make_tour(instance, seq)


# ---------------------------------------------------------------------------
# heuristic

def _path_cost(C: np.ndarray, seq: Sequence[int]) -> float:
    return float(sum(C[a, b] for a, b in zip(seq, seq[1:])))


def _reselect(instance: AgtspInstance, seq: List[int]) -> List[int]:
    """Best node per group for a fixed group order (layered shortest path)."""
    C = instance.costs
    layers = [instance.groups[instance.group_of[v]] for v in seq]
    cost = {seq[0]: 0.0}
    back: List[Dict[int, int]] = []
    for layer in layers[1:]:
        nxt, ptr = {}, {}
        for b in layer:
            best_a, best_c = None, INFINITE
            for a, ca in cost.items():
                c = ca + C[a, b]
                if c < best_c:
                    best_a, best_c = a, c
            if best_a is not None:
                nxt[b], ptr[b] = best_c, best_a
        if not nxt:
            return seq
        cost = nxt
        back.append(ptr)
    node = min(cost, key=lambda b: (cost[b], b))
    if not math.isfinite(cost[node]):
        return seq
    out = [node]
    for ptr in reversed(back):
        node = ptr[node]
        out.append(node)
    out.reverse()
    return out


def _construct(instance: AgtspInstance, rng: random.Random, greedy: bool, max_expansions: int) -> Optional[List[int]]:
    """Nearest-feasible-neighbour construction with backtracking."""
    C = instance.costs
    total_groups = instance.m
    expansions = 0
    seq = [instance.start]
    used = {instance.group_of[instance.start]}

    def options(cur):
        outs = []
        for v in range(1, len(instance) - 1):
            if instance.group_of[v] not in used and C[cur, v] < INFINITE:
                outs.append((C[cur, v], v))
        outs.sort()
        if not greedy and len(outs) > 1:
            # randomised: shuffle among the cheapest few
            head = outs[:3]
            rng.shuffle(head)
            outs = head + outs[3:]
        return outs

    def dfs() -> bool:
        nonlocal expansions
        cur = seq[-1]
        if len(seq) - 1 == total_groups:
            return C[cur, instance.end] < INFINITE
        for _, v in options(cur):
            expansions += 1
            if expansions > max_expansions:
                return False
            seq.append(v)
            used.add(instance.group_of[v])
            if dfs():
                return True
            used.discard(instance.group_of[v])
            seq.pop()
        return False

    if dfs():
        return seq + [instance.end]
    return None


def _improve(instance: AgtspInstance, seq: List[int], max_segment: int) -> List[int]:
    """Local search to a local optimum: node swaps, Or-opt relocation, 2-opt."""
    C = instance.costs
    best_cost = _path_cost(C, seq)
    improved = True
    while improved:
        improved = False
        reselected = _reselect(instance, seq)
        rc = _path_cost(C, reselected)
        if rc < best_cost - 1e-12:
            seq, best_cost = reselected, rc
        n = len(seq)
        # node swap within group
        for p in range(1, n - 1):
            a, v, b = seq[p - 1], seq[p], seq[p + 1]
            here = C[a, v] + C[v, b]
            for w in instance.groups[instance.group_of[v]]:
                if w != v and C[a, w] + C[w, b] < here - 1e-12:
                    seq[p] = w
                    here = C[a, w] + C[w, b]
                    improved = True
        if improved:
            best_cost = _path_cost(C, seq)
            continue
        # Or-opt: move seq[i:j] between seq[k-1] and seq[k]
        for length in range(1, min(max_segment, n - 2) + 1):
            for i in range(1, n - length):
                j = i + length
                head, tail = seq[i], seq[j - 1]
                before, after = seq[i - 1], seq[j]
                if not math.isfinite(C[before, after]):
                    continue
                kept = C[before, head] + C[tail, after]
                for k in range(1, n):
                    if i <= k <= j:
                        continue
                    a, b = seq[k - 1], seq[k]
                    old = kept + C[a, b]
                    new = C[before, after] + C[a, head] + C[tail, b]
                    if new < old - 1e-12:
                        seg = seq[i:j]
                        rest = seq[:i] + seq[j:]
                        pos = k if k < i else k - length
                        seq = rest[:pos] + seg + rest[pos:]
                        improved = True
                        break
                if improved:
                    break
            if improved:
                break
        if improved:
            best_cost = _path_cost(C, seq)
            continue
        # 2-opt: reverse seq[i:j+1]
        for i in range(1, n - 2):
            for j in range(i + 1, n - 1):
                cand = seq[:i] + seq[i:j + 1][::-1] + seq[j + 1:]
                cc = _path_cost(C, cand)
                if cc < best_cost - 1e-12:
                    seq, best_cost = cand, cc
                    improved = True
                    break
            if improved:
                break
    return seq


def _perturb(seq: List[int], rng: random.Random) -> List[int]:
    inner = seq[1:-1]
    if len(inner) < 3:
        rng.shuffle(inner)
    else:
        i, j = sorted(rng.sample(range(len(inner) + 1), 2))
        inner = inner[:i] + inner[j:] + inner[i:j]
    return [seq[0]] + inner + [seq[-1]]


def solve_heuristic(
    instance: AgtspInstance,
    seed: int = 0,
    restarts: int = 30,
    time_limit: Optional[float] = None,
    max_segment: int = 8,
    max_expansions: int = 200_000,
) -> Tour:
    """Construction plus iterated local search; deterministic for a seed.

    ``restarts`` bounds the work.  ``time_limit`` (seconds) is an optional
    safety cap and makes results depend on machine speed when it triggers.
    """
    rng = random.Random(seed)
    deadline = None if time_limit is None else time.monotonic() + time_limit
    C = instance.costs
    seq = _construct(instance, rng, True, max_expansions)
    if seq is None:
        raise InfeasibleError("construction found no finite tour")
    best = _improve(instance, seq, max_segment)
    best_cost = _path_cost(C, best)
    current, current_cost = best, best_cost
    for _ in range(restarts):
        if deadline is not None and time.monotonic() > deadline:
            break
        if rng.random() < 0.5:
            start = _construct(instance, rng, False, max_expansions)
            if start is None:
                continue
        else:
            start = _perturb(current, rng)
            if not math.isfinite(_path_cost(C, start)):
                start = _reselect(instance, start)
        cand = _improve(instance, start, max_segment)
        cc = _path_cost(C, cand)
        if not math.isfinite(cc):
            continue
        if cc < current_cost - 1e-12:
            current, current_cost = cand, cc
        if cc < best_cost - 1e-12 or (abs(cc - best_cost) <= 1e-12 and cand < best):
            best, best_cost = cand, cc
    return _make_tour(instance, best)


def solve(instance: AgtspInstance, limit: int = DEFAULT_EXACT_LIMIT, seed: int = 0, **kw) -> Tour:
    if instance.m <= limit:
        return solve_exact(instance, limit)
    return solve_heuristic(instance, seed, **kw)


# ---------------------------------------------------------------------------
# debug dumps

def dump_instance(instance: AgtspInstance, stem) -> None:
    """Write ``<stem>.costs.tsv`` (matrix, "inf" for illegal) and ``<stem>.groups.tsv``."""
    with open(f"{stem}.costs.tsv", "w", encoding="utf-8") as fh:
        for row in instance.costs:
            fh.write("\t".join("inf" if math.isinf(x) else repr(float(x)) for x in row) + "\n")
    with open(f"{stem}.groups.tsv", "w", encoding="utf-8") as fh:
        fh.write("node\tgroup\tkind\tlabel\n")
        for i, node in enumerate(instance.nodes):
            fh.write(f"{i}\t{instance.group_of[i]}\t{node.kind}\t{node}\n")


def load_instance(stem) -> AgtspInstance:
    with open(f"{stem}.costs.tsv", encoding="utf-8") as fh:
        costs = np.array([[float(x) for x in line.split("\t")] for line in fh if line.strip()])
    groups: Dict[int, List[int]] = {}
    with open(f"{stem}.groups.tsv", encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            node, group = line.split("\t")[:2]
            groups.setdefault(int(group), []).append(int(node))
    ordered = [groups[g] for g in sorted(groups)]
    return AgtspInstance.from_matrix(costs, ordered[1:-1])


def legal_moves(instance: AgtspInstance) -> List[Tuple[int, int]]:
    return [(int(a), int(b)) for a, b in itertools.product(range(len(instance)), repeat=2)
            if math.isfinite(instance.costs[a, b])]
