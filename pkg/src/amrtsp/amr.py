"""Penman-notation AMR graphs.

An :class:`AmrGraph` is an immutable rooted graph of concept instances.  Node
ids are integers assigned in order of first textual appearance, so the root is
always node 0.  Re-entrance is kept as several edges pointing at one node.

    >>> g = parse_penman("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-01 :ARG0 b))")
    >>> [n.concept for n in g.nodes]
    ['want-01', 'boy', 'go-01']
    >>> bfs_order(g, g.root)
    [0, 1, 2]
"""
from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterator, List, Optional, Tuple

NodeId = int
Edge = Tuple[NodeId, str, NodeId]

# Bare symbols shaped like AMR variables ("b", "b2", "x12") must be defined.
_VARIABLE_SHAPE = re.compile(r"^[a-z]\d*$")

_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<comment>\#[^\n]*)
      | (?P<lparen>\()
      | (?P<rparen>\))
      | (?P<slash>/)
      | (?P<role>:[^\s()/"]*)
      | (?P<string>"(?:\\.|[^"\\])*")
      | (?P<symbol>[^\s()/":][^\s()/"]*)
      | (?P<bad>.)""",
    re.VERBOSE,
)


class PenmanError(ValueError):
    """Base class for penman parse failures; ``position`` is a character offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class EmptyInputError(PenmanError):
    pass


class UnbalancedParenthesisError(PenmanError):
    pass


class VariableRedefinedError(PenmanError):
    pass


class UndefinedVariableError(PenmanError):
    pass


class PenmanSyntaxError(PenmanError):
    pass


@dataclass(frozen=True)
class ConceptNode:
    id: NodeId
    variable: str
    concept: str
    is_constant: bool = False

    @property
    def label(self) -> Tuple[str, bool]:
        return (self.concept, self.is_constant)


@dataclass(frozen=True)
class AmrGraph:
    nodes: Tuple[ConceptNode, ...]
    edges: Tuple[Edge, ...]
    root: NodeId = 0

    def __post_init__(self):
        if not self.nodes:
            raise ValueError("an AMR graph needs at least one node")
        for i, node in enumerate(self.nodes):
            if node.id != i:
                raise ValueError(f"node ids must be 0..n-1 in order, got {node.id} at {i}")

    def __len__(self) -> int:
        return len(self.nodes)

    @cached_property
    def children(self) -> Tuple[Tuple[Tuple[str, NodeId], ...], ...]:
        out: List[List[Tuple[str, NodeId]]] = [[] for _ in self.nodes]
        for src, rel, tgt in self.edges:
            out[src].append((rel, tgt))
        return tuple(tuple(c) for c in out)

    @cached_property
    def neighbours(self) -> Tuple[Tuple[NodeId, ...], ...]:
        out: List[List[NodeId]] = [[] for _ in self.nodes]
        for src, _, tgt in self.edges:
            out[src].append(tgt)
            out[tgt].append(src)
        return tuple(tuple(n) for n in out)

    @cached_property
    def edge_set(self) -> frozenset:
        return frozenset(self.edges)

    @cached_property
    def by_variable(self) -> Dict[str, NodeId]:
        return {n.variable: n.id for n in self.nodes if not n.is_constant}

    def node(self, node_id: NodeId) -> ConceptNode:
        return self.nodes[node_id]

    def concepts(self) -> List[str]:
        return [n.concept for n in self.nodes]

    def __str__(self) -> str:
        return serialize(self)


# ---------------------------------------------------------------------------
# parsing

@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> List[_Tok]:
    toks = []
    for m in _TOKEN_RE.finditer(text):
        kind = m.lastgroup
        if kind in ("ws", "comment"):
            continue
        if kind == "bad":
            raise PenmanSyntaxError(f"unexpected character {m.group()!r}", m.start())
        toks.append(_Tok(kind, m.group(), m.start()))
    return toks


@dataclass
class _Tree:
    """Intermediate parse: a defined instance and its outgoing roles."""

    variable: str
    concept: str
    pos: int
    roles: List[Tuple[str, object]] = field(default_factory=list)


@dataclass
class _Atom:
    text: str
    pos: int
    is_string: bool


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> Optional[_Tok]:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self, expect: str) -> _Tok:
        tok = self.peek()
        if tok is None:
            if expect == "rparen":
                raise UnbalancedParenthesisError("missing ')'", len(self.text))
            raise PenmanSyntaxError(f"unexpected end of input, expected {expect}", len(self.text))
        if tok.kind != expect:
            raise PenmanSyntaxError(f"expected {expect}, found {tok.text!r}", tok.pos)
        self.i += 1
        return tok

    def parse(self) -> _Tree:
        if not self.toks:
            raise EmptyInputError("empty penman input", 0)
        first = self.peek()
        if first.kind == "rparen":
            raise UnbalancedParenthesisError("unmatched ')'", first.pos)
        tree = self.node()
        rest = self.peek()
        if rest is not None:
            if rest.kind == "rparen":
                raise UnbalancedParenthesisError("unmatched ')'", rest.pos)
            raise PenmanSyntaxError(f"trailing input {rest.text!r}", rest.pos)
        return tree

    def node(self) -> _Tree:
        lp = self.next("lparen")
        var = self.next("symbol")
        self.next("slash")
        concept = self._concept()
        tree = _Tree(var.text, concept.text, lp.pos)
        while True:
            tok = self.peek()
            if tok is None:
                raise UnbalancedParenthesisError("missing ')'", lp.pos)
            if tok.kind == "rparen":
                self.i += 1
                return tree
            role = self.next("role")
            if role.text == ":":
                raise PenmanSyntaxError("empty role name", role.pos)
            tree.roles.append((role.text, self.target()))

    def _concept(self) -> _Tok:
        tok = self.peek()
        if tok is not None and tok.kind in ("symbol", "string"):
            self.i += 1
            return tok
        return self.next("symbol")

    def target(self):
        tok = self.peek()
        if tok is None:
            raise PenmanSyntaxError("role without a target", len(self.text))
        if tok.kind == "lparen":
            return self.node()
        if tok.kind == "string":
            self.i += 1
            return _Atom(tok.text, tok.pos, True)
        if tok.kind == "symbol":
            self.i += 1
            nxt = self.peek()
            if nxt is not None and nxt.kind == "slash":
                # compact leaf form "g/go-01" with no parentheses
                self.i += 1
                concept = self._concept()
                return _Tree(tok.text, concept.text, tok.pos)
            return _Atom(tok.text, tok.pos, False)
        raise PenmanSyntaxError(f"unexpected {tok.text!r} after role", tok.pos)


def parse_penman(text: str) -> AmrGraph:
    """Parse one penman expression into an :class:`AmrGraph`.

    Raises a :class:`PenmanError` subclass on empty input, unbalanced
    parentheses, a variable redefined with another concept, or a reference to
    a variable that is never defined.
    """
    tree = _Parser(text).parse()

    definitions: Dict[str, str] = {}

    def collect(t: _Tree):
        seen = definitions.get(t.variable)
        if seen is not None and seen != t.concept:
            raise VariableRedefinedError(
                f"variable {t.variable!r} redefined as {t.concept!r} (was {seen!r})", t.pos)
        definitions[t.variable] = t.concept
        for _, child in t.roles:
            if isinstance(child, _Tree):
                collect(child)

    collect(tree)

    nodes: List[ConceptNode] = []
    var_ids: Dict[str, NodeId] = {}
    pending: List[Tuple[NodeId, str, object]] = []

    def new_node(variable, concept, is_constant) -> NodeId:
        nid = len(nodes)
        nodes.append(ConceptNode(nid, variable, concept, is_constant))
        return nid

    def define(t: _Tree) -> NodeId:
        if t.variable in var_ids:
            nid = var_ids[t.variable]
        else:
            nid = var_ids[t.variable] = new_node(t.variable, t.concept, False)
        for role, child in t.roles:
            if isinstance(child, _Tree):
                pending.append((nid, role, define(child)))
            elif not child.is_string and child.text in definitions:
                pending.append((nid, role, child.text))  # resolved below
            elif not child.is_string and _VARIABLE_SHAPE.match(child.text):
                raise UndefinedVariableError(f"undefined variable {child.text!r}", child.pos)
            else:
                pending.append((nid, role, new_node("", child.text, True)))
        return nid

    define(tree)
    edges = tuple(
        (src, role, var_ids[tgt] if isinstance(tgt, str) else tgt) for src, role, tgt in pending
    )
    return AmrGraph(tuple(nodes), edges, 0)


def serialize(graph: AmrGraph, indent: Optional[int] = None) -> str:
    """Write ``graph`` back as penman text (single line unless ``indent`` is set)."""
    seen = set()

    def write(nid: NodeId, depth: int) -> str:
        node = graph.nodes[nid]
        if node.is_constant:
            return node.concept
        if nid in seen:
            return node.variable
        seen.add(nid)
        parts = [f"({node.variable} / {node.concept}"]
        for rel, child in graph.children[nid]:
            sep = " " if indent is None else "\n" + " " * (indent * (depth + 1))
            parts.append(f"{sep}{rel} {write(child, depth + 1)}")
        return "".join(parts) + ")"

    return write(graph.root, 0)


# ---------------------------------------------------------------------------
# queries

def _check(graph: AmrGraph, node_id: NodeId):
    if not 0 <= node_id < len(graph.nodes):
        raise KeyError(f"node {node_id} not in graph")


def bfs_order(graph: AmrGraph, start: NodeId) -> List[NodeId]:
    """Breadth-first order over directed edges, children in textual role order."""
    _check(graph, start)
    order = [start]
    seen = {start}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        for _, child in graph.children[cur]:
            if child not in seen:
                seen.add(child)
                order.append(child)
                queue.append(child)
    return order


def undirected_distance(graph: AmrGraph, a: NodeId, b: NodeId) -> int:
    _check(graph, a)
    _check(graph, b)
    if a == b:
        return 0
    dist = {a: 0}
    queue = deque([a])
    while queue:
        cur = queue.popleft()
        for nb in graph.neighbours[cur]:
            if nb not in dist:
                dist[nb] = dist[cur] + 1
                if nb == b:
                    return dist[nb]
                queue.append(nb)
    raise ValueError(f"nodes {a} and {b} are disconnected")


def canonical_key(graph: AmrGraph) -> str:
    """Penman string with variables renamed by first appearance.

    Two fragments written with different variable names but the same shape
    and role order get the same key.
    """
    names = {}
    for node in graph.nodes:
        if not node.is_constant:
            names[node.id] = f"x{len(names)}"
    renamed = tuple(
        ConceptNode(n.id, names.get(n.id, ""), n.concept, n.is_constant) for n in graph.nodes
    )
    return serialize(AmrGraph(renamed, graph.edges, graph.root))


# ---------------------------------------------------------------------------
# AMR-bank corpus files

@dataclass(frozen=True)
class AmrBlock:
    index: int
    metadata: Dict[str, str]
    penman: str
    line: int

    @property
    def sentence(self) -> Optional[str]:
        return self.metadata.get("snt")


def _parse_metadata(line: str, into: Dict[str, str]):
    body = line.lstrip("#").strip()
    # "# ::snt" keeps the rest of the line verbatim; other lines may carry
    # several "::key value" pairs.
    if body.startswith("::snt ") or body == "::snt":
        into["snt"] = body[len("::snt"):].strip()
        return
    for m in re.finditer(r"::(\S+)\s*(.*?)(?=\s::\S|$)", body):
        into[m.group(1)] = m.group(2).strip()


def iter_amr_blocks(text: str) -> Iterator[AmrBlock]:
    """Split AMR-bank text into blocks: "# ::" metadata then a penman graph."""
    meta: Dict[str, str] = {}
    graph_lines: List[str] = []
    start = 0
    index = 0

    def flush():
        nonlocal meta, graph_lines, index
        block = None
        if graph_lines:
            block = AmrBlock(index, meta, "\n".join(graph_lines), start)
            index += 1
        meta, graph_lines = {}, []
        return block

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip()
        if not line.strip():
            block = flush()
            if block:
                yield block
            continue
        if not graph_lines and not meta:
            start = lineno
        if line.lstrip().startswith("#"):
            if line.lstrip().startswith("# ::"):
                _parse_metadata(line, meta)
            continue
        graph_lines.append(line)
    block = flush()
    if block:
        yield block


def read_amr_blocks(path) -> List[AmrBlock]:
    with open(path, encoding="utf-8") as fh:
        return list(iter_amr_blocks(fh.read()))
