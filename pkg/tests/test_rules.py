import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from amrtsp import morphology
from amrtsp.amr import AmrGraph, ConceptNode, bfs_order, parse_penman
from amrtsp.rules import (
    CONCEPT,
    INDUCED,
    VERBALIZATION,
    Rule,
    RuleBank,
    RuleFileError,
    VerbalizationList,
    candidates,
    generate_concept_rules,
    load_rules,
    match_fragment,
    parse_rule_line,
    read_rules,
    uncovered,
)
from amrtsp.synthetic import random_amr


def test_variants():
    assert morphology.variants("want-01") == ["want", "wants", "wanted", "wanting"]
    assert set(morphology.variants("boy")) == {"boy", "boys"}
    assert morphology.past("stop") == "stopped" and morphology.gerund("make") == "making"
    assert morphology.plural("city") == "cities" and morphology.plural("box") == "boxes"


def test_rule_line_r3():
    rule = parse_rule_line("(w / want-01 :ARG1 (g / go-01)) ||| wants to go ||| 5")
    assert len(rule.fragment.nodes) == 2
    assert rule.translation == ("wants", "to", "go") and rule.count == 5
    assert rule.origin == INDUCED and rule.root_concept == "want-01"


@pytest.mark.parametrize("line", [
    "(b / boy) ||| boy",
    "(b / boy ||| boy ||| 1",
    "(b / boy) ||| boy ||| many",
    "(b / boy) ||| boy ||| -3",
    "(b / boy) |||   ||| 1",
])
def test_rule_line_errors(line):
    with pytest.raises(RuleFileError):
        parse_rule_line(line, 7)


def test_top_n(tmp_path):
    path = tmp_path / "rules.txt"
    path.write_text("(b / boy) ||| lad ||| 2\n(b / boy) ||| the boy ||| 5\n")
    bank = load_rules(path, top_n=1)
    assert [r.translation for r in bank] == [("the", "boy")]


def test_empty_file(tmp_path):
    path = tmp_path / "rules.txt"
    path.write_text("")
    assert len(load_rules(path)) == 0


def test_duplicate_rules_sum_counts():
    bank = RuleBank(read_rules(["(b / boy) ||| boy ||| 2", "(x / boy) ||| boy ||| 3"]))
    assert [r.count for r in bank] == [5]


def test_dump_round_trip(tmp_path, bank):
    path = tmp_path / "dump.txt"
    bank.dump(path)
    again = load_rules(path)
    assert [(r.key, r.translation, r.count) for r in again] == [(r.key, r.translation, r.count) for r in bank]


@settings(max_examples=50, deadline=None)
@given(entries=st.lists(st.tuples(st.sampled_from(["boy", "girl", "dog"]),
                                  st.sampled_from(["a", "b", "c", "d", "e"]),
                                  st.integers(0, 9)), max_size=30),
       top_n=st.integers(1, 4))
def test_top_n_invariant(entries, top_n):
    rules = [Rule(parse_penman(f"(x / {c})"), (t,), n) for c, t, n in entries]
    bank = RuleBank(rules, top_n)
    by_key = {}
    for r in bank:
        by_key.setdefault(r.key, []).append(r)
    for kept in by_key.values():
        assert len(kept) <= top_n
        assert [(-r.count, r.translation) for r in kept] == sorted((-r.count, r.translation) for r in kept)
    # nothing dropped beats anything kept
    totals = {}
    for r in rules:
        totals[(r.key, r.translation)] = totals.get((r.key, r.translation), 0) + r.count
    for (key, tr), count in totals.items():
        kept = by_key[key]
        if all(k.translation != tr for k in kept):
            assert len(kept) == top_n
            assert all((-k.count, k.translation) < (-count, tr) for k in kept)


def test_concept_rules_want(want_go):
    rules = generate_concept_rules(want_go)
    want = [" ".join(r.translation) for r in rules if r.root_concept == "want-01"]
    assert want == ["want", "wants", "wanted", "wanting"]
    assert all(r.origin == CONCEPT for r in rules)


def test_concept_rules_skip_list():
    graph = parse_penman("(h / have-rel-role-91 :ARG0 (b / boy))")
    skipped = [r for r in generate_concept_rules(graph) if r.root_concept == "have-rel-role-91"]
    assert len(skipped) == 1 and skipped[0].translation == ()


def test_concept_rules_constants():
    graph = parse_penman('(c / city :polarity - :name (n / name :op1 "New" :op2 "York"))')
    words = {r.translation for r in generate_concept_rules(graph)}
    assert ("not",) in words and ("New",) in words and ("York",) in words


def test_verbalization():
    vlist = VerbalizationList.parse([
        "VERBALIZE peacekeeping TO keep-01 :ARG1 peace",
        "DO-NOT-VERBALIZE something TO else",
        "VERBALIZE broken TO",
    ])
    assert len(vlist) == 1 and vlist.skipped == 2
    graph = parse_penman("(k / keep-01 :ARG1 (p / peace))")
    verbal = [r for r in generate_concept_rules(graph, verbalizations=vlist) if r.origin == VERBALIZATION]
    assert len(verbal) == 1
    rule = verbal[0]
    assert rule.translation == ("peacekeeping",)
    assert rule.key == parse_rule_line("(k/keep-01 :ARG1 (p/peace)) ||| x ||| 0").key
    assert match_fragment(graph, rule.fragment) == [(0, 1)]


def test_match_examples(want_go, rules):
    w, b, g = (want_go.by_variable[v] for v in "wbg")
    assert match_fragment(want_go, rules["r3"].fragment) == [(w, g)]
    assert match_fragment(want_go, rules["r4"].fragment) == [(b,)]
    assert match_fragment(want_go, parse_penman("(d / dog)")) == []


def _brute_matches(graph, fragment):
    # every injective map, filtered by labels and edges
    k = len(fragment.nodes)
    found = []
    for image in itertools.permutations(range(len(graph.nodes)), k):
        if any(graph.nodes[image[i]].label != fragment.nodes[i].label for i in range(k)):
            continue
        if all((image[s], r, image[t]) in graph.edge_set for s, r, t in fragment.edges):
            found.append(image)
    return sorted(found)


def _random_fragment(rng, graph, size):
    # connected sub-fragment grown from a random node along outgoing edges
    start = rng.randrange(len(graph.nodes))
    chosen, edges = [start], []
    frontier = list(graph.children[start])
    while frontier and len(chosen) < size:
        rel, t = frontier.pop(rng.randrange(len(frontier)))
        src = next(s for s in chosen if (s, rel, t) in graph.edge_set)
        if t in chosen:
            continue
        chosen.append(t)
        edges.append((src, rel, t))
        frontier.extend(graph.children[t])
    index = {n: i for i, n in enumerate(chosen)}
    nodes = tuple(ConceptNode(index[n], f"v{index[n]}", graph.nodes[n].concept, graph.nodes[n].is_constant)
                  for n in chosen)
    return AmrGraph(nodes, tuple((index[s], r, index[t]) for s, r, t in edges), 0)


@pytest.mark.parametrize("seed", range(40))
def test_match_sound_and_complete(seed):
    rng = random.Random(seed)
    graph = random_amr(rng, rng.randint(1, 7))
    for _ in range(3):
        fragment = _random_fragment(rng, graph, rng.randint(1, 3))
        found = match_fragment(graph, fragment)
        assert found == _brute_matches(graph, fragment)
        assert found


def test_candidates_want_go(want_go, bank, rules):
    cands = candidates(want_go, bank)
    induced = [m for m in cands if m.origin == INDUCED]
    assert sorted(str(m.rule) for m in induced) == sorted(str(r) for r in rules.values())
    roots = {want_go.nodes[m.root].concept for m in cands if m.origin == CONCEPT}
    assert roots == {"want-01", "boy", "go-01"}
    assert uncovered(want_go, cands) == []


def test_candidates_empty_bank(want_go):
    cands = candidates(want_go, RuleBank())
    assert all(m.origin == CONCEPT for m in cands)
    assert uncovered(want_go, cands) == []


def test_candidates_unmatched_rule(rules):
    graph = parse_penman("(b / boy)")
    cands = candidates(graph, RuleBank([rules["r3"]]))
    assert {m.translation for m in cands} == {("boy",), ("boys",)}


@pytest.mark.parametrize("seed", range(30))
def test_coverage_guarantee(seed):
    graph = random_amr(random.Random(seed), 1 + seed % 12)
    cands = candidates(graph, None)
    assert uncovered(graph, cands) == []
    for m in cands:
        assert len(m.covered) == len(m.rule.fragment.nodes)
        assert m.order == tuple(m.mapping[k] for k in bfs_order(m.rule.fragment, m.rule.fragment.root))
