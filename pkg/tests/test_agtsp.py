import math
import random

import numpy as np
import pytest

from amrtsp.agtsp import (
    INFINITE,
    AgtspInstance,
    CoverageError,
    InfeasibleError,
    InvalidTourError,
    build_instance,
    dump_instance,
    legal_moves,
    load_instance,
    solve,
    solve_exact,
    solve_heuristic,
    tour_cost,
)
from amrtsp.amr import parse_penman
from amrtsp.oracle import brute_force, brute_force_cost, main as oracle_main
from amrtsp.rules import RuleBank, candidates
from amrtsp.synthetic import random_amr, random_instance


def constant_scorer(src, dst):
    return 1.0


@pytest.fixture
def toy_instance(want_go, bank, rules):
    """want-go graph with only the four induced rules as candidates."""
    cands = candidates(want_go, bank, concept_rules=False)
    inst = build_instance(want_go, cands, scorer=constant_scorer)
    by_rule = {name: next(m for m in cands if m.rule == r) for name, r in rules.items()}

    def node(var, name):
        return inst.index_of(want_go.by_variable[var], by_rule[name])

    return inst, node


def test_toy_instance_legality(toy_instance):
    inst, node = toy_instance
    C = inst.costs
    assert C[node("w", "r3"), node("g", "r3")] == 0
    assert C[node("g", "r3"), node("w", "r3")] == INFINITE
    assert C[node("g", "r2"), node("w", "r3")] == INFINITE
    assert C[inst.start, inst.end] == INFINITE
    assert C[inst.end, inst.start] == 0
    assert inst.m == 3
    assert [len(g) for g in inst.ordinary_groups] == [2, 1, 2]


def classify(inst, a, b):
    """Which finite clause of the cost-matrix construction licenses a -> b."""
    na, nb = inst.nodes[a], inst.nodes[b]
    if na.is_end and nb.is_start:
        return ["closing"]
    if na.is_end or nb.is_start or (na.is_start and nb.is_end):
        return []
    if na.is_start:
        return ["start"] if nb.concept == nb.rule.first else []
    if nb.is_end:
        return ["end"] if na.concept == na.rule.last else []
    found = []
    if na.rule == nb.rule and na.rule.successor.get(na.concept) == nb.concept:
        found.append("within")
    if (na.rule != nb.rule and na.concept == na.rule.last and nb.concept == nb.rule.first
            and na.rule.covered.isdisjoint(nb.rule.covered)):
        found.append("between")
    return found


@pytest.mark.parametrize("seed", range(25))
def test_matrix_legality(seed):
    rng = random.Random(seed)
    graph = random_amr(rng, rng.randint(1, 6))
    bank = RuleBank()
    inst = build_instance(graph, candidates(graph, bank), scorer=lambda s, d: rng.uniform(0.1, 3))
    n = len(inst)
    for a in range(n):
        for b in range(n):
            clauses = classify(inst, a, b)
            assert len(clauses) <= 1
            assert math.isfinite(inst.costs[a, b]) == (len(clauses) == 1)
            if clauses == ["within"] or clauses == ["closing"]:
                assert inst.costs[a, b] == 0


def test_within_rule_chain(want_go, bank):
    inst = build_instance(want_go, candidates(want_go, bank), scorer=constant_scorer)
    for i, node in enumerate(inst.nodes):
        if node.kind != "node":
            continue
        order = node.rule.order
        idx = [inst.index_of(c, node.rule) for c in order]
        assert sum(inst.costs[a, b] for a, b in zip(idx, idx[1:])) == 0


def hand_costs(inst, node):
    C = inst.costs.copy()
    special = {
        (inst.start, node("b", "r4")): 1.0,
        (node("b", "r4"), node("w", "r3")): 1.0,
        (node("g", "r3"), inst.end): 1.0,
    }
    for a in range(len(inst)):
        for b in range(len(inst)):
            if math.isfinite(C[a, b]) and C[a, b] != 0:
                C[a, b] = special.get((a, b), 5.0)
    return AgtspInstance(inst.nodes, inst.groups, C)


def test_hand_set_toy_instance(toy_instance):
    inst, node = toy_instance
    hand = hand_costs(inst, node)
    expected = (hand.start, node("b", "r4"), node("w", "r3"), node("g", "r3"), hand.end)
    assert brute_force(hand) == (3.0, expected)
    tour = solve_exact(hand)
    assert tour.nodes == expected and tour.total_cost == 3.0
    assert tour_cost(hand, expected) == 3.0
    assert solve_heuristic(hand, seed=0).total_cost == 3.0


def test_reversal_asymmetry(toy_instance):
    inst, node = toy_instance
    hand = hand_costs(inst, node)
    forward = [hand.start, node("b", "r4"), node("w", "r3"), node("g", "r3"), hand.end]
    backward = [hand.start, node("g", "r3"), node("w", "r3"), node("b", "r4"), hand.end]
    assert tour_cost(hand, backward) == INFINITE > tour_cost(hand, forward)


def test_overlap_step_is_infinite(toy_instance):
    inst, node = toy_instance
    tour = [inst.start, node("b", "r4"), node("g", "r2"), node("w", "r3"), inst.end]
    assert tour_cost(inst, tour) == INFINITE


def test_invalid_tours(toy_instance):
    inst, node = toy_instance
    with pytest.raises(InvalidTourError):
        tour_cost(inst, [inst.start, node("b", "r4"), node("w", "r3"), node("w", "r1"), inst.end])
    with pytest.raises(InvalidTourError):
        tour_cost(inst, [inst.start, node("b", "r4"), inst.end])
    with pytest.raises(InvalidTourError):
        tour_cost(inst, [node("b", "r4"), inst.start, inst.end])


def test_single_concept_single_rule(rules):
    graph = parse_penman("(b / boy)")
    inst = build_instance(graph, candidates(graph, RuleBank([rules["r4"]]), concept_rules=False),
                          scorer=constant_scorer)
    assert solve_exact(inst).nodes == (0, 1, 2)


def test_missing_coverage(want_go, rules):
    with pytest.raises(CoverageError):
        build_instance(want_go, candidates(want_go, RuleBank([rules["r4"]]), concept_rules=False),
                       scorer=constant_scorer)


def test_infeasible():
    C = np.full((4, 4), INFINITE)
    C[3, 0] = 0
    C[0, 1] = C[2, 3] = 1.0
    inst = AgtspInstance.from_matrix(C, [[1], [2]])
    with pytest.raises(InfeasibleError):
        solve_exact(inst)
    with pytest.raises(InfeasibleError):
        solve_heuristic(inst)


def test_instance_validation():
    C = np.zeros((3, 3))
    with pytest.raises(ValueError):
        AgtspInstance.from_matrix(C, [[1]])
    C = np.full((3, 3), INFINITE)
    C[2, 0] = 0
    C[0, 1] = -1.0
    with pytest.raises(ValueError):
        AgtspInstance.from_matrix(C, [[1]])


@pytest.mark.parametrize("seed", range(30))
def test_exact_matches_both_oracles(seed):
    inst = random_instance(random.Random(seed), max_groups=5)
    cost, seq = brute_force(inst)
    tour = solve_exact(inst)
    assert abs(tour.total_cost - cost) <= 1e-9
    assert abs(brute_force_cost(inst) - cost) <= 1e-9
    assert tour.nodes == seq


@pytest.mark.parametrize("seed", range(10))
def test_eight_groups(seed):
    inst = random_instance(random.Random(1000 + seed), min_groups=8, max_groups=8)
    assert inst.m == 8
    exact = solve_exact(inst)
    assert abs(exact.total_cost - brute_force_cost(inst)) <= 1e-9
    heur = solve_heuristic(inst, seed=seed)
    assert heur.total_cost >= exact.total_cost - 1e-9
    assert solve_heuristic(inst, seed=seed) == heur


def test_exact_limit():
    inst = random_instance(random.Random(5), min_groups=6, max_groups=6)
    with pytest.raises(ValueError):
        solve_exact(inst, limit=5)
    assert solve(inst, limit=5, seed=1).total_cost >= solve(inst).total_cost - 1e-9


def test_heuristic_on_larger_instance():
    inst = random_instance(random.Random(9), min_groups=20, max_groups=20, p_infinite=0.1)
    tour = solve_heuristic(inst, seed=4)
    assert math.isfinite(tour.total_cost)
    assert tour_cost(inst, tour) == tour.total_cost


def test_dump_load_round_trip(tmp_path, toy_instance, capsys):
    inst, node = toy_instance
    hand = hand_costs(inst, node)
    stem = tmp_path / "toy_instance"
    dump_instance(hand, stem)
    again = load_instance(stem)
    np.testing.assert_array_equal(again.costs, hand.costs)
    assert again.groups == hand.groups
    assert legal_moves(again) == legal_moves(hand)
    assert oracle_main([str(stem)]) == 0
    assert capsys.readouterr().out.startswith("optimum\t3.0")
