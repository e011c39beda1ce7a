"""Seeded generators for random AGTSP instances and random AMR graphs."""
import random

import numpy as np

from .agtsp import INFINITE, AgtspInstance
from .amr import AmrGraph, parse_penman

PREDICATES = ["want-01", "go-01", "believe-01", "say-01", "see-01", "make-01", "give-01",
              "keep-01", "try-01", "stop-01", "run-02", "plan-01", "have-rel-role-91"]
NOUNS = ["boy", "girl", "dog", "city", "peace", "book", "teacher", "house", "car", "person"]
ROLES = [":ARG0", ":ARG1", ":ARG2", ":mod", ":location", ":time"]


def random_instance(rng: random.Random, max_groups: int = 8, max_group_size: int = 3,
                    p_infinite: float = 0.3, min_groups: int = 1) -> AgtspInstance:
    """Random matrix instance with a planted finite tour, so it is always feasible."""
    m = rng.randint(min_groups, max_groups)
    sizes = [rng.randint(1, max_group_size) for _ in range(m)]
    n = sum(sizes) + 2
    groups, nxt = [], 1
    for size in sizes:
        groups.append(list(range(nxt, nxt + size)))
        nxt += size
    C = np.empty((n, n))
    for a in range(n):
        for b in range(n):
            C[a, b] = INFINITE if rng.random() < p_infinite else round(rng.uniform(0.1, 10.0), 3)
    order = list(range(m))
    rng.shuffle(order)
    planted = [0] + [rng.choice(groups[g]) for g in order] + [n - 1]
    for a, b in zip(planted, planted[1:]):
        if C[a, b] == INFINITE:
            C[a, b] = round(rng.uniform(0.1, 10.0), 3)
    C[0, n - 1] = INFINITE
    C[n - 1, 0] = 0.0
    np.fill_diagonal(C, INFINITE)
    return AgtspInstance.from_matrix(C, groups)


def random_amr_text(rng: random.Random, n_concepts: int) -> str:
    """Penman text with ``n_concepts`` variable nodes plus some constants and re-entrances."""
    names = []
    counts = {}
    concepts = []
    for i in range(n_concepts):
        concept = rng.choice(PREDICATES if i == 0 or rng.random() < 0.4 else NOUNS)
        letter = concept[0]
        counts[letter] = counts.get(letter, 0) + 1
        names.append(letter if counts[letter] == 1 else f"{letter}{counts[letter]}")
        concepts.append(concept)
    children = {i: [] for i in range(n_concepts)}
    for i in range(1, n_concepts):
        children[rng.randrange(i)].append(i)

    def write(i, done):
        parts = [f"({names[i]} / {concepts[i]}"]
        for c in children[i]:
            parts.append(f" {rng.choice(ROLES)} {write(c, done)}")
        if rng.random() < 0.15:
            parts.append(" :polarity -")
        if rng.random() < 0.1:
            parts.append(f" :quant {rng.randint(2, 99)}")
        if rng.random() < 0.1:
            parts.append(' :wiki "Foo"')
        done.add(i)
        if len(done) > 1 and rng.random() < 0.25:
            # re-entrant reference to an already written node
            parts.append(f" {rng.choice(ROLES)}-of {names[rng.choice(sorted(done - {i}))]}")
        return "".join(parts) + ")"

    return write(0, set())


def random_amr(rng: random.Random, n_concepts: int) -> AmrGraph:
    return parse_penman(random_amr_text(rng, n_concepts))
