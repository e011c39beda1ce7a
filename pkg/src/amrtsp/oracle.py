"""Brute-force reference solvers for small AGTSP instances.

Deliberately shares no code with the dynamic program in :mod:`amrtsp.agtsp`
beyond reading ``instance.costs`` and ``instance.groups``.

Run ``python -m amrtsp.oracle STEM`` on a dump written by
:func:`amrtsp.agtsp.dump_instance` to print the optimal cost.
"""
import itertools
import math
import sys

import numpy as np


def enumerate_tours(instance):
    """Yield (cost, node sequence) for every group order and node selection."""
    C = instance.costs
    start, end = 0, len(instance.nodes) - 1
    groups = instance.groups[1:-1]
    for order in itertools.permutations(range(len(groups))):
        for pick in itertools.product(*(groups[g] for g in order)):
            seq = (start,) + pick + (end,)
            cost = sum(C[a, b] for a, b in zip(seq, seq[1:])) + C[end, start]
            yield float(cost), seq


def brute_force(instance):
    """Minimum over full enumeration; returns (cost, lexicographically first optimal tour)."""
    best_cost, best_seq = math.inf, None
    for cost, seq in enumerate_tours(instance):
        if cost < best_cost or (cost == best_cost and best_seq is not None and seq < best_seq):
            best_cost, best_seq = cost, seq
    return best_cost, best_seq


def brute_force_cost(instance):
    """Minimum tour cost by enumerating every group permutation.

    For each permutation the cheapest node selection is a min-plus product
    over the layers, which is exact; all permutations are processed at once
    with numpy so that 8-group instances take milliseconds.
    """
    C = instance.costs
    n = len(instance.nodes)
    start, end = 0, n - 1
    groups = instance.groups[1:-1]
    m = len(groups)
    width = max(len(g) for g in groups)
    pad = n  # index of an all-infinite row/column
    P = np.full((n + 1, n + 1), math.inf)
    P[:n, :n] = C
    members = np.full((m, width), pad)
    for i, g in enumerate(groups):
        members[i, :len(g)] = g
    perms = np.array(list(itertools.permutations(range(m))), dtype=int)
    layer = members[perms[:, 0]]                      # (F, width)
    value = P[start, layer]
    for t in range(1, m):
        nxt = members[perms[:, t]]
        step = P[layer[:, :, None], nxt[:, None, :]]  # (F, width, width)
        value = (value[:, :, None] + step).min(axis=1)
        layer = nxt
    value = value + P[layer, end]
    return float(value.min()) + float(C[end, start])


def main(argv=None):
    from .agtsp import load_instance

    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("usage: python -m amrtsp.oracle STEM", file=sys.stderr)
        return 1
    instance = load_instance(argv[0])
    if instance.m <= 6:
        cost, seq = brute_force(instance)
        print(f"optimum\t{cost!r}\t{' '.join(map(str, seq or ()))}")
    else:
        print(f"optimum\t{brute_force_cost(instance)!r}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
