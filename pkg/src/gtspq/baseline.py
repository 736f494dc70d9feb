"""Exact optimum and random-tour baseline for metric denominators.

The exact solver fixes cluster 0 at the front (cyclic symmetry), enumerates
all (K-1)! orderings of the remaining clusters, and for each (ordering, start
node) pair runs a min-cost pass over the cluster sequence. Ties are broken
toward the lexicographically smallest (ordering, tour).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .instance import GtspInstance, Tour, tour_cost


@dataclass(frozen=True)
class ExactResult:
    tour: Tour
    cost: float
    explored_orderings: int


def exact_solve(inst: GtspInstance, max_clusters: int = 9) -> ExactResult:
    """Globally optimal tour by ordering enumeration + per-ordering min pass."""
    k = inst.k
    if k > max_clusters:
        raise ValueError(f"K={k} exceeds the exact-solver cap {max_clusters}")
    w = inst.weights
    best: tuple[float, tuple[int, ...], tuple[int, ...]] | None = None
    explored = 0
    for perm in itertools.permutations(range(1, k)):
        explored += 1
        ordering = (0,) + perm
        seq = [inst.clusters[m] for m in ordering]
        for s in seq[0]:
            cost, tour = _best_tour_for_ordering(w, seq, s)
            cand = (cost, ordering, tour)
            if best is None or cand < best:
                best = cand
    assert best is not None
    cost, _, tour = best
    return ExactResult(tour=Tour(tour), cost=cost, explored_orderings=explored)


def _best_tour_for_ordering(w, seq, s) -> tuple[float, tuple[int, ...]]:
    """Min-cost tour through the cluster sequence starting (and closing) at s.

    g[p][v] = cheapest cost from node v at position p through the rest of the
    sequence back to s; the forward reconstruction picks the smallest node
    achieving the optimum at each position, so the returned tour is the
    lexicographically smallest optimal one for this (ordering, s).
    """
    k = len(seq)
    g: list[dict[int, float]] = [dict() for _ in range(k)]
    for v in seq[k - 1]:
        g[k - 1][v] = float(w[v, s])
    for p in range(k - 2, 0, -1):
        nxt = g[p + 1]
        for u in seq[p]:
            g[p][u] = min(float(w[u, v]) + nxt[v] for v in seq[p + 1])
    total = min(float(w[s, v]) + g[1][v] for v in seq[1])

    tour = [s]
    cur = s
    remaining = total
    for p in range(1, k):
        for v in seq[p]:
            step = float(w[cur, v]) + g[p][v]
            if step == remaining:
                tour.append(v)
                remaining = g[p][v]
                cur = v
                break
        else:  # float asymmetry should be impossible; guard anyway
            raise AssertionError("tour reconstruction failed")
    return total, tuple(tour)


def random_tours(
    inst: GtspInstance, count: int, seed: int
) -> list[tuple[Tour, float]]:
    """Uniform node per cluster, uniform cyclic cluster order; seeded."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    out: list[tuple[Tour, float]] = []
    for _ in range(count):
        perm = rng.permutation(inst.k)
        order = []
        for m in perm:
            cluster = inst.clusters[m]
            order.append(cluster[int(rng.integers(len(cluster)))])
        tour = Tour(tuple(order))
        out.append((tour, tour_cost(inst, tour)))
    return out
