"""Elimination orderings on the screening graph and the undirected fill set."""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass

import numpy as np

from .core import Ordering, SupportMask
from .sem import Dag


@dataclass(frozen=True)
class EliminationResult:
    ordering: Ordering
    fill_pairs: frozenset

    @property
    def n_fill(self) -> int:
        return len(self.fill_pairs)


def elimination_fill(mask: SupportMask, order: Ordering) -> EliminationResult:
    """Symbolic elimination of the mask graph in ``order``.

    Eliminating a vertex turns its remaining neighbourhood into a clique; every
    pair added that way is a fill pair (reported in variable labels).
    """
    if order.p != mask.p:
        raise ValueError("mask and ordering dimensions differ")
    adj = [set(mask.neighbors(v)) for v in range(mask.p)]
    fill = set()
    for v in order:
        nbrs = sorted(adj[v])
        for a, b in itertools.combinations(nbrs, 2):
            if b not in adj[a]:
                adj[a].add(b)
                adj[b].add(a)
                fill.add((a, b))
        for u in nbrs:
            adj[u].discard(v)
        adj[v].clear()
    return EliminationResult(order, frozenset(fill))


def _greedy_elimination(mask: SupportMask, cost) -> Ordering:
    adj = [set(mask.neighbors(v)) for v in range(mask.p)]
    alive = set(range(mask.p))
    heap = [(cost(adj, v), v) for v in range(mask.p)]
    heapq.heapify(heap)
    order = []
    while heap:
        c, v = heapq.heappop(heap)
        if v not in alive or c != cost(adj, v):
            continue
        order.append(v)
        alive.discard(v)
        nbrs = adj[v]
        for a, b in itertools.combinations(sorted(nbrs), 2):
            adj[a].add(b)
            adj[b].add(a)
        for u in nbrs:
            adj[u].discard(v)
        # only vertices within distance 2 can change cost; neighbours' degree always does
        touched = set(nbrs)
        if cost is _fill_cost:
            for u in nbrs:
                touched.update(adj[u])
        adj[v] = set()
        for u in touched:
            if u in alive:
                heapq.heappush(heap, (cost(adj, u), u))
    return Ordering(order)


def _degree_cost(adj, v) -> int:
    return len(adj[v])


def _fill_cost(adj, v) -> int:
    nbrs = sorted(adj[v])
    return sum(1 for a, b in itertools.combinations(nbrs, 2) if b not in adj[a])


def min_degree_ordering(mask: SupportMask) -> Ordering:
    """Greedy minimum degree on the elimination graph, ties to the lowest index.

    Degrees are exact external degrees of the current elimination graph (no
    approximate-degree shortcuts, no mass elimination).
    """
    return _greedy_elimination(mask, _degree_cost)


def min_fill_ordering(mask: SupportMask) -> Ordering:
    """Greedy minimum fill, ties to the lowest index."""
    return _greedy_elimination(mask, _fill_cost)


def reverse_topological(dag: Dag) -> Ordering:
    """Reverse of the DAG's stored topological order: children before parents."""
    return dag.topo.reversed()


def max_screened_degree(mask: SupportMask) -> int:
    return int(mask.degrees().max(initial=0))


def brute_force_min_fill(mask: SupportMask) -> int:
    """Minimum fill over all orderings (small p only)."""
    return min(elimination_fill(mask, Ordering(perm)).n_fill for perm in itertools.permutations(range(mask.p)))


def is_chordal(mask: SupportMask) -> bool:
    """Maximum cardinality search followed by a perfect-elimination check."""
    p = mask.p
    weight = np.zeros(p, dtype=int)
    numbered = np.zeros(p, dtype=bool)
    visit = []
    for _ in range(p):
        cand = np.where(~numbered, weight, -1)
        v = int(np.argmax(cand))
        numbered[v] = True
        visit.append(v)
        for u in mask.neighbors(v):
            if not numbered[u]:
                weight[u] += 1
    return elimination_fill(mask, Ordering(visit[::-1])).n_fill == 0
