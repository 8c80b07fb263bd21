"""CPDAG conversion and structure-recovery metrics."""

from __future__ import annotations

import time
from dataclasses import dataclass

from .sem import Dag

CPDAG_TIME_BUDGET = 60.0


@dataclass(frozen=True)
class Cpdag:
    """Partially directed graph: ``directed`` holds ``(a, b)`` for ``a -> b``,
    ``undirected`` holds pairs ``(a, b)`` with ``a < b``."""

    p: int
    directed: frozenset
    undirected: frozenset
    proxy: bool = False

    def __post_init__(self):
        for a, b in self.directed:
            if (b, a) in self.directed:
                raise ValueError(f"pair ({a}, {b}) directed both ways")
            if (min(a, b), max(a, b)) in self.undirected:
                raise ValueError(f"pair ({a}, {b}) both directed and undirected")

    def skeleton(self) -> frozenset:
        return frozenset((min(a, b), max(a, b)) for a, b in self.directed) | self.undirected

    def n_edges(self) -> int:
        return len(self.directed) + len(self.undirected)

    def mark(self, a: int, b: int) -> str:
        """State of pair ``a < b``: ``'-'``, ``'>'`` (a->b), ``'<'`` (b->a) or ``''``."""
        if (a, b) in self.undirected:
            return "-"
        if (a, b) in self.directed:
            return ">"
        if (b, a) in self.directed:
            return "<"
        return ""


def skeleton_pairs(edges) -> frozenset:
    return frozenset((min(a, b), max(a, b)) for a, b in edges)


def v_structures(p: int, edges) -> frozenset:
    """Triples ``(a, c, b)`` with ``a -> c <- b``, ``a < b`` and ``a, b`` non-adjacent."""
    parents: list[list[int]] = [[] for _ in range(p)]
    for a, c in edges:
        parents[c].append(a)
    skel = skeleton_pairs(edges)
    out = set()
    for c in range(p):
        pa = sorted(parents[c])
        for i in range(len(pa)):
            for j in range(i + 1, len(pa)):
                if (pa[i], pa[j]) not in skel:
                    out.add((pa[i], c, pa[j]))
    return frozenset(out)


def same_mec(p: int, edges_a, edges_b) -> bool:
    """Same skeleton and same v-structures."""
    return skeleton_pairs(edges_a) == skeleton_pairs(edges_b) and v_structures(p, edges_a) == v_structures(p, edges_b)


def _meek_closure(p, directed, undirected, skel, deadline):
    """Apply Meek rules R1-R4 in place until nothing changes."""
    adj = [set() for _ in range(p)]
    for a, b in skel:
        adj[a].add(b)
        adj[b].add(a)
    pa = [set() for _ in range(p)]
    ch = [set() for _ in range(p)]
    und = [set() for _ in range(p)]
    for a, b in directed:
        pa[b].add(a)
        ch[a].add(b)
    for a, b in undirected:
        und[a].add(b)
        und[b].add(a)

    def forced(x, y):
        # R1: z -> x - y with z, y non-adjacent
        if any(z != y and z not in adj[y] for z in pa[x]):
            return True
        # R2: x -> z -> y
        if ch[x] & pa[y]:
            return True
        # R3: x - z1 -> y, x - z2 -> y with z1, z2 non-adjacent
        zs = sorted(und[x] & pa[y])
        if any(zs[j] not in adj[zs[i]] for i in range(len(zs)) for j in range(i + 1, len(zs))):
            return True
        # R4: x adj z, z -> w -> y, x adj w, z and y non-adjacent
        for z in adj[x]:
            if z != y and z not in adj[y] and ch[z] & pa[y] & adj[x]:
                return True
        return False

    changed = True
    while changed:
        changed = False
        for a, b in sorted(undirected):
            if deadline is not None and time.monotonic() > deadline:
                return False
            for x, y in ((a, b), (b, a)):
                if forced(x, y):
                    undirected.discard((a, b))
                    directed.add((x, y))
                    und[x].discard(y)
                    und[y].discard(x)
                    pa[y].add(x)
                    ch[x].add(y)
                    changed = True
                    break
    return True


def cpdag_of(dag: Dag, time_budget: float = CPDAG_TIME_BUDGET) -> Cpdag:
    """CPDAG of ``dag``: v-structure edges plus Meek-rule closure.

    If ``time_budget`` seconds pass first, the all-undirected skeleton is
    returned with ``proxy=True``.
    """
    deadline = time.monotonic() + time_budget if time_budget is not None else None
    p = dag.p
    skel = skeleton_pairs(dag.edges)
    directed = set()
    for a, c, b in v_structures(p, dag.edges):
        directed.add((a, c))
        directed.add((b, c))
    undirected = {e for e in skel if (e[0], e[1]) not in directed and (e[1], e[0]) not in directed}

    if not _meek_closure(p, directed, undirected, skel, deadline):
        return Cpdag(p, frozenset(), frozenset(skel), proxy=True)
    return Cpdag(p, frozenset(directed), frozenset(undirected))


def skeleton_f1(est: Cpdag, truth: Cpdag) -> float:
    if est.p != truth.p:
        raise ValueError("graphs have different numbers of nodes")
    E, T = est.skeleton(), truth.skeleton()
    if not E and not T:
        return 1.0
    tp = len(E & T)
    if tp == 0:
        return 0.0
    prec, rec = tp / len(E), tp / len(T)
    return 2 * prec * rec / (prec + rec)


def shd_cpdag(est: Cpdag, truth: Cpdag) -> int:
    """One unit per pair whose edge state (absent / undirected / direction) differs."""
    if est.p != truth.p:
        raise ValueError("graphs have different numbers of nodes")
    pairs = est.skeleton() | truth.skeleton()
    return sum(1 for a, b in pairs if est.mark(a, b) != truth.mark(a, b))


def nshd(est: Cpdag, truth: Cpdag) -> float:
    m = truth.n_edges()
    if m == 0:
        raise ValueError("nSHD is undefined for an edgeless true graph")
    return shd_cpdag(est, truth) / m
