"""Linear SEM instances: random DAGs, weights, sampling and population moments."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .core import Ordering, SupportMask, support_of

NOISE_FAMILIES = ("normal", "t10", "uniform")
_T_DF = 10
BLOCK_SIZE = 1000
PARENT_COUNTS = ("exact", "uniform")


class CycleError(ValueError):
    pass


@dataclass(frozen=True)
class Dag:
    """DAG on ``range(p)`` with edges ``(j, k)`` meaning ``j -> k``.

    ``topo`` is a topological ordering: every edge goes from an earlier to a
    later position.
    """

    p: int
    edges: frozenset
    topo: Ordering = field(compare=False)

    def __post_init__(self):
        pos = self.topo.inverse
        if self.topo.p != self.p:
            raise ValueError("topological ordering has the wrong length")
        for j, k in self.edges:
            if j == k:
                raise ValueError(f"self-loop at {j}")
            if pos[j] >= pos[k]:
                raise CycleError(f"edge {j}->{k} violates the stored topological order")

    @classmethod
    def from_edges(cls, p: int, edges: Iterable[tuple[int, int]]) -> "Dag":
        """Build a DAG, computing the lexicographically smallest topological order."""
        edges = frozenset((int(j), int(k)) for j, k in edges)
        indeg = [0] * p
        children: list[list[int]] = [[] for _ in range(p)]
        for j, k in edges:
            if not (0 <= j < p and 0 <= k < p):
                raise IndexError(f"edge ({j}, {k}) out of range")
            children[j].append(k)
            indeg[k] += 1
        heap = [v for v in range(p) if indeg[v] == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            v = heapq.heappop(heap)
            order.append(v)
            for c in children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(heap, c)
        if len(order) != p:
            raise CycleError("edge set contains a directed cycle")
        return cls(p, edges, Ordering(order))

    @classmethod
    def empty(cls, p: int) -> "Dag":
        return cls(p, frozenset(), Ordering.identity(p))

    def parents(self, k: int) -> list[int]:
        return sorted(j for j, c in self.edges if c == k)

    def parent_sets(self) -> list[list[int]]:
        pa: list[list[int]] = [[] for _ in range(self.p)]
        for j, k in sorted(self.edges):
            pa[k].append(j)
        return pa

    def children(self, j: int) -> list[int]:
        return sorted(k for a, k in self.edges if a == j)

    def skeleton(self) -> SupportMask:
        return SupportMask(self.p, self.edges)

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.p, self.p), dtype=bool)
        for j, k in self.edges:
            A[j, k] = True
        return A

    def max_indegree(self) -> int:
        return max((len(pa) for pa in self.parent_sets()), default=0)


@dataclass(frozen=True)
class WeightedSem:
    """``X = B X + eps`` with ``B[k, j] != 0`` exactly on edges ``j -> k``."""

    dag: Dag
    B: np.ndarray = field(repr=False)
    sigma2: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.B, dtype=float)
        p = self.dag.p
        if B.shape != (p, p) or len(self.sigma2) != p:
            raise ValueError("B / sigma2 shapes do not match the DAG")
        expected = np.zeros((p, p), dtype=bool)
        for j, k in self.dag.edges:
            expected[k, j] = True
        if not np.array_equal(B != 0, expected):
            raise ValueError("nonzero pattern of B must equal the DAG edges")
        if np.any(~(np.asarray(self.sigma2) > 0)) or not np.all(np.isfinite(self.sigma2)):
            raise ValueError("noise variances must be positive and finite")

    @property
    def p(self) -> int:
        return self.dag.p


def generate_bounded_indegree_dag(
    p: int, d: int, seed: int, block_size: int = BLOCK_SIZE, parent_count: str = "uniform"
) -> Dag:
    """Random DAG with in-degree at most ``d``.

    Nodes are placed in a random order; each picks its parents uniformly
    without replacement among the earlier nodes of its block. Blocks are
    consecutive runs of ``block_size`` positions, so no edge crosses a block.
    With ``parent_count="exact"`` a node takes ``min(d, #earlier)`` parents;
    with ``"uniform"`` the count is drawn uniformly from ``0..min(d, #earlier)``.
    """
    if p < 1 or d < 0:
        raise ValueError("need p >= 1 and d >= 0")
    if parent_count not in PARENT_COUNTS:
        raise ValueError(f"parent_count must be one of {PARENT_COUNTS}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(p)
    edges = set()
    for i in range(p):
        start = (i // block_size) * block_size
        m = min(d, i - start)
        if parent_count == "uniform":
            m = int(rng.integers(0, m + 1))
        if m == 0:
            continue
        for j in rng.choice(order[start:i], size=m, replace=False):
            edges.add((int(j), int(order[i])))
    return Dag(p, frozenset(edges), Ordering(order))


def assign_weights(dag: Dag, seed: int, weight_range=(0.6, 0.8), var_range=(0.8, 1.0)) -> WeightedSem:
    """Edge weights uniform on ``±[0.6, 0.8]``, noise variances uniform on ``[0.8, 1.0]``."""
    rng = np.random.default_rng(seed)
    p = dag.p
    B = np.zeros((p, p))
    for j, k in sorted(dag.edges):
        mag = rng.uniform(*weight_range)
        B[k, j] = mag if rng.random() < 0.5 else -mag
    sigma2 = rng.uniform(*var_range, size=p)
    return WeightedSem(dag, B, sigma2)


def random_sem(p: int, d: int, seed: int, parent_count: str = "uniform") -> WeightedSem:
    """DAG and weights from one seed (weights use a derived stream)."""
    ss = np.random.SeedSequence(seed)
    s_dag, s_w = ss.spawn(2)
    dag = generate_bounded_indegree_dag(p, d, int(s_dag.generate_state(1)[0]), parent_count=parent_count)
    return assign_weights(dag, int(s_w.generate_state(1)[0]))


def standardized_noise(rng: np.random.Generator, family: str, size) -> np.ndarray:
    """Mean-zero, unit-variance draws from ``family``."""
    if family == "normal":
        return rng.standard_normal(size)
    if family in ("t10", "student_t_df10"):
        return rng.standard_t(_T_DF, size) / np.sqrt(_T_DF / (_T_DF - 2))
    if family == "uniform":
        return rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size)
    raise ValueError(f"unknown noise family {family!r}; choose from {NOISE_FAMILIES}")


def sample(sem: WeightedSem, n: int, noise: str = "normal", seed: int = 0) -> np.ndarray:
    """Draw ``n`` rows by forward substitution along the stored topological order."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    p = sem.p
    eps = standardized_noise(rng, noise, (n, p)) * np.sqrt(np.asarray(sem.sigma2))[None, :]
    X = np.zeros((n, p))
    parents = sem.dag.parent_sets()
    for k in sem.dag.topo:
        pa = parents[k]
        X[:, k] = eps[:, k]
        if pa:
            X[:, k] += X[:, pa] @ sem.B[k, pa]
    return X


def population_covariance(sem: WeightedSem) -> np.ndarray:
    """``(I - B)^{-1} diag(sigma2) (I - B)^{-T}``."""
    p = sem.p
    T = np.eye(p) - sem.B
    # I - B is unit triangular up to relabelling, so det = 1.
    Tinv = np.linalg.solve(T, np.eye(p))
    S = (Tinv * np.asarray(sem.sigma2)[None, :]) @ Tinv.T
    return (S + S.T) / 2


def population_precision(sem: WeightedSem) -> np.ndarray:
    """``(I - B)^T diag(1/sigma2) (I - B)``, formed without inversion."""
    T = np.eye(sem.p) - sem.B
    Om = T.T @ (T / np.asarray(sem.sigma2)[:, None])
    return (Om + Om.T) / 2


def moralize(dag: Dag) -> SupportMask:
    """Skeleton of the moral graph: DAG edges plus all co-parent pairs."""
    pairs = set(dag.edges)
    for pa in dag.parent_sets():
        for a in range(len(pa)):
            for b in range(a + 1, len(pa)):
                pairs.add((pa[a], pa[b]))
    return SupportMask(dag.p, pairs)


def check_no_cancellation(sem: WeightedSem, tol: float | None = None) -> bool:
    """True iff the precision support equals the moral skeleton."""
    return support_of(population_precision(sem), tol) == moralize(sem.dag)


def cancellation_instance(b20: float = 0.7, b21: float = 0.7, sigma2=(1.0, 1.0, 1.0)) -> WeightedSem:
    """Collider ``0 -> 2 <- 1`` plus ``0 -> 1`` weighted so that ``Omega[1, 0] = 0``.

    Solves ``-B[1,0]/s1 + B[2,0] B[2,1]/s2 = 0`` for ``B[1,0]``.
    """
    s = np.asarray(sigma2, dtype=float)
    B = np.zeros((3, 3))
    B[2, 0], B[2, 1] = b20, b21
    B[1, 0] = s[1] / s[2] * b20 * b21
    return WeightedSem(Dag.from_edges(3, [(0, 2), (1, 2), (0, 1)]), B, s)
