"""Exhaustive search for a DAG where fill-optimal orderings lose to the
reverse topological ordering on exact Cholesky sparsity."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import Ordering, permute_symmetric
from .ordering import elimination_fill, min_degree_ordering, min_fill_ordering
from .sem import Dag, WeightedSem, check_no_cancellation, moralize, population_precision


@dataclass
class Witness:
    sem: WeightedSem
    rev: Ordering
    mf: Ordering
    md: Ordering
    nnz: dict
    fill: dict

    @property
    def dag(self) -> Dag:
        return self.sem.dag

    def report(self) -> str:
        edges = " ".join(f"{j}->{k}" for j, k in sorted(self.dag.edges))
        lines = [f"p = {self.dag.p}", f"DAG edges: {edges}"]
        moral = sorted(moralize(self.dag).pairs - {tuple(sorted(e)) for e in self.dag.edges})
        lines.append("moral-only pairs: " + " ".join(f"{a}-{b}" for a, b in moral))
        for name, order in (("rev", self.rev), ("min-fill", self.mf), ("min-degree", self.md)):
            lines.append(f"{name:>10}: order={order.perm.tolist()} |F|={self.fill[name]} nnz(L)={self.nnz[name]}")
        return "\n".join(lines)


def exact_factor_nnz(omega, order: Ordering, rel_tol: float = 1e-8) -> int:
    L = np.linalg.cholesky(permute_symmetric(omega, order))
    return int(np.count_nonzero(np.abs(np.tril(L)) > rel_tol * np.abs(L).max()))


def _weights(dag: Dag, rng) -> WeightedSem:
    B = np.zeros((dag.p, dag.p))
    for j, k in sorted(dag.edges):
        B[k, j] = rng.uniform(0.6, 0.8) * rng.choice((-1.0, 1.0))
    return WeightedSem(dag, B, rng.uniform(0.8, 1.0, dag.p))


def find_fill_sp_mismatch(p: int, seed: int = 0, target: tuple | None = (11, 13, 1)) -> Witness | None:
    """Search DAGs on ``p`` nodes (labels already topologically sorted).

    A witness has zero fill under both the min-fill and min-degree orderings
    of the moral graph, nonzero fill under the reverse topological ordering,
    and yet a strictly sparser exact Cholesky factor under the latter. When
    ``target = (nnz_rev, nnz_fill_opt, fill_rev)`` is given, the first witness
    with those counts is preferred; otherwise the first witness is returned.
    Returns ``None`` when no witness exists.
    """
    if p > 6:
        raise ValueError("exhaustive search is limited to p <= 6")
    rng = np.random.default_rng(seed)
    upper = list(itertools.combinations(range(p), 2))
    rev = Ordering(range(p - 1, -1, -1))
    first = None
    for bits in itertools.product((0, 1), repeat=len(upper)):
        edges = [e for e, b in zip(upper, bits) if b]
        dag = Dag(p, frozenset(edges), Ordering.identity(p))
        mask = moralize(dag)
        mf, md = min_fill_ordering(mask), min_degree_ordering(mask)
        fill = {
            "rev": elimination_fill(mask, rev).n_fill,
            "min-fill": elimination_fill(mask, mf).n_fill,
            "min-degree": elimination_fill(mask, md).n_fill,
        }
        if fill["rev"] == 0 or fill["min-fill"] or fill["min-degree"]:
            continue
        sem = _weights(dag, rng)
        while not check_no_cancellation(sem):
            sem = _weights(dag, rng)
        omega = population_precision(sem)
        nnz = {name: exact_factor_nnz(omega, o) for name, o in (("rev", rev), ("min-fill", mf), ("min-degree", md))}
        if not nnz["rev"] < min(nnz["min-fill"], nnz["min-degree"]):
            continue
        w = Witness(sem, rev, mf, md, nnz, fill)
        if target is None:
            return w
        if (nnz["rev"], nnz["min-fill"], fill["rev"]) == target and nnz["min-degree"] == target[1]:
            return w
        first = first or w
    return first

