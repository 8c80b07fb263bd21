"""Brute-force oracles over all orderings (small p only)."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import REL_ZERO_TOL, Ordering
from .graph_eval import same_mec, skeleton_pairs, v_structures
from .ordering import reverse_topological
from .sem import CycleError, Dag

MAX_ORACLE_P = 8
MAX_MEC_EDGES = 18


@dataclass
class SpOracleResult:
    min_nnz: int
    minimizers: list  # (Ordering, frozenset of edges)
    nnz: np.ndarray  # per ordering, aligned with ``orderings``
    orderings: list
    edge_sets: list


def _all_perms(p: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(p))), dtype=np.intp)


def exact_cholesky_all(omega, tol: float | None = None):
    """Exact Cholesky of ``omega`` under every ordering.

    Returns ``(perms, nnz, edge_sets)``. An entry counts as nonzero when
    ``|L[k, j]| > tol``; the default tolerance is ``1e-8 * max|L|`` per factor.
    Edge ``perm[k] -> perm[j]`` for every nonzero ``L[k, j]``, ``k > j``.
    """
    omega = np.asarray(omega, dtype=float)
    p = omega.shape[0]
    if p > MAX_ORACLE_P:
        raise ValueError(f"exhaustive oracle limited to p <= {MAX_ORACLE_P}")
    perms = _all_perms(p)
    stack = omega[perms[:, :, None], perms[:, None, :]]
    try:
        Ls = np.linalg.cholesky(stack)
    except np.linalg.LinAlgError as exc:
        raise ValueError("precision matrix is not positive definite") from exc
    if tol is None:
        tols = REL_ZERO_TOL * np.abs(Ls).max(axis=(1, 2))
    else:
        tols = np.full(len(perms), float(tol))
    low = np.tril(np.ones((p, p), dtype=bool), k=-1)
    nz = (np.abs(Ls) > tols[:, None, None]) & low[None]
    nnz = p + nz.sum(axis=(1, 2))
    edge_sets = []
    for perm, z in zip(perms, nz):
        K, J = np.nonzero(z)
        edge_sets.append(frozenset(zip(perm[K].tolist(), perm[J].tolist())))
    return perms, nnz, edge_sets


def exact_sp_oracle(omega, tol: float | None = None) -> SpOracleResult:
    """Sparsest exact Cholesky factor over all ``p!`` orderings."""
    perms, nnz, edge_sets = exact_cholesky_all(omega, tol)
    best = int(nnz.min())
    orders = [Ordering(pm) for pm in perms]
    mins = [(orders[i], edge_sets[i]) for i in np.flatnonzero(nnz == best)]
    return SpOracleResult(best, mins, nnz, orders, edge_sets)


def check_smr(omega, dag: Dag, tol: float | None = None) -> bool:
    """Every ordering whose induced DAG leaves the MEC of ``dag`` is strictly
    denser than a reverse topological ordering of ``dag``."""
    perms, nnz, edge_sets = exact_cholesky_all(omega, tol)
    ref = tuple(reverse_topological(dag).perm.tolist())
    idx = {tuple(pm.tolist()): i for i, pm in enumerate(perms)}
    nnz0 = nnz[idx[ref]]
    skel = skeleton_pairs(dag.edges)
    vs = v_structures(dag.p, dag.edges)
    for n_pi, edges in zip(nnz, edge_sets):
        if n_pi > nnz0:
            continue
        if skeleton_pairs(edges) != skel or v_structures(dag.p, edges) != vs:
            return False
    return True


def mec_of(dag: Dag) -> list:
    """All DAGs with the same skeleton and v-structures, by brute force."""
    pairs = sorted(skeleton_pairs(dag.edges))
    if len(pairs) > MAX_MEC_EDGES:
        raise ValueError(f"brute-force MEC enumeration limited to {MAX_MEC_EDGES} edges")
    out = []
    for bits in itertools.product((0, 1), repeat=len(pairs)):
        edges = [(a, b) if bit == 0 else (b, a) for (a, b), bit in zip(pairs, bits)]
        if not same_mec(dag.p, edges, dag.edges):
            continue
        try:
            out.append(Dag.from_edges(dag.p, edges))
        except CycleError:
            continue
    return out


def n_orderings(p: int) -> int:
    return math.factorial(p)
