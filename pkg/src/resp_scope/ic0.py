"""Stage 1: masked zero-fill incomplete Cholesky, admissibility and induced edges."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import LowerFactor, Ordering, SupportMask, offmask_product_inf

PIVOT_FLOOR = 1e-12


@dataclass(frozen=True)
class Ic0Outcome:
    """Either a factor or the row at which the pivot broke down."""

    factor: LowerFactor | None
    breakdown_row: int | None = None
    ops: int = 0

    @property
    def ok(self) -> bool:
        return self.factor is not None


def masked_ic0(A, M: SupportMask, pivot_floor: float = PIVOT_FLOOR) -> Ic0Outcome:
    """IC(0) of the (already permuted) matrix ``A`` on the pattern ``M``.

    Row ``k`` only touches ``S_k = {j < k : M[k, j]}``::

        L[k, j] = (A[k, j] - sum_{l in S_k & S_j} L[k, l] L[j, l]) / L[j, j]
        L[k, k] = sqrt(A[k, k] - sum_{l in S_k} L[k, l]**2)

    Intersections are sorted-list merges. ``ops`` counts multiply-adds plus
    merge comparisons. Breakdown (``L[k, k]**2 <= pivot_floor * max(A[k, k], 1)``)
    is returned, not raised.
    """
    A = np.asarray(A, dtype=float)
    p = M.p
    if A.shape != (p, p):
        raise ValueError("matrix and mask dimensions differ")
    cols: list[list[int]] = []
    vals: list[list[float]] = []
    diag = np.empty(p)
    ops = 0
    for k in range(p):
        Sk = [j for j in M.neighbors(k) if j < k]
        Lk: list[float] = []
        Ak = A[k]
        for idx, j in enumerate(Sk):
            Sj, Lj = cols[j], vals[j]
            acc = 0.0
            a = b = 0
            # merge over S_k[:idx] (entries of row k already computed) and S_j
            while a < idx and b < len(Sj):
                x, y = Sk[a], Sj[b]
                ops += 1
                if x == y:
                    acc += Lk[a] * Lj[b]
                    a += 1
                    b += 1
                elif x < y:
                    a += 1
                else:
                    b += 1
            Lk.append((Ak[j] - acc) / diag[j])
        sq = Ak[k] - math.fsum(v * v for v in Lk)
        ops += len(Sk) + 1
        if not sq > pivot_floor * max(Ak[k], 1.0):
            return Ic0Outcome(None, k, ops)
        diag[k] = math.sqrt(sq)
        cols.append(Sk)
        vals.append(Lk)
    factor = LowerFactor(
        p,
        tuple(np.array(c, dtype=np.intp) for c in cols),
        tuple(np.array(v, dtype=float) for v in vals),
        diag,
    )
    return Ic0Outcome(factor, None, ops)


def check_admissible(L: LowerFactor, M: SupportMask, tol: float = 1e-10) -> bool:
    """True iff ``(L L^T)`` vanishes (within ``tol``) off the mask."""
    return offmask_product_inf(L, M) <= tol


def induced_edges(order: Ordering, L: LowerFactor, tol: float = 0.0) -> frozenset:
    """Directed edges read off the factor.

    A nonzero ``L[k, j]`` (``k > j``) is the edge ``order[k] -> order[j]``: the
    later-eliminated variable is the parent. Under a reverse topological
    ordering this reproduces the generating DAG.
    """
    perm = order.perm
    return frozenset((int(perm[k]), int(perm[j])) for k, j, v in L.entries() if abs(v) > tol)


def candidate_parents(L: LowerFactor, tol: float = 0.0) -> list[list[int]]:
    """Positions ``k > j`` with ``L[k, j] != 0``, for each position ``j``."""
    return L.column_supports(tol)
