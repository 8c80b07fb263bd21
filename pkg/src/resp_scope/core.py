"""Symmetric-matrix, support-mask, ordering and triangular-factor primitives.

Indices are 0-based everywhere inside the package; the text file formats in
:mod:`resp_scope.io` are 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np
import scipy.sparse as sp

#: Default relative tolerance for deciding that a floating point entry is a
#: structural zero. Multiplied by the largest absolute entry of the matrix.
REL_ZERO_TOL = 1e-8


class DimensionError(ValueError):
    pass


def as_symmetric(A, check: bool = True) -> np.ndarray:
    """Return ``A`` as a float array after validating shape, symmetry and finiteness."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise DimensionError(f"expected a non-empty square matrix, got shape {A.shape}")
    if check:
        if not np.all(np.isfinite(A)):
            raise ValueError("matrix has non-finite entries")
        scale = max(1.0, float(np.max(np.abs(A))))
        if not np.allclose(A, A.T, rtol=0.0, atol=1e-12 * scale):
            raise ValueError("matrix is not symmetric")
    return A


def zero_tol(A, rel: float = REL_ZERO_TOL) -> float:
    """Absolute tolerance ``rel * max|A|`` used when inferring supports."""
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    return rel * float(np.max(np.abs(A)))


class Ordering:
    """A permutation of ``range(p)``.

    ``perm[i]`` is the variable placed at position ``i`` and ``inverse[v]`` is
    the position of variable ``v``.
    """

    __slots__ = ("perm", "inverse")

    def __init__(self, perm: Iterable[int]):
        perm = np.array(list(perm), dtype=np.intp)
        p = perm.size
        if p < 1 or not np.array_equal(np.sort(perm), np.arange(p)):
            raise ValueError(f"not a permutation of 0..{p - 1}: {perm.tolist()}")
        inverse = np.empty(p, dtype=np.intp)
        inverse[perm] = np.arange(p)
        perm.setflags(write=False)
        inverse.setflags(write=False)
        self.perm = perm
        self.inverse = inverse

    @classmethod
    def identity(cls, p: int) -> "Ordering":
        return cls(range(p))

    @property
    def p(self) -> int:
        return int(self.perm.size)

    def inv(self) -> "Ordering":
        return Ordering(self.inverse)

    def reversed(self) -> "Ordering":
        return Ordering(self.perm[::-1])

    def __len__(self) -> int:
        return self.p

    def __iter__(self) -> Iterator[int]:
        return iter(self.perm.tolist())

    def __getitem__(self, i):
        return self.perm[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, Ordering) and np.array_equal(self.perm, other.perm)

    def __hash__(self) -> int:
        return hash(self.perm.tobytes())

    def __repr__(self) -> str:
        return f"Ordering({self.perm.tolist()})"


def permute_symmetric(A, order: Ordering) -> np.ndarray:
    """Return ``P A P^T`` i.e. ``result[i, j] = A[order[i], order[j]]``."""
    A = np.asarray(A, dtype=float)
    if A.shape != (order.p, order.p):
        raise DimensionError(f"matrix shape {A.shape} does not match ordering of length {order.p}")
    return A[np.ix_(order.perm, order.perm)]


class SupportMask:
    """Symmetric off-diagonal sparsity pattern; the diagonal is always implied.

    Stored as a frozenset of pairs ``(i, j)`` with ``i < j`` plus sorted
    adjacency tuples.
    """

    __slots__ = ("p", "pairs", "_adj")

    def __init__(self, p: int, pairs: Iterable[tuple[int, int]] = ()):
        if p < 1:
            raise ValueError("p must be positive")
        canon = set()
        for i, j in pairs:
            i, j = int(i), int(j)
            if i == j:
                continue
            if not (0 <= i < p and 0 <= j < p):
                raise IndexError(f"pair ({i}, {j}) out of range for p={p}")
            canon.add((i, j) if i < j else (j, i))
        self.p = int(p)
        self.pairs = frozenset(canon)
        adj = [[] for _ in range(p)]
        for i, j in self.pairs:
            adj[i].append(j)
            adj[j].append(i)
        self._adj = tuple(tuple(sorted(a)) for a in adj)

    @classmethod
    def from_dense(cls, D) -> "SupportMask":
        D = np.asarray(D, dtype=bool)
        I, J = np.nonzero(np.triu(D | D.T, k=1))
        return cls(D.shape[0], zip(I.tolist(), J.tolist()))

    @classmethod
    def full(cls, p: int) -> "SupportMask":
        return cls(p, ((i, j) for i in range(p) for j in range(i + 1, p)))

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self._adj[i]

    def degree(self, i: int) -> int:
        return len(self._adj[i])

    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self._adj], dtype=int)

    def has(self, i: int, j: int) -> bool:
        if i == j:
            return True
        return ((i, j) if i < j else (j, i)) in self.pairs

    def to_dense(self) -> np.ndarray:
        D = np.eye(self.p, dtype=bool)
        if self.pairs:
            I, J = np.array(sorted(self.pairs)).T
            D[I, J] = True
            D[J, I] = True
        return D

    def permuted(self, order: Ordering) -> "SupportMask":
        """Mask indexed by positions: ``M_pi[i, j] = M[order[i], order[j]]``."""
        if order.p != self.p:
            raise DimensionError("mask and ordering dimensions differ")
        pos = order.inverse
        return SupportMask(self.p, ((pos[i], pos[j]) for i, j in self.pairs))

    def relabeled(self, order: Ordering) -> "SupportMask":
        """Inverse of :meth:`permuted`: map position pairs back to variables."""
        return self.permuted(order.inv())

    def __len__(self) -> int:
        return len(self.pairs)

    def __eq__(self, other) -> bool:
        return isinstance(other, SupportMask) and self.p == other.p and self.pairs == other.pairs

    def __hash__(self) -> int:
        return hash((self.p, self.pairs))

    def __repr__(self) -> str:
        return f"SupportMask(p={self.p}, pairs={sorted(self.pairs)})"


def support_of(A, tol: float | None = None) -> SupportMask:
    """Off-diagonal support ``{(i, j): |A[i, j]| > tol}``.

    With ``tol=None`` the relative default ``REL_ZERO_TOL * max|A|`` is used.
    """
    A = np.asarray(A, dtype=float)
    if tol is None:
        tol = zero_tol(A)
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    big = np.abs(A) > tol
    return SupportMask.from_dense(big & big.T)


@dataclass(frozen=True)
class LowerFactor:
    """Sparse lower-triangular factor with a positive diagonal.

    ``cols[k]`` holds the sorted column indices ``j < k`` stored in row ``k``
    and ``vals[k]`` the matching values.
    """

    p: int
    cols: tuple
    vals: tuple
    diag: np.ndarray = field(repr=False)

    def __post_init__(self):
        if len(self.cols) != self.p or len(self.vals) != self.p or len(self.diag) != self.p:
            raise DimensionError("row storage does not match p")
        for k, c in enumerate(self.cols):
            if len(c) and (c[-1] >= k or np.any(np.diff(c) <= 0)):
                raise ValueError(f"row {k} columns must be sorted and strictly below the diagonal")
        if np.any(~(np.asarray(self.diag) > 0)):
            raise ValueError("diagonal must be strictly positive")

    @classmethod
    def from_rows(cls, rows: Sequence[dict], diag) -> "LowerFactor":
        cols, vals = [], []
        for r in rows:
            keys = sorted(r)
            cols.append(np.array(keys, dtype=np.intp))
            vals.append(np.array([r[j] for j in keys], dtype=float))
        return cls(len(rows), tuple(cols), tuple(vals), np.asarray(diag, dtype=float))

    @classmethod
    def from_dense(cls, L, tol: float = 0.0) -> "LowerFactor":
        L = np.asarray(L, dtype=float)
        p = L.shape[0]
        rows = []
        for k in range(p):
            js = np.nonzero(np.abs(L[k, :k]) > tol)[0]
            rows.append({int(j): float(L[k, j]) for j in js})
        return cls.from_rows(rows, np.diag(L).copy())

    @classmethod
    def identity(cls, p: int) -> "LowerFactor":
        return cls.from_rows([{} for _ in range(p)], np.ones(p))

    def entries(self) -> Iterator[tuple[int, int, float]]:
        """Iterate over stored off-diagonal ``(k, j, value)`` triplets."""
        for k in range(self.p):
            for j, v in zip(self.cols[k].tolist(), self.vals[k].tolist()):
                yield k, j, v

    def n_offdiag(self, tol: float = 0.0) -> int:
        return int(sum(np.count_nonzero(np.abs(v) > tol) for v in self.vals))

    def nnz(self, tol: float = 0.0) -> int:
        return self.p + self.n_offdiag(tol)

    def to_dense(self) -> np.ndarray:
        L = np.diag(np.asarray(self.diag, dtype=float))
        for k in range(self.p):
            L[k, self.cols[k]] = self.vals[k]
        return L

    def to_csr(self) -> sp.csr_matrix:
        indptr = [0]
        indices, data = [], []
        for k in range(self.p):
            indices.extend(self.cols[k].tolist())
            indices.append(k)
            data.extend(self.vals[k].tolist())
            data.append(float(self.diag[k]))
            indptr.append(len(indices))
        return sp.csr_matrix((data, indices, indptr), shape=(self.p, self.p))

    def gram(self) -> sp.csr_matrix:
        """Sparse ``L L^T``."""
        L = self.to_csr()
        return (L @ L.T).tocsr()

    def masked(self, keep) -> "LowerFactor":
        """Copy keeping only off-diagonal entries where ``keep(k, j, value)`` holds."""
        rows = []
        for k in range(self.p):
            rows.append({j: v for j, v in zip(self.cols[k].tolist(), self.vals[k].tolist()) if keep(k, j, v)})
        return LowerFactor.from_rows(rows, self.diag)

    def column_supports(self, tol: float = 0.0) -> list[list[int]]:
        """``out[j]`` lists rows ``k > j`` with ``|L[k, j]| > tol``, ascending."""
        out: list[list[int]] = [[] for _ in range(self.p)]
        for k, j, v in self.entries():
            if abs(v) > tol:
                out[j].append(k)
        return out


def masked_residual_inf(A, L: LowerFactor, M: SupportMask) -> float:
    """Largest ``|A - L L^T|`` over the diagonal and the masked pairs."""
    A = np.asarray(A, dtype=float)
    if A.shape != (L.p, L.p) or M.p != L.p:
        raise DimensionError("dimensions of A, L and M must agree")
    G = L.gram()
    worst = float(np.max(np.abs(np.diag(A) - G.diagonal())))
    if M.pairs:
        I, J = np.array(sorted(M.pairs)).T
        vals = np.asarray(G[I, J]).ravel()
        worst = max(worst, float(np.max(np.abs(A[I, J] - vals))))
    return worst


def offmask_product_inf(L: LowerFactor, M: SupportMask) -> float:
    """Largest ``|(L L^T)[i, j]|`` over off-diagonal pairs outside ``M``."""
    G = L.gram().tocoo()
    worst = 0.0
    for i, j, v in zip(G.row.tolist(), G.col.tolist(), G.data.tolist()):
        if i > j and not M.has(i, j):
            worst = max(worst, abs(v))
    return worst
