import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_spd
from resp_scope.core import LowerFactor, Ordering, SupportMask, masked_residual_inf, permute_symmetric, support_of
from resp_scope.ic0 import candidate_parents, check_admissible, induced_edges, masked_ic0
from resp_scope.ordering import reverse_topological
from resp_scope.sem import Dag, assign_weights, moralize, population_precision, random_sem


def dense_ic0(A, M):
    """Textbook dense IC(0): right-looking Cholesky with updates dropped off the pattern."""
    p = A.shape[0]
    pat = M.to_dense() | np.eye(p, dtype=bool)
    W = np.where(pat, A, 0.0).astype(float)
    L = np.zeros_like(W)
    for j in range(p):
        L[j, j] = np.sqrt(W[j, j])
        L[j + 1 :, j] = W[j + 1 :, j] / L[j, j]
        W[j + 1 :, j + 1 :] -= np.where(pat[j + 1 :, j + 1 :], np.outer(L[j + 1 :, j], L[j + 1 :, j]), 0.0)
    return L


def test_identity_and_full_mask(rng):
    for mask in (SupportMask(5), SupportMask.full(5), SupportMask(5, [(0, 3), (1, 2)])):
        out = masked_ic0(np.eye(5), mask)
        np.testing.assert_array_equal(out.factor.to_dense(), np.eye(5))
    A = random_spd(7, rng)
    out = masked_ic0(A, SupportMask.full(7))
    np.testing.assert_allclose(out.factor.to_dense(), np.linalg.cholesky(A), atol=1e-12)
    assert check_admissible(out.factor, SupportMask.full(7))


@given(st.integers(1, 9), st.floats(0, 1), st.integers(0, 2**31))
def test_matches_dense_reference(p, dens, seed):
    rng = np.random.default_rng(seed)
    A = random_spd(p, rng, cond=5)
    mask = SupportMask(p, [e for e in itertools.combinations(range(p), 2) if rng.random() < dens])
    out = masked_ic0(A, mask)
    ref = dense_ic0(A, mask)
    if not out.ok:
        return
    L = out.factor.to_dense()
    np.testing.assert_allclose(L, ref, atol=1e-10)
    # zero pattern off the mask, and the masked entries of L L^T reproduce A
    assert not np.any(np.tril(L, -1)[~mask.to_dense()])
    assert masked_residual_inf(A, out.factor, mask) < 1e-10
    assert out.factor.nnz() <= p + len(mask)


def test_breakdown_reported():
    # A is SPD, but with pair (0,1) masked out row 2 sees 1 - 0.81 - 0.81 < 0
    A = np.array([[1.0, 0.9, 0.9], [0.9, 1.0, 0.9], [0.9, 0.9, 1.0]])
    assert np.linalg.eigvalsh(A).min() > 0
    out = masked_ic0(A, SupportMask(3, [(0, 2), (1, 2)]))
    assert not out.ok and out.breakdown_row == 2 and out.factor is None
    out = masked_ic0(-np.eye(2), SupportMask(2))
    assert out.breakdown_row == 0
    with pytest.raises(ValueError):
        masked_ic0(np.eye(3), SupportMask(2))


def test_op_count_chain_and_star():
    p = 50
    chain = SupportMask(p, [(i, i + 1) for i in range(p - 1)])
    out = masked_ic0(np.eye(p) * 3 + np.diag(np.ones(p - 1), 1) + np.diag(np.ones(p - 1), -1), chain)
    # one diagonal term per row plus one off-diagonal square per non-root row; no merges
    assert out.ops == p + (p - 1)
    full = masked_ic0(random_spd(10, np.random.default_rng(0)), SupportMask.full(10))
    assert full.ops <= 10 * 10**2


def test_admissibility():
    L = LowerFactor.identity(4)
    assert check_admissible(L, SupportMask(4))
    # L L^T has entry (2,0) = L[2,1] L[0,1]... build a fill case by hand
    L = LowerFactor.from_dense(np.array([[1.0, 0, 0], [0.5, 1, 0], [0.5, 0, 1]]))
    assert check_admissible(L, SupportMask(3, [(0, 1), (0, 2), (1, 2)]))
    assert not check_admissible(L, SupportMask(3, [(0, 1), (0, 2)]))


def test_exact_factorization_reverse_topological_population():
    for seed in range(40):
        sem = random_sem(6, 2, seed)
        omega = population_precision(sem)
        order = reverse_topological(sem.dag)
        A = permute_symmetric(omega, order)
        M = moralize(sem.dag).permuted(order)
        out = masked_ic0(A, M)
        assert out.ok and check_admissible(out.factor, M)
        assert np.abs(A - out.factor.gram()).max() <= 1e-10
        np.testing.assert_allclose(out.factor.to_dense(), np.linalg.cholesky(A), atol=1e-10)


def test_collider_orderings():
    dag = Dag.from_edges(3, [(0, 2), (1, 2)])
    sem = assign_weights(dag, 3)
    omega = population_precision(sem)
    M = moralize(dag)
    rev = reverse_topological(dag)
    out = masked_ic0(permute_symmetric(omega, rev), M.permuted(rev))
    assert check_admissible(out.factor, M.permuted(rev))
    # full moral mask on 3 nodes: every ordering is exact, hence admissible
    for pm in itertools.permutations(range(3)):
        o = Ordering(pm)
        res = masked_ic0(permute_symmetric(omega, o), M.permuted(o))
        assert res.ok and check_admissible(res.factor, M.permuted(o))


def test_induced_edges_chain():
    assert induced_edges(Ordering.identity(4), LowerFactor.identity(4)) == frozenset()
    dag = Dag.from_edges(3, [(0, 1), (1, 2)])
    omega = population_precision(assign_weights(dag, 0))
    rev = Ordering([2, 1, 0])
    L = LowerFactor.from_dense(np.linalg.cholesky(permute_symmetric(omega, rev)))
    pruned = L.masked(lambda k, j, v: abs(v) > 1e-10)
    assert induced_edges(rev, pruned) == frozenset({(0, 1), (1, 2)})
    assert len(induced_edges(rev, pruned)) == pruned.nnz() - 3
    # candidate parents are positions, the later variable is the parent
    assert candidate_parents(pruned) == [[1], [2], []]


@given(st.integers(2, 6), st.integers(1, 2), st.integers(0, 2**31))
def test_no_spillover_any_ordering(p, d, seed):
    sem = random_sem(p, d, seed)
    omega = population_precision(sem)
    moral = moralize(sem.dag)
    assert support_of(omega) == moral
    rng = np.random.default_rng(seed)
    order = Ordering(rng.permutation(p))
    out = masked_ic0(permute_symmetric(omega, order), moral.permuted(order))
    if out.ok:
        edges = induced_edges(order, out.factor)
        assert {tuple(sorted(e)) for e in edges} <= moral.pairs
