import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from resp_scope.core import Ordering, permute_symmetric, support_of
from resp_scope.sem import (
    CycleError,
    Dag,
    WeightedSem,
    assign_weights,
    cancellation_instance,
    check_no_cancellation,
    generate_bounded_indegree_dag,
    moralize,
    population_covariance,
    population_precision,
    random_sem,
    sample,
    standardized_noise,
)


def chain_sem(b=0.7, p=2):
    dag = Dag.from_edges(p, [(i, i + 1) for i in range(p - 1)])
    B = np.zeros((p, p))
    for i in range(p - 1):
        B[i + 1, i] = b
    return WeightedSem(dag, B, np.ones(p))


def test_dag_validation():
    with pytest.raises(CycleError):
        Dag.from_edges(3, [(0, 1), (1, 2), (2, 0)])
    with pytest.raises(ValueError):
        Dag.from_edges(2, [(0, 0)])
    with pytest.raises(CycleError):
        Dag(2, frozenset({(1, 0)}), Ordering([0, 1]))
    dag = Dag.from_edges(4, [(3, 0), (3, 1), (0, 2)])
    assert dag.topo.perm.tolist() == [3, 0, 1, 2]
    assert dag.parents(2) == [0] and dag.children(3) == [0, 1]
    assert dag.max_indegree() == 1


def test_weighted_sem_validation():
    dag = Dag.from_edges(2, [(0, 1)])
    with pytest.raises(ValueError):
        WeightedSem(dag, np.zeros((2, 2)), np.ones(2))
    B = np.zeros((2, 2))
    B[1, 0] = 0.5
    with pytest.raises(ValueError):
        WeightedSem(dag, B, np.array([1.0, 0.0]))


def test_generator_examples():
    assert generate_bounded_indegree_dag(5, 0, 1).edges == frozenset()
    dag = generate_bounded_indegree_dag(100, 1, 3)
    assert dag.max_indegree() <= 1
    assert moralize(dag) == dag.skeleton()


def test_generator_blocks():
    dag = generate_bounded_indegree_dag(2000, 5, 11)
    pos = dag.topo.inverse
    assert all(pos[j] // 1000 == pos[k] // 1000 for j, k in dag.edges)
    assert dag.max_indegree() <= 5
    small = generate_bounded_indegree_dag(40, 3, 2, block_size=10, parent_count="exact")
    pos = small.topo.inverse
    assert all(pos[j] // 10 == pos[k] // 10 for j, k in small.edges)
    # exact count: min(d, earlier nodes in the block)
    indeg = np.bincount([k for _, k in small.edges], minlength=40)
    assert sorted(indeg[small.topo.perm[:10]].tolist()) == [0, 1, 2, 3, 3, 3, 3, 3, 3, 3]


@given(st.integers(1, 60), st.integers(0, 6), st.integers(0, 2**31), st.sampled_from(["exact", "uniform"]))
def test_generator_properties(p, d, seed, mode):
    dag = generate_bounded_indegree_dag(p, d, seed, parent_count=mode)
    assert dag.max_indegree() <= d
    pos = dag.topo.inverse
    assert all(pos[j] < pos[k] for j, k in dag.edges)
    assert generate_bounded_indegree_dag(p, d, seed, parent_count=mode).edges == dag.edges


def test_generator_rejects_bad_args():
    with pytest.raises(ValueError):
        generate_bounded_indegree_dag(0, 1, 0)
    with pytest.raises(ValueError):
        generate_bounded_indegree_dag(5, 1, 0, parent_count="poisson")


def test_weights_ranges_and_determinism():
    sem = random_sem(80, 3, 5)
    w = np.abs(sem.B[sem.B != 0])
    assert w.size == len(sem.dag.edges)
    assert np.all((w >= 0.6) & (w <= 0.8))
    assert np.all((sem.sigma2 >= 0.8) & (sem.sigma2 <= 1.0))
    again = random_sem(80, 3, 5)
    assert np.array_equal(again.B, sem.B) and np.array_equal(again.sigma2, sem.sigma2)
    empty = assign_weights(Dag.empty(4), 0)
    assert not empty.B.any() and empty.sigma2.shape == (4,)


def test_population_moments_two_node_chain():
    b = 0.65
    sem = chain_sem(b)
    assert np.allclose(population_covariance(sem), [[1, b], [b, 1 + b * b]])
    assert np.allclose(population_precision(sem), [[1 + b * b, -b], [-b, 1]])
    e = WeightedSem(Dag.empty(3), np.zeros((3, 3)), np.array([1.0, 2.0, 4.0]))
    assert np.allclose(population_covariance(e), np.diag([1.0, 2.0, 4.0]))
    assert np.allclose(population_precision(e), np.diag([1.0, 0.5, 0.25]))


def test_precision_decomposition_entrywise():
    sem = random_sem(12, 3, 9)
    Om = population_precision(sem)
    B, s = sem.B, sem.sigma2
    p = sem.p
    for j, k in itertools.combinations(range(p), 2):
        expect = -B[k, j] / s[k] - B[j, k] / s[j] + sum(B[l, j] * B[l, k] / s[l] for l in range(p))
        assert Om[j, k] == pytest.approx(expect, abs=1e-12)


@given(st.integers(1, 25), st.integers(0, 4), st.integers(0, 2**31))
def test_covariance_precision_inverse(p, d, seed):
    sem = random_sem(p, d, seed)
    S, Om = population_covariance(sem), population_precision(sem)
    assert np.abs(S @ Om - np.eye(p)).max() < 1e-10
    assert np.linalg.eigvalsh(S).min() > 0


def test_collider_moral_entry():
    dag = Dag.from_edges(3, [(0, 2), (1, 2)])
    B = np.zeros((3, 3))
    B[2, 0] = B[2, 1] = 1.0
    Om = population_precision(WeightedSem(dag, B, np.ones(3)))
    assert Om[0, 1] == pytest.approx(1.0)
    assert moralize(dag).pairs == frozenset({(0, 1), (0, 2), (1, 2)})
    assert moralize(chain_sem(p=4).dag) == chain_sem(p=4).dag.skeleton()


def test_no_cancellation_generic_and_constructed():
    assert all(check_no_cancellation(random_sem(7, 3, s)) for s in range(50))
    bad = cancellation_instance()
    assert abs(population_precision(bad)[1, 0]) < 1e-15
    assert not check_no_cancellation(bad)
    assert support_of(population_precision(bad)) != moralize(bad.dag)
    assert check_no_cancellation(WeightedSem(Dag.empty(3), np.zeros((3, 3)), np.ones(3)))


@given(st.integers(2, 6), st.integers(1, 2), st.integers(0, 2**31))
def test_moral_support_under_every_ordering(p, d, seed):
    sem = random_sem(p, d, seed)
    Om = population_precision(sem)
    if not check_no_cancellation(sem):
        return
    skel = sem.dag.skeleton()
    for perm in itertools.permutations(range(p)):
        o = Ordering(perm)
        sup = support_of(permute_symmetric(Om, o))
        assert skel.permuted(o).pairs <= sup.pairs


def test_sampling_independent_columns():
    sem = WeightedSem(Dag.empty(4), np.zeros((4, 4)), np.array([0.8, 0.9, 1.0, 0.85]))
    X = sample(sem, 20000, "normal", 3)
    S = np.cov(X, rowvar=False, bias=True)
    assert np.abs(S - np.diag(sem.sigma2)).max() < 5 / np.sqrt(20000)


def test_sampling_matches_population_covariance():
    sem = chain_sem(0.7, p=4)
    n = 100_000
    X = sample(sem, n, "t10", 4)
    S = np.cov(X, rowvar=False, bias=True)
    Sig = population_covariance(sem)
    # Var(x_i x_j) is at most ~3 Sig_ii Sig_jj for these light-tailed cases
    se = np.sqrt(3 * np.outer(np.diag(Sig), np.diag(Sig)) / n)
    assert np.all(np.abs(S - Sig) <= 3 * se)


def test_noise_families_moments():
    sem = WeightedSem(Dag.empty(1), np.zeros((1, 1)), np.array([0.9]))
    for fam, kurt in (("uniform", -1.2), ("normal", 0.0), ("t10", 1.0)):
        x = sample(sem, 200_000, fam, 1)[:, 0]
        assert x.mean() == pytest.approx(0.0, abs=0.01)
        assert x.var() == pytest.approx(0.9, rel=0.02)
        assert stats.kurtosis(x) == pytest.approx(kurt, abs=0.15)
    with pytest.raises(ValueError):
        sample(sem, 10, "cauchy", 0)
    with pytest.raises(ValueError):
        sample(sem, 0, "normal", 0)


def test_sampling_is_structural():
    sem = random_sem(15, 3, 21)
    X = sample(sem, 50, "normal", 2)
    noise = standardized_noise(np.random.default_rng(2), "normal", (50, 15)) * np.sqrt(sem.sigma2)
    assert np.allclose(X - X @ sem.B.T, noise, atol=1e-12)
    assert np.array_equal(sample(sem, 50, "normal", 2), X)
