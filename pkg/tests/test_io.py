import numpy as np
import pytest

from resp_scope import io
from resp_scope.core import LowerFactor, Ordering, SupportMask
from resp_scope.graph_eval import cpdag_of
from resp_scope.sem import random_sem, sample


def test_round_trips(tmp_path, rng):
    sem = random_sem(8, 2, 1)
    io.write_sem(tmp_path / "s", sem)
    back = io.read_sem(tmp_path / "s")
    assert back.dag.edges == sem.dag.edges
    np.testing.assert_array_equal(back.B, sem.B)
    np.testing.assert_array_equal(back.sigma2, sem.sigma2)

    io.write_dag(tmp_path / "d", sem.dag)
    assert io.read_dag(tmp_path / "d").edges == sem.dag.edges

    A = rng.standard_normal((4, 4))
    A = A + A.T
    io.write_symmetric(tmp_path / "m", A)
    np.testing.assert_array_equal(io.read_symmetric(tmp_path / "m"), A)

    mask = SupportMask(6, [(0, 5), (2, 3)])
    io.write_mask(tmp_path / "k", mask)
    assert io.read_mask(tmp_path / "k") == mask

    X = sample(sem, 20, "normal", 0)
    io.write_data(tmp_path / "x.csv", X)
    np.testing.assert_array_equal(io.read_data(tmp_path / "x.csv"), X)

    L = LowerFactor.from_dense(np.array([[1.0, 0, 0], [0.25, 2, 0], [0, -0.5, 3]]))
    io.write_factor(tmp_path / "f", L)
    np.testing.assert_array_equal(io.read_factor(tmp_path / "f").to_dense(), L.to_dense())

    g = cpdag_of(sem.dag)
    io.write_cpdag(tmp_path / "c", g)
    assert io.read_cpdag(tmp_path / "c") == g

    orders = [Ordering([2, 0, 1]), Ordering.identity(3)]
    io.write_orderings(tmp_path / "o", orders)
    assert [o.perm.tolist() for o in io.read_orderings(tmp_path / "o")] == [[2, 0, 1], [0, 1, 2]]


def test_bad_files(tmp_path):
    (tmp_path / "d").write_text("1 2\n")
    with pytest.raises(ValueError):
        io.read_dag(tmp_path / "d")
    (tmp_path / "m").write_text("3\n1 2\n")
    with pytest.raises(ValueError):
        io.read_symmetric(tmp_path / "m")
    (tmp_path / "s").write_text("p=2\n1 2 0.5\n")
    with pytest.raises(ValueError):
        io.read_sem(tmp_path / "s")
    (tmp_path / "c").write_text("p=2\n1 2 x\n")
    with pytest.raises(ValueError):
        io.read_cpdag(tmp_path / "c")
    (tmp_path / "x.csv").write_text("x1\nnan\n")
    with pytest.raises(ValueError):
        io.read_data(tmp_path / "x.csv")
