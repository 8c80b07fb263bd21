"""Plain-text readers and writers.

Formats (all whitespace separated, ``#`` starts a comment line):

* symmetric matrix: first line ``p``, then the lower triangle row by row
* mask: one ``i j`` pair per line, 1-based, optional header ``p=<int>``
* DAG: header ``p=<int>``, then one ``j k`` edge per line, 1-based
* SEM: DAG format with a weight column ``j k w``, then a line ``variances``
  followed by ``p`` noise variances
* data: CSV with a header row ``x1,...,xp``
* factor: header ``p=<int>``, ``k j value`` lines (1-based), then a line
  ``diag`` followed by ``p`` diagonal values
* CPDAG: header ``p=<int>``, then ``i j d`` (``i -> j``) or ``i j u`` lines
* orderings: one ordering per line, 1-based variable labels
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import LowerFactor, Ordering, SupportMask, as_symmetric
from .graph_eval import Cpdag
from .sem import Dag, WeightedSem


def _lines(path):
    for raw in Path(path).read_text().splitlines():
        s = raw.strip()
        if s and not s.startswith("#"):
            yield s


def _header_p(line: str) -> int | None:
    if line.startswith("p="):
        return int(line[2:])
    return None


def _fmt(x: float) -> str:
    return repr(float(x))


def write_symmetric(path, A) -> None:
    A = as_symmetric(A)
    p = A.shape[0]
    rows = [str(p)] + [" ".join(_fmt(v) for v in A[i, : i + 1]) for i in range(p)]
    Path(path).write_text("\n".join(rows) + "\n")


def read_symmetric(path) -> np.ndarray:
    toks = " ".join(_lines(path)).split()
    if not toks:
        raise ValueError(f"{path}: empty matrix file")
    p = int(toks[0])
    vals = np.array([float(t) for t in toks[1:]])
    if len(vals) != p * (p + 1) // 2:
        raise ValueError(f"{path}: expected {p * (p + 1) // 2} entries, found {len(vals)}")
    A = np.zeros((p, p))
    A[np.tril_indices(p)] = vals
    return A + np.tril(A, -1).T


def write_mask(path, mask: SupportMask) -> None:
    rows = [f"p={mask.p}"] + [f"{i + 1} {j + 1}" for i, j in sorted(mask.pairs)]
    Path(path).write_text("\n".join(rows) + "\n")


def read_mask(path, p: int | None = None) -> SupportMask:
    pairs = []
    for line in _lines(path):
        hp = _header_p(line)
        if hp is not None:
            p = hp
            continue
        i, j = (int(t) - 1 for t in line.split()[:2])
        pairs.append((i, j))
    if p is None:
        p = max((max(e) for e in pairs), default=-1) + 1
    return SupportMask(p, pairs)


def write_dag(path, dag: Dag) -> None:
    rows = [f"p={dag.p}"] + [f"{j + 1} {k + 1}" for j, k in sorted(dag.edges)]
    Path(path).write_text("\n".join(rows) + "\n")


def read_dag(path) -> Dag:
    lines = list(_lines(path))
    if not lines or _header_p(lines[0]) is None:
        raise ValueError(f"{path}: missing 'p=<int>' header")
    p = _header_p(lines[0])
    edges = [tuple(int(t) - 1 for t in ln.split()[:2]) for ln in lines[1:]]
    return Dag.from_edges(p, edges)


def write_sem(path, sem: WeightedSem) -> None:
    dag = sem.dag
    rows = [f"p={dag.p}"]
    rows += [f"{j + 1} {k + 1} {_fmt(sem.B[k, j])}" for j, k in sorted(dag.edges)]
    rows.append("variances")
    rows += [_fmt(v) for v in sem.sigma2]
    Path(path).write_text("\n".join(rows) + "\n")


def read_sem(path) -> WeightedSem:
    lines = list(_lines(path))
    if not lines or _header_p(lines[0]) is None:
        raise ValueError(f"{path}: missing 'p=<int>' header")
    p = _header_p(lines[0])
    try:
        cut = lines.index("variances")
    except ValueError:
        raise ValueError(f"{path}: missing 'variances' section") from None
    B = np.zeros((p, p))
    edges = []
    for ln in lines[1:cut]:
        j, k, w = ln.split()[:3]
        j, k = int(j) - 1, int(k) - 1
        edges.append((j, k))
        B[k, j] = float(w)
    sigma2 = np.array([float(v) for v in lines[cut + 1 :]])
    if len(sigma2) != p:
        raise ValueError(f"{path}: expected {p} variances, found {len(sigma2)}")
    return WeightedSem(Dag.from_edges(p, edges), B, sigma2)


def write_data(path, X) -> None:
    X = np.asarray(X, dtype=float)
    header = ",".join(f"x{i + 1}" for i in range(X.shape[1]))
    np.savetxt(path, X, delimiter=",", header=header, comments="", fmt="%.17g")


def read_data(path) -> np.ndarray:
    with open(path) as fh:
        first = fh.readline()
    skip = 1 if any(c.isalpha() for c in first.replace("e", "").replace("E", "")) else 0
    X = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{path}: non-finite values in data")
    return X


def write_factor(path, L: LowerFactor) -> None:
    rows = [f"p={L.p}"] + [f"{k + 1} {j + 1} {_fmt(v)}" for k, j, v in L.entries()]
    rows.append("diag")
    rows += [_fmt(v) for v in L.diag]
    Path(path).write_text("\n".join(rows) + "\n")


def read_factor(path) -> LowerFactor:
    lines = list(_lines(path))
    p = _header_p(lines[0]) if lines else None
    if p is None:
        raise ValueError(f"{path}: missing 'p=<int>' header")
    cut = lines.index("diag")
    rows: list[dict] = [{} for _ in range(p)]
    for ln in lines[1:cut]:
        k, j, v = ln.split()
        rows[int(k) - 1][int(j) - 1] = float(v)
    diag = np.array([float(v) for v in lines[cut + 1 :]])
    return LowerFactor.from_rows(rows, diag)


def write_cpdag(path, g: Cpdag) -> None:
    rows = [f"p={g.p}"]
    rows += [f"{a + 1} {b + 1} d" for a, b in sorted(g.directed)]
    rows += [f"{a + 1} {b + 1} u" for a, b in sorted(g.undirected)]
    Path(path).write_text("\n".join(rows) + "\n")


def read_cpdag(path) -> Cpdag:
    lines = list(_lines(path))
    p = _header_p(lines[0]) if lines else None
    if p is None:
        raise ValueError(f"{path}: missing 'p=<int>' header")
    directed, undirected = set(), set()
    for ln in lines[1:]:
        a, b, t = ln.split()
        a, b = int(a) - 1, int(b) - 1
        if t == "d":
            directed.add((a, b))
        elif t == "u":
            undirected.add((min(a, b), max(a, b)))
        else:
            raise ValueError(f"{path}: edge type must be 'd' or 'u', got {t!r}")
    return Cpdag(p, frozenset(directed), frozenset(undirected))


def write_orderings(path, orders) -> None:
    Path(path).write_text("".join(" ".join(str(v + 1) for v in o.perm) + "\n" for o in orders))


def read_orderings(path) -> list[Ordering]:
    return [Ordering([int(t) - 1 for t in ln.split()]) for ln in _lines(path)]
