"""Stage 2: per-node OLS refit on candidate parents and t-test pruning."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg
from scipy import stats

from .core import LowerFactor, Ordering
from .precision import center

RANK_TOL = 1e-10


@dataclass
class OlsFit:
    coef: np.ndarray
    se: np.ndarray
    pvalues: np.ndarray
    rss: float
    df: int
    dropped: list = field(default_factory=list)


def local_ols(y, Z) -> OlsFit:
    """No-intercept least squares of ``y`` on the columns of ``Z``.

    Collinear columns are detected by column-pivoted QR and dropped (their
    coefficient is 0 and p-value 1). Standard errors use
    ``rss / (n - s)`` with ``s`` the number of kept columns; p-values are
    two-sided from the t distribution with ``n - s`` degrees of freedom.
    """
    y = np.asarray(y, dtype=float)
    Z = np.asarray(Z, dtype=float).reshape(len(y), -1)
    n, s = Z.shape
    if s == 0:
        return OlsFit(np.zeros(0), np.zeros(0), np.zeros(0), float(y @ y), n)
    if s >= n:
        raise ValueError(f"need fewer regressors than rows (s={s}, n={n})")
    Q, R, piv = scipy.linalg.qr(Z, mode="economic", pivoting=True)
    rdiag = np.abs(np.diag(R))
    rank = int(np.sum(rdiag > RANK_TOL * max(rdiag[0], np.finfo(float).tiny)))
    kept = np.sort(piv[:rank])
    dropped = sorted(int(c) for c in piv[rank:])
    coef = np.zeros(s)
    se = np.zeros(s)
    pvals = np.ones(s)
    df = n - rank
    if rank == 0:
        return OlsFit(coef, se, pvals, float(y @ y), df, dropped)
    Zk = Z[:, kept]
    Qk, Rk = np.linalg.qr(Zk)
    bk = scipy.linalg.solve_triangular(Rk, Qk.T @ y)
    resid = y - Zk @ bk
    rss = float(resid @ resid)
    sigma2 = rss / df
    Rinv = scipy.linalg.solve_triangular(Rk, np.eye(rank))
    sek = np.sqrt(sigma2 * np.sum(Rinv**2, axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        tstat = np.where(sek > 0, np.abs(bk) / np.where(sek > 0, sek, 1.0), np.where(bk != 0, np.inf, 0.0))
    coef[kept] = bk
    se[kept] = sek
    pvals[kept] = 2.0 * stats.t.sf(tstat, df)
    return OlsFit(coef, se, pvals, rss, df, dropped)


@dataclass
class NodeRefit:
    variable: int
    position: int
    candidates: list
    coef: list
    pvalues: list
    survivors: list
    rss: float
    flag: str = ""


@dataclass
class RefitReport:
    nodes: list
    factor: LowerFactor = field(repr=False)
    alpha2: float = 0.01

    def to_json(self) -> str:
        return json.dumps({"alpha2": self.alpha2, "nodes": [asdict(nd) for nd in self.nodes]}, indent=1)

    def bic(self, n: int) -> float:
        """Gaussian BIC of the fitted candidate regressions."""
        return bic_from_fits([(nd.rss, len(nd.candidates)) for nd in self.nodes], n)


def bic_from_fits(fits, n: int) -> float:
    """``sum_j n log(rss_j / n) + s_j log n``."""
    tiny = np.finfo(float).tiny
    return float(sum(n * np.log(max(rss, tiny) / n) + s * np.log(n) for rss, s in fits))


def refit_and_test(X, order: Ordering, L_hat: LowerFactor, alpha2: float = 0.01, tol: float = 0.0) -> RefitReport:
    """Prune ``L_hat`` entrywise by refitted t-test p-values.

    For the variable at position ``j`` the candidate parents are the variables
    at positions ``k > j`` with ``L_hat[k, j] != 0``. An entry survives iff its
    p-value is ``<= alpha2``; diagonals are kept. Nodes whose candidate count
    reaches ``n`` are left unpruned and flagged.
    """
    if not 0 < alpha2 < 1:
        raise ValueError("alpha2 must lie in (0, 1)")
    Xc = center(X)
    n = Xc.shape[0]
    perm = order.perm
    cand = L_hat.column_supports(tol)
    keep_pairs = set()
    nodes = []
    for j in range(order.p):
        ks = cand[j]
        var = int(perm[j])
        cvars = [int(perm[k]) for k in ks]
        if len(ks) >= n:
            keep_pairs.update((k, j) for k in ks)
            nodes.append(NodeRefit(var, j, cvars, [], [], cvars, float("nan"), "skipped: too many candidates"))
            continue
        fit = local_ols(Xc[:, var], Xc[:, cvars])
        surv = [k for k, pv in zip(ks, fit.pvalues) if pv <= alpha2]
        keep_pairs.update((k, j) for k in surv)
        nodes.append(
            NodeRefit(
                var, j, cvars, fit.coef.tolist(), fit.pvalues.tolist(),
                [int(perm[k]) for k in surv], fit.rss, "collinear" if fit.dropped else "",
            )
        )
    pruned = L_hat.masked(lambda k, j, v: (k, j) in keep_pairs and abs(v) > tol)
    return RefitReport(nodes, pruned, alpha2)


def survivor_bic(X, report: RefitReport) -> float:
    """BIC after refitting every node on its surviving parents only."""
    Xc = center(X)
    n = Xc.shape[0]
    fits = []
    for nd in report.nodes:
        fit = local_ols(Xc[:, nd.variable], Xc[:, nd.survivors])
        fits.append((fit.rss, len(nd.survivors)))
    return bic_from_fits(fits, n)
