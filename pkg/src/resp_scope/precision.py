"""Stage 0: precision-matrix estimation and the screening mask.

Sample covariance, bootstrap selection of the graphical-lasso penalty,
graphical lasso by block coordinate descent, and hard thresholding at
``c_thr * lambda``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numba
import numpy as np

from .core import SupportMask, support_of

logger = logging.getLogger(__name__)


class DegenerateDataWarning(UserWarning):
    pass


class GlassoConvergenceWarning(UserWarning):
    pass


class PrecisionEstimationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Stage0Config:
    alpha0: float = 0.01
    boot_reps: int = 200
    c_thr: float = 1.0
    gl_tol: float = 1e-4
    gl_max_iter: int = 100
    standardize: bool = True

    def __post_init__(self):
        if not 0 < self.alpha0 < 1:
            raise ValueError("alpha0 must lie in (0, 1)")
        if self.boot_reps < 1:
            raise ValueError("boot_reps must be >= 1")
        if self.c_thr < 0:
            raise ValueError("c_thr must be >= 0")
        if not self.gl_tol > 0:
            raise ValueError("gl_tol must be > 0")
        if self.gl_max_iter < 1:
            raise ValueError("gl_max_iter must be >= 1")


@dataclass
class GlassoResult:
    precision: np.ndarray
    covariance: np.ndarray
    n_iter: int
    converged: bool
    kkt_residual: float
    ridge_added: float = 0.0


@dataclass
class PrecisionEstimate:
    omega_hat: np.ndarray
    omega_thr: np.ndarray
    lam: float
    mask: SupportMask
    glasso: GlassoResult | None = field(default=None, repr=False)

    @property
    def omega(self) -> np.ndarray:
        """Matrix handed to Stage 1 (the thresholded estimate)."""
        return self.omega_thr


def center(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("data must be a 2-D array with at least one row")
    return X - X.mean(axis=0, keepdims=True)


def sample_covariance(X) -> np.ndarray:
    """``(1/n) sum_i x_i x_i^T`` over mean-centred rows."""
    Xc = center(X)
    S = Xc.T @ Xc / Xc.shape[0]
    return (S + S.T) / 2


def robsel_lambda(X, alpha0: float = 0.01, B: int = 200, seed: int = 0) -> float:
    """Bootstrap (1 - alpha0)-quantile of ``max|S_boot - S|``.

    Rows of the centred data are resampled with replacement and each replicate
    covariance is the plain average of ``x_i x_i^T`` over the resampled rows,
    so replicates are unbiased for the full-sample ``S``. The quantile is the
    smallest bootstrap statistic whose empirical CDF reaches ``1 - alpha0``.
    """
    if not 0 < alpha0 < 1:
        raise ValueError("alpha0 must lie in (0, 1)")
    if B < 1:
        raise ValueError("B must be >= 1")
    Xc = center(X)
    n = Xc.shape[0]
    if not np.any(Xc):
        warnings.warn("all rows identical; lambda set to 0", DegenerateDataWarning, stacklevel=2)
        return 0.0
    S = Xc.T @ Xc / n
    rng = np.random.default_rng(seed)
    stats = np.empty(B)
    for b in range(B):
        counts = np.bincount(rng.integers(0, n, n), minlength=n).astype(float)
        Sb = (Xc * counts[:, None]).T @ Xc / n
        stats[b] = np.max(np.abs(Sb - S))
    return float(np.quantile(stats, 1.0 - alpha0, method="inverted_cdf"))


@numba.njit(cache=True)
def _glasso_sweeps(S, lam, tol, max_iter, inner_max):
    p = S.shape[0]
    W = S.copy()
    beta = np.zeros((p, p))
    wb = np.zeros(p)
    scale = 0.0
    for i in range(p):
        scale += S[i, i]
    scale /= p
    thresh = tol * scale
    inner_tol = thresh * 0.1
    n_iter = 0
    converged = False
    for it in range(max_iter):
        n_iter = it + 1
        max_change = 0.0
        for j in range(p):
            # wb = W11 @ beta_j over rows != j
            for r in range(p):
                acc = 0.0
                for c in range(p):
                    if c != j:
                        acc += W[r, c] * beta[j, c]
                wb[r] = acc
            for sweep in range(inner_max):
                max_step = 0.0
                for k in range(p):
                    if k == j:
                        continue
                    wkk = W[k, k]
                    old = beta[j, k]
                    z = S[k, j] - (wb[k] - wkk * old)
                    if z > lam:
                        new = (z - lam) / wkk
                    elif z < -lam:
                        new = (z + lam) / wkk
                    else:
                        new = 0.0
                    delta = new - old
                    if delta != 0.0:
                        beta[j, k] = new
                        for r in range(p):
                            wb[r] += W[r, k] * delta
                        step = abs(delta) * wkk
                        if step > max_step:
                            max_step = step
                if max_step < inner_tol:
                    break
            for r in range(p):
                if r != j:
                    ch = abs(W[r, j] - wb[r])
                    if ch > max_change:
                        max_change = ch
                    W[r, j] = wb[r]
                    W[j, r] = wb[r]
        if max_change < thresh:
            converged = True
            break
    Theta = np.zeros((p, p))
    for j in range(p):
        acc = 0.0
        for k in range(p):
            if k != j:
                acc += W[j, k] * beta[j, k]
        tjj = 1.0 / (W[j, j] - acc)
        Theta[j, j] = tjj
        for k in range(p):
            if k != j:
                Theta[k, j] = -beta[j, k] * tjj
    return Theta, W, n_iter, converged


def _is_pd(A) -> bool:
    try:
        np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        return False
    return bool(np.all(np.isfinite(A)))


def glasso_kkt_residual(S, K, lam: float) -> float:
    """Max violation of the optimality conditions of the penalised likelihood."""
    W = np.linalg.inv(K)
    G = S - W
    p = S.shape[0]
    off = ~np.eye(p, dtype=bool)
    res = np.abs(np.diag(G))
    nz = off & (K != 0)
    z = off & (K == 0)
    out = [res.max()]
    if nz.any():
        out.append(np.max(np.abs(G[nz] + lam * np.sign(K[nz]))))
    if z.any():
        out.append(np.max(np.maximum(np.abs(G[z]) - lam, 0.0)))
    return float(max(out))


def graphical_lasso(S, lam: float, cfg: Stage0Config | None = None, inner_max: int = 1000) -> GlassoResult:
    """Minimise ``tr(K S) - log det K + lam * sum_{i != j} |K_ij|``.

    Block coordinate descent over columns of the covariance estimate, each
    block a lasso solved by cyclic coordinate descent. Stops when a full sweep
    changes no covariance entry by more than ``gl_tol * mean(diag S)``.
    """
    cfg = cfg or Stage0Config()
    S = np.ascontiguousarray(S, dtype=float)
    if lam < 0:
        raise ValueError("lam must be >= 0")
    p = S.shape[0]
    if p == 1:
        K = np.array([[1.0 / S[0, 0]]])
        return GlassoResult(K, S.copy(), 0, True, 0.0)
    ridge = 0.0
    for attempt in range(2):
        Sr = S + ridge * np.eye(p)
        if np.all(np.diag(Sr) > 0):
            Theta, W, n_iter, converged = _glasso_sweeps(Sr, float(lam), cfg.gl_tol, cfg.gl_max_iter, inner_max)
            Theta = (Theta + Theta.T) / 2
            if _is_pd(Theta):
                break
        if attempt == 1:
            raise PrecisionEstimationError("graphical lasso did not return a positive definite estimate")
        ridge = 1e-8 * float(np.trace(S)) / p
        if ridge <= 0:
            raise PrecisionEstimationError("covariance has zero trace")
        logger.warning("non-PD graphical lasso iterate; retrying with diagonal ridge %.3g", ridge)
    if not converged:
        warnings.warn(f"graphical lasso hit gl_max_iter={cfg.gl_max_iter}", GlassoConvergenceWarning, stacklevel=2)
    kkt = glasso_kkt_residual(Sr, Theta, lam)
    return GlassoResult(Theta, W, int(n_iter), bool(converged), kkt, ridge)


def hard_threshold(K, level: float) -> np.ndarray:
    """Zero off-diagonal entries with ``|K_ij| < level``; the diagonal is kept."""
    K = np.asarray(K, dtype=float)
    out = np.where(np.abs(K) >= level, K, 0.0)
    np.fill_diagonal(out, np.diag(K))
    return out


def standardize(X) -> np.ndarray:
    """Centre and scale columns to unit variance."""
    Xc = center(X)
    sd = Xc.std(axis=0)
    if np.any(sd == 0):
        raise PrecisionEstimationError(f"constant columns: {np.flatnonzero(sd == 0).tolist()}")
    return Xc / sd


def build_precision_estimate(X, cfg: Stage0Config | None = None, seed: int = 0) -> PrecisionEstimate:
    """Sample covariance, bootstrap lambda, graphical lasso, hard threshold, mask.

    With ``cfg.standardize`` the estimate is of the correlation-scale precision
    ``D^{1/2} Omega D^{1/2}``, which has the same support as ``Omega``.
    """
    cfg = cfg or Stage0Config()
    if cfg.standardize:
        X = standardize(X)
    S = sample_covariance(X)
    lam = robsel_lambda(X, cfg.alpha0, cfg.boot_reps, seed)
    gl = graphical_lasso(S, lam, cfg)
    thr = hard_threshold(gl.precision, cfg.c_thr * lam)
    mask = support_of(thr, tol=0.0)
    logger.info("stage0: lambda=%.4g iters=%d kkt=%.2e mask pairs=%d", lam, gl.n_iter, gl.kkt_residual, len(mask))
    return PrecisionEstimate(gl.precision, thr, lam, mask, gl)


def precision_from_population(omega, tol: float | None = None) -> PrecisionEstimate:
    """Bypass Stage 0 with a known precision matrix; mask = its support."""
    omega = np.asarray(omega, dtype=float)
    return PrecisionEstimate(omega, omega, 0.0, support_of(omega, tol), None)
