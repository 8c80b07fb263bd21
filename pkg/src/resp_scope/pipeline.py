"""The SCOPE pipeline: shared Stage 0, then IC(0), refit-and-test and
sparsest-factor selection over a candidate set of orderings."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import REL_ZERO_TOL, LowerFactor, Ordering, permute_symmetric
from .ic0 import Ic0Outcome, check_admissible, induced_edges, masked_ic0
from .ordering import min_degree_ordering
from .precision import (
    PrecisionEstimate,
    Stage0Config,
    build_precision_estimate,
    center,
    precision_from_population,
)
from .refit import RefitReport, refit_and_test, survivor_bic
from .sem import Dag

logger = logging.getLogger(__name__)

AUTO_AMD = "amd"


class NoFeasibleCandidate(RuntimeError):
    pass


@dataclass
class CandidateResult:
    ordering: Ordering
    ic0: Ic0Outcome
    factor: LowerFactor | None = None
    score: float = float("inf")
    admissible: bool | None = None
    report: RefitReport | None = field(default=None, repr=False)
    bic: float | None = None

    @property
    def feasible(self) -> bool:
        return self.factor is not None and np.isfinite(self.score)

    def edges(self) -> frozenset:
        if self.factor is None:
            return frozenset()
        return induced_edges(self.ordering, self.factor)


@dataclass
class ScopeOutput:
    ordering: Ordering | None
    edges: frozenset
    candidates: list
    selected: int | None
    timings: dict
    stage0: PrecisionEstimate = field(repr=False)
    p: int = 0

    @property
    def score(self) -> float:
        return self.candidates[self.selected].score if self.selected is not None else float("inf")

    def dag(self) -> Dag:
        return Dag.from_edges(self.p, self.edges)

    def audit(self) -> dict:
        return {
            "selected": self.selected,
            "ordering": None if self.ordering is None else self.ordering.perm.tolist(),
            "n_edges": len(self.edges),
            "lambda": self.stage0.lam,
            "mask_pairs": len(self.stage0.mask),
            "timings": self.timings,
            "candidates": [
                {
                    "ordering": c.ordering.perm.tolist(),
                    "feasible": c.feasible,
                    "breakdown_row": c.ic0.breakdown_row,
                    "admissible": c.admissible,
                    "score": c.score if np.isfinite(c.score) else None,
                    "ic0_ops": c.ic0.ops,
                    "bic": c.bic,
                }
                for c in self.candidates
            ],
        }


def _population_prune(L: LowerFactor) -> LowerFactor:
    scale = max(float(np.max(L.diag)), max((float(np.max(np.abs(v))) for v in L.vals if len(v)), default=0.0))
    tol = REL_ZERO_TOL * scale
    return L.masked(lambda k, j, v: abs(v) > tol)


def evaluate_candidate(
    est: PrecisionEstimate,
    order: Ordering,
    X=None,
    alpha2: float = 0.01,
    require_admissible: bool = False,
    admissible_tol: float = 1e-10,
    timings: dict | None = None,
) -> CandidateResult:
    """Stages 1 and 2 for one ordering.

    ``X=None`` is population mode: Stage 2 is replaced by dropping factor
    entries that are numerically zero.
    """
    timings = timings if timings is not None else {}
    t0 = time.perf_counter()
    out = masked_ic0(permute_symmetric(est.omega, order), est.mask.permuted(order))
    timings["stage1"] = timings.get("stage1", 0.0) + time.perf_counter() - t0
    if not out.ok:
        logger.info("IC(0) breakdown at row %d", out.breakdown_row)
        return CandidateResult(order, out)
    t0 = time.perf_counter()
    admissible = check_admissible(out.factor, est.mask.permuted(order), admissible_tol)
    timings["admissibility"] = timings.get("admissibility", 0.0) + time.perf_counter() - t0
    if require_admissible and not admissible:
        return CandidateResult(order, out, admissible=False)
    t0 = time.perf_counter()
    report = None
    if X is None:
        pruned = _population_prune(out.factor)
    else:
        report = refit_and_test(X, order, out.factor, alpha2)
        pruned = report.factor
    timings["stage2"] = timings.get("stage2", 0.0) + time.perf_counter() - t0
    return CandidateResult(order, out, pruned, float(pruned.nnz()), admissible, report)


def select_sparsest(results: Sequence[CandidateResult], X=None) -> int:
    """Index of the sparsest feasible candidate.

    Ties go to the smallest BIC (``CandidateResult.bic`` if already set,
    otherwise refitted on surviving parents from ``X``), then to the earliest
    candidate.
    """
    feasible = [i for i, r in enumerate(results) if r.feasible]
    if not feasible:
        raise NoFeasibleCandidate("no feasible candidate ordering")
    best = min(results[i].score for i in feasible)
    tied = [i for i in feasible if results[i].score == best]
    if len(tied) == 1:
        return tied[0]
    for i in tied:
        r = results[i]
        if r.bic is None and X is not None and r.report is not None:
            r.bic = survivor_bic(X, r.report)
    return min(tied, key=lambda i: (results[i].bic if results[i].bic is not None else np.inf, i))


def scope_run(
    X,
    candidates: Sequence[Ordering] | str = AUTO_AMD,
    cfg0: Stage0Config | None = None,
    alpha2: float = 0.01,
    precision_override=None,
    seed: int = 0,
    require_admissible: bool = False,
    estimate: PrecisionEstimate | None = None,
) -> ScopeOutput:
    """Run SCOPE.

    Stage 0 runs once and is shared by all candidates. ``candidates="amd"``
    uses the minimum-degree ordering of the estimated mask. A known precision
    matrix may be passed as ``precision_override``; combined with ``X=None``
    the whole run is at the population level. A Stage 0 result computed
    earlier can be reused through ``estimate``.
    """
    timings: dict = {}
    Xc = None if X is None else center(X)
    if Xc is None and precision_override is None and estimate is None:
        raise ValueError("population mode needs precision_override")
    t0 = time.perf_counter()
    if estimate is not None:
        est = estimate
    elif precision_override is not None:
        est = precision_from_population(precision_override)
    else:
        est = build_precision_estimate(Xc, cfg0, seed)
    timings["stage0"] = time.perf_counter() - t0
    p = est.mask.p
    if isinstance(candidates, str):
        if candidates != AUTO_AMD:
            raise ValueError(f"unknown candidate source {candidates!r}")
        t0 = time.perf_counter()
        orders = [min_degree_ordering(est.mask)]
        timings["ordering"] = time.perf_counter() - t0
    else:
        orders = list(candidates)
        if not orders:
            raise ValueError("empty candidate set")
    results = []
    for order in orders:
        if order.p != p:
            raise ValueError("candidate ordering has the wrong length")
        results.append(evaluate_candidate(est, order, Xc, alpha2, require_admissible, timings=timings))
    t0 = time.perf_counter()
    try:
        sel = select_sparsest(results, Xc)
    except NoFeasibleCandidate:
        logger.warning("all %d candidates infeasible", len(results))
        return ScopeOutput(None, frozenset(), results, None, timings, est, p)
    timings["stage3"] = time.perf_counter() - t0
    best = results[sel]
    return ScopeOutput(best.ordering, best.edges(), results, sel, timings, est, p)
