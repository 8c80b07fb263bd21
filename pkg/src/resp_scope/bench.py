"""Benchmark harness: grid of synthetic SEMs, SCOPE runs, CSV results.

Each replicate (one SEM, one data set) runs in its own process so that the
per-run timeout can be enforced by killing it. Stage 0 is computed once per
replicate and shared by all ordering variants; its wall time is reported in a
separate column.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import multiprocessing as mp
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .graph_eval import cpdag_of, nshd, shd_cpdag, skeleton_f1
from .ordering import reverse_topological
from .pipeline import scope_run
from .precision import Stage0Config, build_precision_estimate
from .sem import NOISE_FAMILIES, PARENT_COUNTS, Dag, random_sem, sample

logger = logging.getLogger(__name__)

VARIANTS = ("amd", "pi0")
TIMEOUT_GRACE = 5.0
COLUMNS = (
    "p", "d", "n", "noise", "rep", "seed", "variant", "status",
    "f1", "nshd", "shd", "n_true_edges", "n_est_edges", "mask_pairs", "lam", "score",
    "ic0_ops", "max_mask_degree",
    "t_stage0", "t_stage1", "t_stage2", "t_stage12", "t_wall",
)
TIMING_COLUMNS = ("t_stage0", "t_stage1", "t_stage2", "t_stage12", "t_wall")
METRICS = ("f1", "nshd", "shd", "n_est_edges", "ic0_ops", "t_stage0", "t_stage1", "t_stage2", "t_stage12")


@dataclass(frozen=True)
class ExperimentConfig:
    p_grid: tuple = (100,)
    d: int = 1
    n_mult: float = 20.0
    n_cap: int = 20000
    noise: str = "normal"
    reps: int = 30
    seed: int = 0
    timeout: float = 1800.0
    variants: tuple = VARIANTS
    metrics: tuple = ("f1", "nshd")
    parent_count: str = "uniform"
    alpha0: float = 0.01
    alpha2: float = 0.01
    boot_reps: int = 200
    c_thr: float = 1.0

    def __post_init__(self):
        if not self.p_grid or any(int(p) < 1 for p in self.p_grid):
            raise ValueError("p_grid values must be positive")
        if self.d < 0 or self.reps < 1 or self.n_mult <= 0 or self.n_cap < 1:
            raise ValueError("d >= 0, reps >= 1, n_mult > 0 and n_cap >= 1 required")
        if not self.timeout > 0:
            raise ValueError("timeout must be > 0")
        if self.noise not in NOISE_FAMILIES:
            raise ValueError(f"noise must be one of {NOISE_FAMILIES}")
        if self.parent_count not in PARENT_COUNTS:
            raise ValueError(f"parent_count must be one of {PARENT_COUNTS}")
        bad = [v for v in self.variants if v not in VARIANTS]
        if bad or not self.variants:
            raise ValueError(f"variants must be a nonempty subset of {VARIANTS}")
        bad = [m for m in self.metrics if m not in METRICS]
        if bad:
            raise ValueError(f"unknown metrics {bad}")

    def n_for(self, p: int) -> int:
        return int(min(self.n_cap, math.ceil(self.n_mult * p)))

    def stage0(self) -> Stage0Config:
        return Stage0Config(alpha0=self.alpha0, boot_reps=self.boot_reps, c_thr=self.c_thr)

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        """Parse ``key = value`` lines; list values are comma separated."""
        kinds = {f.name: f.type for f in fields(cls)}
        kw = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, val = (s.strip() for s in line.partition("="))
            if key not in kinds:
                raise ValueError(f"unknown config key {key!r}")
            kind = kinds[key]
            if kind == "tuple":
                items = [v.strip() for v in val.split(",") if v.strip()]
                kw[key] = tuple(int(v) for v in items) if key == "p_grid" else tuple(items)
            elif kind == "int":
                kw[key] = int(val)
            elif kind == "float":
                kw[key] = float(val)
            else:
                kw[key] = val
        return cls(**kw)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_text(Path(path).read_text())


def replicate_seed(base: int, p: int, rep: int) -> int:
    return int(np.random.SeedSequence([base, p, rep]).generate_state(1)[0])


def _base_row(cfg: ExperimentConfig, p: int, rep: int, variant: str) -> dict:
    row = dict.fromkeys(COLUMNS, "")
    row.update(p=p, d=cfg.d, n=cfg.n_for(p), noise=cfg.noise, rep=rep, seed=replicate_seed(cfg.seed, p, rep), variant=variant)
    return row


def run_replicate(cfg: ExperimentConfig, p: int, rep: int) -> list[dict]:
    """Generate one SEM and data set and run every variant on it."""
    seed = replicate_seed(cfg.seed, p, rep)
    n = cfg.n_for(p)
    sem = random_sem(p, cfg.d, seed, cfg.parent_count)
    X = sample(sem, n, cfg.noise, seed + 1)
    truth = cpdag_of(sem.dag)
    t0 = time.perf_counter()
    est = build_precision_estimate(X, cfg.stage0(), seed)
    t_stage0 = time.perf_counter() - t0
    rows = []
    for variant in cfg.variants:
        cands = "amd" if variant == "amd" else [reverse_topological(sem.dag)]
        t0 = time.perf_counter()
        out = scope_run(X, cands, alpha2=cfg.alpha2, estimate=est)
        wall = time.perf_counter() - t0 + t_stage0
        est_cpdag = cpdag_of(Dag.from_edges(p, out.edges))
        row = _base_row(cfg, p, rep, variant)
        tm = out.timings
        row.update(
            status="ok",
            f1=skeleton_f1(est_cpdag, truth),
            nshd=nshd(est_cpdag, truth) if truth.n_edges() else "",
            shd=shd_cpdag(est_cpdag, truth),
            n_true_edges=truth.n_edges(),
            n_est_edges=len(out.edges),
            mask_pairs=len(est.mask),
            lam=est.lam,
            score=out.score,
            ic0_ops=sum(c.ic0.ops for c in out.candidates),
            max_mask_degree=int(est.mask.degrees().max()),
            t_stage0=t_stage0,
            t_stage1=tm.get("stage1", 0.0),
            t_stage2=tm.get("stage2", 0.0),
            t_stage12=tm.get("stage1", 0.0) + tm.get("stage2", 0.0),
            t_wall=wall,
        )
        rows.append(row)
    return rows


def _child(conn, cfg, p, rep):
    try:
        conn.send(("ok", run_replicate(cfg, p, rep)))
    except Exception as exc:  # reported as a status row by the parent
        conn.send(("error", f"{type(exc).__name__}: {exc}"))
    finally:
        conn.close()


def _failed_rows(cfg, p, rep, status, wall):
    rows = []
    for v in cfg.variants:
        row = _base_row(cfg, p, rep, v)
        row.update(status=status, t_wall=wall)
        rows.append(row)
    return rows


def run_benchmark(cfg: ExperimentConfig, workers: int = 1, out_csv=None) -> list[dict]:
    """Run every ``(p, rep)`` cell of the grid.

    Replicates run in child processes, at most ``workers`` at a time; a child
    exceeding ``cfg.timeout`` is killed and recorded with status ``timeout``.
    Cells whose sample size is too small for Stage 2 are recorded as ``skip``.
    Rows come back sorted by grid position, so the CSV is deterministic apart
    from the timing columns.
    """
    ctx = mp.get_context("fork")
    tasks = [(i, p, r) for i, p in enumerate(cfg.p_grid) for r in range(cfg.reps)]
    results: dict = {}
    pending = list(tasks)
    active: dict = {}
    workers = max(1, int(workers))
    while pending or active:
        while pending and len(active) < workers:
            key = pending.pop(0)
            _, p, rep = key
            if cfg.n_for(p) < 3:
                results[key] = _failed_rows(cfg, p, rep, "skip", 0.0)
                continue
            parent, child = ctx.Pipe(duplex=False)
            proc = ctx.Process(target=_child, args=(child, cfg, p, rep), daemon=True)
            proc.start()
            child.close()
            active[key] = (proc, parent, time.monotonic())
        time.sleep(0.01)
        for key, (proc, conn, start) in list(active.items()):
            _, p, rep = key
            elapsed = time.monotonic() - start
            if conn.poll():
                try:
                    status, payload = conn.recv()
                except EOFError:
                    status, payload = "error", "worker exited without a result"
                proc.join()
                results[key] = payload if status == "ok" else _failed_rows(cfg, p, rep, "error", elapsed)
                if status != "ok":
                    logger.warning("p=%d rep=%d failed: %s", p, rep, payload)
                del active[key]
            elif not proc.is_alive():
                proc.join()
                results[key] = _failed_rows(cfg, p, rep, "error", elapsed)
                del active[key]
            elif elapsed > cfg.timeout:
                proc.kill()
                proc.join()
                results[key] = _failed_rows(cfg, p, rep, "timeout", min(elapsed, cfg.timeout + TIMEOUT_GRACE))
                del active[key]
    rows = [row for key in tasks for row in results[key]]
    if out_csv is not None:
        write_results(out_csv, rows)
    return rows


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_results(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for row in rows:
            w.writerow([_cell(row[c]) for c in COLUMNS])


def read_results(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _num(v):
    if v in ("", None):
        return None
    return float(v)


def summarize(rows, metrics=("f1", "nshd")) -> list[dict]:
    """Mean and standard error per ``(p, variant)`` over ``ok`` rows."""
    groups: dict = {}
    for row in rows:
        groups.setdefault((int(row["p"]), row["variant"]), []).append(row)
    out = []
    for (p, variant), grp in sorted(groups.items()):
        ok = [r for r in grp if r["status"] == "ok"]
        rec = {"p": p, "variant": variant, "n_ok": len(ok), "n_runs": len(grp)}
        for m in metrics:
            vals = np.array([x for x in (_num(r.get(m)) for r in ok) if x is not None])
            rec[f"mean_{m}"] = float(vals.mean()) if len(vals) else None
            rec[f"stderr_{m}"] = float(vals.std(ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else None
        out.append(rec)
    return out


def emit_plot_data(results, metric: str, path=None) -> str:
    """Tidy CSV with columns ``p, mean_<metric>, stderr_<metric>, variant``."""
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", f"mean_{metric}", f"stderr_{metric}", "variant"])
    for rec in summarize(results, (metric,)):
        mean, se = rec[f"mean_{metric}"], rec[f"stderr_{metric}"]
        w.writerow([rec["p"], "" if mean is None else repr(mean), "" if se is None else repr(se), rec["variant"]])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def write_summary(path, cfg: ExperimentConfig, rows) -> None:
    payload = {"config": asdict(cfg), "summary": summarize(rows, cfg.metrics)}
    Path(path).write_text(json.dumps(payload, indent=1))
