"""Command-line entry point: ``resp-scope <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .bench import ExperimentConfig, emit_plot_data, run_benchmark, write_summary
from .counterexample import find_fill_sp_mismatch
from .graph_eval import cpdag_of, nshd, shd_cpdag, skeleton_f1
from .oracles import MAX_ORACLE_P, check_smr, exact_sp_oracle
from .ordering import reverse_topological
from .pipeline import scope_run
from .precision import Stage0Config, build_precision_estimate
from .sem import NOISE_FAMILIES, PARENT_COUNTS, population_precision, random_sem, sample


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, default=float) + "\n")


def cmd_generate(args) -> int:
    out = _out_dir(args)
    sem = random_sem(args.p, args.d, args.seed, args.parent_count)
    io.write_sem(out / "sem.txt", sem)
    io.write_dag(out / "dag.txt", sem.dag)
    if args.n:
        io.write_data(out / "data.csv", sample(sem, args.n, args.noise, args.seed + 1))
    print(f"wrote SEM with p={args.p}, {len(sem.dag.edges)} edges to {out}")
    return 0


def _stage0_cfg(args) -> Stage0Config:
    return Stage0Config(alpha0=args.alpha0, boot_reps=args.boot_reps, c_thr=args.c_thr)


def cmd_estimate(args) -> int:
    out = _out_dir(args)
    X = io.read_data(args.data)
    est = build_precision_estimate(X, _stage0_cfg(args), args.seed)
    io.write_symmetric(out / "precision.txt", est.omega_thr)
    io.write_mask(out / "mask.txt", est.mask)
    gl = est.glasso
    _write_json(out / "estimate.json", {
        "lambda": est.lam,
        "iterations": gl.n_iter,
        "converged": gl.converged,
        "kkt_residual": gl.kkt_residual,
        "mask_pairs": len(est.mask),
    })
    print(f"lambda={est.lam:.6g} iterations={gl.n_iter} kkt={gl.kkt_residual:.3g} mask pairs={len(est.mask)}")
    return 0


def cmd_run(args) -> int:
    out = _out_dir(args)
    X = io.read_data(args.data)
    if args.amd:
        cands = "amd"
    elif args.ordering_file:
        cands = io.read_orderings(args.ordering_file)
    else:
        cands = [reverse_topological(io.read_dag(args.reverse_topo_with_truth))]
    res = scope_run(X, cands, _stage0_cfg(args), args.alpha2, seed=args.seed)
    io.write_dag(out / "edges.txt", res.dag())
    io.write_cpdag(out / "cpdag.txt", cpdag_of(res.dag(), args.cpdag_budget))
    if res.selected is not None:
        sel = res.candidates[res.selected]
        io.write_factor(out / "factor.txt", sel.factor)
        if sel.report is not None:
            (out / "refit.json").write_text(sel.report.to_json() + "\n")
    _write_json(out / "audit.json", res.audit())
    print(f"selected candidate {res.selected}: {len(res.edges)} edges, score {res.score}")
    return 0 if res.selected is not None else 2


def cmd_bench(args) -> int:
    out = _out_dir(args)
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if args.timeout is not None:
        overrides["timeout"] = args.timeout
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        cfg = ExperimentConfig(**{**cfg.__dict__, **overrides})
    rows = run_benchmark(cfg, workers=args.workers, out_csv=out / "results.csv")
    write_summary(out / "summary.json", cfg, rows)
    for m in cfg.metrics:
        emit_plot_data(rows, m, out / f"plot_{m}.csv")
    print(f"{len(rows)} rows written to {out / 'results.csv'}")
    return 0


def cmd_oracle(args) -> int:
    sem = io.read_sem(args.sem)
    if sem.p > MAX_ORACLE_P:
        print(f"oracle limited to p <= {MAX_ORACLE_P}", file=sys.stderr)
        return 2
    omega = population_precision(sem)
    res = exact_sp_oracle(omega)
    smr = check_smr(omega, sem.dag)
    print(f"min nnz(L) = {res.min_nnz} over {len(res.orderings)} orderings; {len(res.minimizers)} minimisers")
    print(f"SMR holds: {smr}")
    if args.out:
        _write_json(_out_dir(args) / "oracle.json", {
            "min_nnz": res.min_nnz,
            "minimizers": [o.perm.tolist() for o, _ in res.minimizers],
            "smr": smr,
        })
    return 0


def cmd_counterexample(args) -> int:
    w = find_fill_sp_mismatch(args.p, args.seed)
    if w is None:
        print(f"no witness for p={args.p}")
        return 1
    print(w.report())
    return 0


def cmd_eval(args) -> int:
    truth, est = io.read_dag(args.truth), io.read_dag(args.est)
    ct, ce = cpdag_of(truth), cpdag_of(est)
    res = {"f1": skeleton_f1(ce, ct), "shd": shd_cpdag(ce, ct)}
    if ct.n_edges():
        res["nshd"] = nshd(ce, ct)
    print(json.dumps(res))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="resp-scope", description="Causal structure learning by masked incomplete Cholesky.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def stage_flags(sp):
        sp.add_argument("--alpha0", type=float, default=0.01)
        sp.add_argument("--boot-reps", type=int, default=200)
        sp.add_argument("--c-thr", type=float, default=1.0)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=".")

    g = sub.add_parser("generate", help="random SEM (and data)")
    g.add_argument("--p", type=int, required=True)
    g.add_argument("--d", type=int, default=1)
    g.add_argument("--n", type=int, default=0, help="rows of data to draw (0: none)")
    g.add_argument("--noise", choices=NOISE_FAMILIES, default="normal")
    g.add_argument("--parent-count", choices=PARENT_COUNTS, default="uniform")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=".")
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("estimate", help="Stage 0 precision estimate and mask")
    e.add_argument("data")
    stage_flags(e)
    e.set_defaults(func=cmd_estimate)

    r = sub.add_parser("run", help="full pipeline")
    r.add_argument("data")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--amd", action="store_true")
    src.add_argument("--ordering-file")
    src.add_argument("--reverse-topo-with-truth", metavar="DAG_FILE")
    r.add_argument("--alpha2", type=float, default=0.01)
    r.add_argument("--cpdag-budget", type=float, default=60.0)
    stage_flags(r)
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="benchmark grid")
    b.add_argument("--config", help="key = value experiment file")
    b.add_argument("--seed", type=int, default=None)
    b.add_argument("--timeout", type=float, default=None)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--out", default="bench_out")
    b.set_defaults(func=cmd_bench)

    o = sub.add_parser("oracle", help="exact sparsest-permutation oracle for a small SEM")
    o.add_argument("sem")
    o.add_argument("--out", default=None)
    o.set_defaults(func=cmd_oracle)

    c = sub.add_parser("counterexample", help="search for a fill versus sparsity mismatch")
    c.add_argument("--p", type=int, default=5)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_counterexample)

    v = sub.add_parser("eval", help="compare an estimated DAG to the truth")
    v.add_argument("truth")
    v.add_argument("est")
    v.set_defaults(func=cmd_eval)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    np.set_printoptions(precision=6)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
