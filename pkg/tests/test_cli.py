import json

from resp_scope import io
from resp_scope.cli import main


def test_generate_estimate_run_eval(tmp_path, capsys):
    out = tmp_path / "g"
    assert main(["generate", "--p", "12", "--d", "1", "--n", "240", "--seed", "3", "--out", str(out)]) == 0
    assert io.read_sem(out / "sem.txt").p == 12
    est = tmp_path / "e"
    assert main(["estimate", str(out / "data.csv"), "--boot-reps", "20", "--out", str(est)]) == 0
    assert json.loads((est / "estimate.json").read_text())["lambda"] > 0
    run = tmp_path / "r"
    assert main(["run", str(out / "data.csv"), "--amd", "--boot-reps", "20", "--out", str(run)]) == 0
    audit = json.loads((run / "audit.json").read_text())
    assert audit["selected"] == 0 and (run / "refit.json").exists()
    run2 = tmp_path / "r2"
    assert main(["run", str(out / "data.csv"), "--reverse-topo-with-truth", str(out / "dag.txt"),
                 "--boot-reps", "20", "--out", str(run2)]) == 0
    io.write_orderings(tmp_path / "ord.txt", [io.read_dag(out / "dag.txt").topo.reversed()])
    assert main(["run", str(out / "data.csv"), "--ordering-file", str(tmp_path / "ord.txt"),
                 "--boot-reps", "20", "--out", str(tmp_path / "r3")]) == 0
    capsys.readouterr()
    assert main(["eval", str(out / "dag.txt"), str(run / "edges.txt")]) == 0
    res = json.loads(capsys.readouterr().out)
    assert 0 <= res["f1"] <= 1 and res["shd"] >= 0


def test_oracle_counterexample_bench(tmp_path, capsys):
    gen = tmp_path / "g"
    main(["generate", "--p", "5", "--d", "2", "--seed", "1", "--out", str(gen)])
    assert main(["oracle", str(gen / "sem.txt"), "--out", str(tmp_path / "o")]) == 0
    assert "smr" in json.loads((tmp_path / "o" / "oracle.json").read_text())
    assert main(["counterexample", "--p", "5"]) == 0
    assert "nnz(L)=11" in capsys.readouterr().out
    assert main(["counterexample", "--p", "3"]) == 1
    cfg = tmp_path / "exp.txt"
    cfg.write_text("p_grid = 15\nreps = 1\nboot_reps = 20\nmetrics = f1, nshd\n")
    out = tmp_path / "b"
    assert main(["bench", "--config", str(cfg), "--seed", "2", "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["seed"] == 2
    assert (out / "plot_f1.csv").read_text().startswith("p,mean_f1")
