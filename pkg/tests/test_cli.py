import json

import numpy as np
from click.testing import CliRunner

from pgfl.cli import cli
from pgfl.graph import chain_graph, write_graph_file
from pgfl.matrixio import write_matrix_csv


def run(*args):
    return CliRunner().invoke(cli, list(args))


def test_simulate_writes_artifacts(tmp_path):
    out = tmp_path / "sim"
    res = run("simulate", "--model", "sbm2", "--n", "30", "--seed", "1",
              "--out", str(out))
    assert res.exit_code == 0
    A = np.loadtxt(out / "A.csv", delimiter=",")
    P0 = np.loadtxt(out / "P0.csv", delimiter=",")
    assert A.shape == (30, 30)
    assert P0.shape == (30, 30)
    cfg = json.loads((out / "config.json").read_text())
    assert cfg["model"] == "sbm2"


def test_simulate_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run("simulate", "--model", "rank1", "--n", "20", "--seed", "3", "--out", str(a))
    run("simulate", "--model", "rank1", "--n", "20", "--seed", "3", "--out", str(b))
    assert (a / "A.csv").read_text() == (b / "A.csv").read_text()


def test_simulate_unknown_model_exit_2(tmp_path):
    res = run("simulate", "--model", "bogus", "--n", "20",
              "--out", str(tmp_path / "x"))
    assert res.exit_code == 2


def test_denoise_flow(tmp_path):
    rng = np.random.default_rng(5)
    n = 12
    A = rng.random((n, n))
    mpath = tmp_path / "A.csv"
    gpath = tmp_path / "g.txt"
    write_matrix_csv(mpath, A)
    write_graph_file(gpath, chain_graph(n))
    out = tmp_path / "out"
    res = run("denoise", "--matrix", str(mpath), "--graph", str(gpath),
              "--lambda", "0.5", "--out", str(out))
    assert res.exit_code == 0
    P = np.loadtxt(out / "P_hat.csv", delimiter=",")
    assert P.shape == (n, n)
    obj = json.loads((out / "objective.json").read_text())
    assert obj["converged"] is True
    lines = (out / "residuals.csv").read_text().strip().splitlines()
    assert lines[0] == "iteration,residual,objective"
    assert len(lines) == obj["iterations"] + 1


def test_denoise_dimension_mismatch_exit_2(tmp_path):
    write_matrix_csv(tmp_path / "A.csv", np.zeros((4, 4)))
    write_graph_file(tmp_path / "g.txt", chain_graph(5))
    res = run("denoise", "--matrix", str(tmp_path / "A.csv"),
              "--graph", str(tmp_path / "g.txt"), "--out", str(tmp_path / "o"))
    assert res.exit_code == 2


def test_denoise_missing_file_exit_4(tmp_path):
    write_graph_file(tmp_path / "g.txt", chain_graph(3))
    res = run("denoise", "--matrix", str(tmp_path / "missing.csv"),
              "--graph", str(tmp_path / "g.txt"), "--out", str(tmp_path / "o"))
    assert res.exit_code == 4


def test_denoise_corrupt_graph_exit_4(tmp_path):
    write_matrix_csv(tmp_path / "A.csv", np.zeros((3, 3)))
    (tmp_path / "g.txt").write_text("not a graph\n")
    res = run("denoise", "--matrix", str(tmp_path / "A.csv"),
              "--graph", str(tmp_path / "g.txt"), "--out", str(tmp_path / "o"))
    assert res.exit_code == 4


def test_estimate_flow_and_artifacts(tmp_path):
    sim = tmp_path / "sim"
    run("simulate", "--model", "sbm2", "--n", "40", "--seed", "2",
        "--out", str(sim))
    out = tmp_path / "est"
    res = run("estimate", "--adjacency", str(sim / "A.csv"), "--k", "2",
              "--lambda", "0.5", "--out", str(out))
    assert res.exit_code == 0
    P = np.loadtxt(out / "P_hat.csv", delimiter=",")
    assert P.min() >= 0.0 and P.max() <= 1.0
    seg = json.loads((out / "segments.json").read_text())
    assert seg["num_segments"] >= 1
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["q_components"] >= 1


def test_estimate_rejects_nonbinary_exit_2(tmp_path):
    write_matrix_csv(tmp_path / "A.csv", np.full((5, 5), 0.5))
    res = run("estimate", "--adjacency", str(tmp_path / "A.csv"),
              "--out", str(tmp_path / "o"))
    assert res.exit_code == 2


def test_segment_flow(tmp_path):
    n = 6
    write_matrix_csv(tmp_path / "P.csv", np.full((n, n), 0.3))
    write_graph_file(tmp_path / "g.txt", chain_graph(n))
    out = tmp_path / "seg"
    res = run("segment", "--matrix", str(tmp_path / "P.csv"),
              "--graph", str(tmp_path / "g.txt"), "--out", str(out))
    assert res.exit_code == 0
    seg = json.loads((out / "segments.json").read_text())
    assert seg["num_segments"] == 1


def test_benchmark_small_grid(tmp_path):
    cfg = {
        "models": ["sbm2"], "n": [30], "seeds": [0, 1],
        "estimators": ["grand_mean", "usvt"],
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "bench"
    res = run("benchmark", "--config", str(cfg_path), "--out", str(out))
    assert res.exit_code == 0
    rows = (out / "results.csv").read_text().strip().splitlines()
    assert len(rows) == 1 + 4  # header + 2 seeds x 2 estimators
    agg = (out / "aggregate.csv").read_text().strip().splitlines()
    assert agg[0].startswith("estimator,")
    # first-seed matrices saved for rendering
    assert (out / "matrices" / "sbm2_n30" / "P0.csv").exists()
    assert (out / "matrices" / "sbm2_n30" / "grand_mean.csv").exists()


def test_benchmark_bad_config_exit_2(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"models": ["sbm2"]}))
    res = run("benchmark", "--config", str(cfg_path), "--out", str(tmp_path / "o"))
    assert res.exit_code == 2


def test_benchmark_malformed_json_exit_4(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text("{not json")
    res = run("benchmark", "--config", str(cfg_path), "--out", str(tmp_path / "o"))
    assert res.exit_code == 4
