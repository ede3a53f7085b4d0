import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from purecd.cli import main
from purecd.metrics import TRACE_COLUMNS
from purecd.sparse import load_libsvm


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "small.libsvm"
    assert main(["gen", "--n", "40", "--m", "60", "--density", "0.1", "--seed", "3",
                 "--out", str(path)]) == 0
    return path


def read_rows(path, drop_wall=True):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if drop_wall:
        k = rows[0].index("wall_ms")
        rows = [r[:k] + r[k + 1:] for r in rows]
    return rows


def test_gen_density(tmp_path):
    out = tmp_path / "gen.libsvm"
    assert main(["gen", "--n", "1000", "--m", "500", "--density", "0.01", "--seed", "1",
                 "--out", str(out)]) == 0
    A, labels = load_libsvm(out)
    assert abs(A.nnz - 5000) <= 0.05 * 5000
    assert labels.size == 500


def test_solve_writes_trace(dataset, tmp_path):
    out = tmp_path / "trace.csv"
    summary = tmp_path / "summary.json"
    code = main(["solve", "--data", str(dataset), "--problem", "lasso", "--lambda", "0.1",
                 "--solver", "purecd", "--gamma", "0.95", "--iters", "2e3", "--seed", "7",
                 "--out", str(out), "--summary", str(summary)])
    assert code == 0
    rows = read_rows(out, drop_wall=False)
    assert tuple(rows[0]) == TRACE_COLUMNS
    assert len(rows) > 2
    assert int(rows[-1][0]) == 2000
    obj = np.array([float(r[2]) for r in rows[1:]])
    assert np.isfinite(obj).all()
    info = json.loads(summary.read_text())
    assert info["iterations"] == 2000
    assert info["config"]["seed"] == 7
    assert open(out, "rb").read().count(b"\r") == 0


@pytest.mark.parametrize("solver", ["purecd", "vu-condat", "tripd-bc"])
@pytest.mark.parametrize("problem", ["lasso", "ridge"])
def test_objective_finite(dataset, tmp_path, solver, problem):
    out = tmp_path / "t.csv"
    assert main(["solve", "--data", str(dataset), "--problem", problem, "--solver", solver,
                 "--epochs", "5", "--out", str(out)]) == 0
    rows = read_rows(out)
    assert all(np.isfinite(float(r[2])) for r in rows[1:])


def test_solve_deterministic(dataset, tmp_path):
    args = ["solve", "--data", str(dataset), "--iters", "3000", "--checkpoint-every", "500",
            "--seed", "11"]
    assert main(args + ["--out", str(tmp_path / "a.csv")]) == 0
    assert main(args + ["--out", str(tmp_path / "b.csv")]) == 0
    assert read_rows(tmp_path / "a.csv") == read_rows(tmp_path / "b.csv")
    assert main(args[:-1] + ["12", "--out", str(tmp_path / "c.csv")]) == 0
    assert read_rows(tmp_path / "a.csv") != read_rows(tmp_path / "c.csv")


def test_config_file_and_override(dataset, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"data": str(dataset), "problem": "ridge", "lambda": 0.5,
                               "iters": 100, "checkpoint_every": 50}))
    out = tmp_path / "t.csv"
    summary = tmp_path / "s.json"
    assert main(["solve", "--config", str(cfg), "--iters", "200", "--out", str(out),
                 "--summary", str(summary)]) == 0
    info = json.loads(summary.read_text())
    assert info["config"]["problem"] == "ridge"
    assert info["config"]["lambda_"] == 0.5
    assert info["iterations"] == 200
    assert [r[0] for r in read_rows(out)[1:]] == ["50", "100", "150", "200"]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"colour": "red"}))
    assert main(["solve", "--config", str(bad)]) == 2


def test_check_steps(dataset, capsys):
    assert main(["check-steps", "--data", str(dataset), "--gamma", "0.99"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "ADMISSIBLE"
    assert "tightest coordinate:" in out
    assert "ratio: 0.990000" in out


def test_error_exit_codes(tmp_path):
    assert main(["solve", "--data", str(tmp_path / "missing.libsvm")]) != 0
    assert main(["solve"]) != 0
    assert main(["solve", "--bogus"]) == 2
    broken = tmp_path / "broken.libsvm"
    broken.write_text("1 2:1 1:3\n")
    assert main(["solve", "--data", str(broken)]) != 0


def test_sweep(dataset, tmp_path):
    outdir = tmp_path / "sweep"
    assert main(["sweep", "--data", str(dataset), "--solvers", "purecd", "vu-condat",
                 "--seeds", "1", "2", "--epochs", "3", "--workers", "1",
                 "--outdir", str(outdir)]) == 0
    index = json.loads((outdir / "index.json").read_text())
    assert len(index) == 4
    assert len({e["hash"] for e in index}) == 4
    for entry in index:
        rows = read_rows(outdir / (entry["hash"] + ".csv"))
        assert tuple(rows[0]) == tuple(c for c in TRACE_COLUMNS if c != "wall_ms")


def test_module_entry_point(dataset):
    proc = subprocess.run(
        [sys.executable, "-m", "purecd", "check-steps", "--data", str(dataset)],
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("ADMISSIBLE")


def test_sweep_pool_matches_serial(dataset, tmp_path):
    args = ["sweep", "--data", str(dataset), "--seeds", "1", "2", "--iters", "500"]
    assert main(args + ["--workers", "1", "--outdir", str(tmp_path / "serial")]) == 0
    assert main(args + ["--workers", "2", "--outdir", str(tmp_path / "pool")]) == 0
    for entry in json.loads((tmp_path / "serial" / "index.json").read_text()):
        name = entry["hash"] + ".csv"
        assert read_rows(tmp_path / "serial" / name) == read_rows(tmp_path / "pool" / name)
