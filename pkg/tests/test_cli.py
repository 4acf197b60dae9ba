"""CLI pipelines, exit codes, determinism."""

import json

import numpy as np
import pytest

import eulerlu as el
from eulerlu import graph_io, oracle
from eulerlu.cli import main


def run(argv):
    return main(argv)


def strip_timing(payload):
    payload = dict(payload)
    payload.pop("timing", None)
    return payload


def test_gen_factor_solve_pipeline(tmp_path):
    g = tmp_path / "g.txt"
    fj = tmp_path / "f.json"
    x = tmp_path / "x.txt"
    assert run(["gen", "--kind", "cycle", "--n", "8", "--out", str(g),
                "--json-out", str(tmp_path / "gen.json")]) == 0
    assert run(["factor", "--graph", str(g), "--mode", "exact",
                "--out", str(fj), "--json-out", str(tmp_path / "fs.json")]) == 0
    rhs = tmp_path / "b.txt"
    rhs.write_text("1\n-1\n0\n0\n0\n0\n0\n0\n")
    assert run(["solve", "--graph", str(g), "--factor", str(fj),
                "--rhs", str(rhs), "--mode", "exact", "--out", str(x),
                "--json-out", str(tmp_path / "sr.json")]) == 0
    L = graph_io.load_graph(g)
    got = graph_io.read_vector(x)
    b = graph_io.read_vector(rhs)
    expect = oracle.pinv(L.to_dense()) @ b
    assert np.abs(got - expect).max() <= 1e-8
    report = json.loads((tmp_path / "sr.json").read_text())
    assert report["converged"] and report["iterations"] == 1


def test_outputs_deterministic_for_same_argv(tmp_path):
    g = tmp_path / "g.txt"
    run(["gen", "--kind", "permutation-sum", "--n", "24", "--edges", "96",
         "--seed", "5", "--out", str(g)])
    payloads = []
    for tag in ("a", "b"):
        fj = tmp_path / f"f_{tag}.json"
        sj = tmp_path / f"s_{tag}.json"
        assert run(["factor", "--graph", str(g), "--seed", "9",
                    "--samples", "4", "--out", str(fj),
                    "--json-out", str(sj)]) == 0
        stats = strip_timing(json.loads(sj.read_text()))
        stats.pop("factorization")
        fact = json.loads(fj.read_text())
        fact["stats"].pop("build_seconds")
        payloads.append((stats, fact))
    assert payloads[0] == payloads[1]


def test_gen_deterministic_bytes(tmp_path):
    a = tmp_path / "a.txt"
    b = tmp_path / "b.txt"
    run(["gen", "--n", "30", "--seed", "3", "--out", str(a)])
    run(["gen", "--n", "30", "--seed", "3", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_env_seed_override(tmp_path, monkeypatch):
    a = tmp_path / "a.txt"
    b = tmp_path / "b.txt"
    run(["gen", "--n", "16", "--seed", "1", "--out", str(a)])
    monkeypatch.setenv("EULERLU_SEED", "2")
    run(["gen", "--n", "16", "--seed", "1", "--out", str(b)])
    assert a.read_bytes() != b.read_bytes()


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as info:
        main(["gen"])  # missing required --n/--out
    assert info.value.code == 2


def test_validation_error_exit_code(tmp_path, capsys):
    g = tmp_path / "bad.txt"
    g.write_text("0 1 1.0\n")  # not Eulerian
    code = run(["factor", "--graph", str(g), "--out", str(tmp_path / "f.json")])
    assert code == 3
    out = json.loads(capsys.readouterr().out)
    assert out["error"] == "NotEulerianError"
    assert not (tmp_path / "f.json").exists()


def test_numerical_error_exit_code(tmp_path, capsys):
    g = tmp_path / "g.txt"
    run(["gen", "--n", "48", "--edges", "200", "--seed", "2", "--out", str(g),
         "--json-out", str(tmp_path / "gen.json")])
    capsys.readouterr()
    code = run(["solve", "--graph", str(g), "--rhs", str(_rhs(tmp_path, 48)),
                "--samples", "2", "--max-iters", "1", "--eps-solve", "1e-13",
                "--out", str(tmp_path / "x.txt")])
    assert code == 4
    out = json.loads(capsys.readouterr().out)
    assert out["error"] == "NotConvergedError"


def _rhs(tmp_path, n):
    rng = np.random.default_rng(0)
    b = rng.normal(size=n)
    b -= b.mean()
    path = tmp_path / "b.txt"
    graph_io.write_vector(b, path)
    return path


def test_solve_all_ones_rhs_warns_and_zeroes(tmp_path, capsys):
    g = tmp_path / "g.txt"
    run(["gen", "--kind", "cycle", "--n", "6", "--out", str(g)])
    rhs = tmp_path / "b.txt"
    rhs.write_text("1\n" * 6)
    x = tmp_path / "x.txt"
    assert run(["solve", "--graph", str(g), "--rhs", str(rhs), "--mode",
                "exact", "--out", str(x)]) == 0
    err = capsys.readouterr().err
    assert "projected right-hand side" in err
    assert np.abs(graph_io.read_vector(x)).max() == 0.0


def test_check_appendix_suite(tmp_path):
    out = tmp_path / "check.json"
    assert run(["check", "--suite", "appendix", "--trials", "40",
                "--seed", "1", "--json-out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["passed"]
    assert set(payload["suites"]) == {"appendix"}


def test_check_sve_and_rcdd(tmp_path):
    out = tmp_path / "check.json"
    assert run(["check", "--suite", "sve", "--trials", "200",
                "--json-out", str(out)]) == 0
    assert json.loads(out.read_text())["passed"]
    assert run(["check", "--suite", "rcdd", "--trials", "30",
                "--json-out", str(out)]) == 0
    assert json.loads(out.read_text())["passed"]


def test_check_factorization_on_instance(tmp_path):
    g = tmp_path / "g.txt"
    run(["gen", "--n", "32", "--edges", "160", "--seed", "4", "--out", str(g)])
    out = tmp_path / "check.json"
    assert run(["check", "--suite", "factorization", "--graph", str(g),
                "--samples", "8", "--json-out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["suites"]["factorization"]["eps"] <= 1.0


def test_bench_writes_csv(tmp_path):
    csv = tmp_path / "bench.csv"
    assert run(["bench", "--sizes", "64,96", "--edges-per-vertex", "5",
                "--samples", "4", "--solve-iters", "30",
                "--csv", str(csv)]) == 0
    lines = csv.read_text().strip().splitlines()
    assert lines[0].startswith("n,m,build_seconds")
    assert len(lines) == 3
    assert lines[1].split(",")[0] == "64"


def test_matrix_market_pipeline(tmp_path):
    g = tmp_path / "g.mtx"
    assert run(["gen", "--kind", "cycle", "--n", "6", "--out", str(g)]) == 0
    fj = tmp_path / "f.json"
    assert run(["factor", "--graph", str(g), "--mode", "exact",
                "--out", str(fj)]) == 0
    fact = el.LUFactorization.load(fj)
    assert fact.n == 6
