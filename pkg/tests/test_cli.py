import json

import numpy as np
import pytest

import coresketch
from coresketch.cli import EXIT_BUDGET, EXIT_OK, EXIT_VALIDATION, main
from coresketch.data import WeightedDataset
from coresketch.io import load_dataset, write_csv

seed = 424242


def _run(*argv):
    return main([str(a) for a in argv])


def _report(path):
    return json.loads(path.read_text())


def test_gen_adversarial_exact_file(tmp_path, capsys):
    out = tmp_path / "adv.csv"
    assert _run("gen", "--kind", "adversarial", "--n", 4, "--out", out,
                "--seed", seed) == EXIT_OK
    assert out.read_text() == "x0\n0.0\n0.0\n0.0\n1.0\n"
    sidecar = _report(tmp_path / "adv.csv.json")
    assert sidecar["schema"] == "coreset-report/1"
    assert sidecar["kind"] == "gen"
    assert sidecar["provenance"]["seed"] == seed
    assert sidecar["provenance"]["version"] == coresketch.__version__
    sha = sidecar["provenance"]["config_sha256"]
    assert len(sha) == 64 and int(sha, 16) >= 0
    assert capsys.readouterr().out == ""  # report went to the sidecar


def test_gen_binary_format(tmp_path):
    out = tmp_path / "box.bin"
    assert _run("gen", "--kind", "uniform-box", "--n", 50, "--d", 3,
                "--out", out, "--seed", seed) == EXIT_OK
    ds = load_dataset(out)
    assert (ds.n, ds.d) == (50, 3)


def test_build_pipeline_and_report(tmp_path):
    data = tmp_path / "data.csv"
    _run("gen", "--kind", "gmm", "--n", 400, "--d", 2, "--components", 2,
         "--out", data, "--seed", seed)
    out = tmp_path / "coreset.csv"
    report_path = tmp_path / "build.json"
    assert _run("build", "--input", data, "--k", 2, "--m", 60, "--out", out,
                "--seed", seed, "--report", report_path) == EXIT_OK
    coreset = load_dataset(out)
    assert coreset.n <= 60
    assert np.all(coreset.weights > 0)
    assert float(np.sum(coreset.weights)) == pytest.approx(1.0, abs=0.25)
    rep = _report(report_path)
    assert rep["kind"] == "build"
    assert rep["coreset"]["m"] == 60
    assert rep["coreset"]["distribution"] == "sensitivity"
    assert rep["coreset"]["source_n"] == 400
    assert rep["sensitivity"]["alpha"] == 48.0
    assert rep["config"]["k"] == 2
    # sidecar written next to the artifact as well
    assert (tmp_path / "coreset.csv.json").exists()


def test_sensitivity_outputs(tmp_path):
    data = tmp_path / "adv.csv"
    _run("gen", "--kind", "adversarial", "--n", 100, "--out", data, "--seed", seed)
    out = tmp_path / "s.csv"
    assert _run("sensitivity", "--input", data, "--k", 1, "--out", out,
                "--seed", seed) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "index,s,cluster"
    assert len(lines) == 101
    rep = _report(tmp_path / "s.csv.json")
    assert rep["alpha"] == 32.0
    assert rep["beta"] == 1
    assert rep["total"] == pytest.approx(196.0, rel=1e-9)
    assert rep["n"] == 100
    assert rep["cluster_sizes"] == [100]
    # the per-point file round-trips: s-values sum to n * total
    svals = np.array([float(line.split(",")[1]) for line in lines[1:]])
    assert float(np.mean(svals)) == pytest.approx(rep["total"], rel=1e-9)


def test_solve_direct_report(tmp_path):
    data = tmp_path / "four.csv"
    write_csv(WeightedDataset([[0.0], [1.0], [9.0], [10.0]]), data,
              include_weights=False)
    report_path = tmp_path / "solve.json"
    assert _run("solve", "--input", data, "--k", 2, "--method", "ptas",
                "--seed", seed, "--report", report_path) == EXIT_OK
    rep = _report(report_path)
    assert rep["solver"] == "ptas"
    assert rep["objective_on_full"] == pytest.approx(0.25)
    assert sorted(c[0] for c in rep["centers"]) == [0.5, 9.5]
    assert rep["ratio"] is None
    assert rep["objective_on_coreset"] is None


def test_solve_via_coreset_report(tmp_path, capsys):
    data = tmp_path / "blobs.csv"
    _run("gen", "--kind", "gmm", "--n", 300, "--d", 2, "--components", 2,
         "--separation", 20, "--out", data, "--seed", seed)
    assert _run("solve", "--input", data, "--k", 2, "--via-coreset",
                "--m", 80, "--seed", seed) == EXIT_OK
    rep = json.loads(capsys.readouterr().out)
    assert rep["kind"] == "solve"
    assert rep["solver"] in ("ptas", "lloyd")
    assert rep["coreset_size"] <= 80
    assert rep["objective_on_coreset"] > 0
    assert rep["reference_objective_on_full"] > 0
    assert rep["ratio"] >= 1.0 - 1e-9
    assert len(rep["centers"]) == 2


def test_check_within_and_over_budget(tmp_path):
    data = tmp_path / "data.csv"
    _run("gen", "--kind", "uniform-box", "--n", 500, "--d", 2, "--out", data,
         "--seed", seed)
    coreset = tmp_path / "cs.csv"
    _run("build", "--input", data, "--k", 3, "--m", 200, "--out", coreset,
         "--seed", seed)
    report_path = tmp_path / "check.json"
    assert _run("check", "--full", data, "--coreset", coreset, "--k", 3,
                "--seed", seed, "--report", report_path,
                "--epsilon-budget", 10.0) == EXIT_OK
    rep = _report(report_path)
    assert rep["within_budget"] is True
    assert rep["suite_size"] == 81
    assert 0 <= rep["max_error"] <= 10.0
    assert rep["n_queries"] == 81

    assert _run("check", "--full", data, "--coreset", coreset, "--k", 3,
                "--seed", seed, "--report", report_path,
                "--epsilon-budget", 1e-12) == EXIT_BUDGET
    assert _report(report_path)["within_budget"] is False


def test_check_custom_suite_file(tmp_path):
    data = tmp_path / "d.csv"
    write_csv(WeightedDataset([[0.0], [1.0], [9.0], [10.0]]), data,
              include_weights=False)
    suite = tmp_path / "suite.json"
    suite.write_text(json.dumps({"k": 2, "queries": [[[0.5], [9.5]], [[0.0], [1.0]]],
                                 "sources": ["opt", "left"]}))
    report_path = tmp_path / "check.json"
    assert _run("check", "--full", data, "--coreset", data, "--k", 2,
                "--suite", suite, "--seed", seed,
                "--report", report_path) == EXIT_OK
    rep = _report(report_path)
    assert rep["max_error"] == 0.0
    assert rep["suite_size"] == 2
    assert rep["within_budget"] is None


def test_stream_binary_counter_report(tmp_path):
    data = tmp_path / "stream.csv"
    _run("gen", "--kind", "uniform-box", "--n", 300, "--d", 2, "--out", data,
         "--seed", seed)
    out = tmp_path / "sketch.csv"
    assert _run("stream", "--input", data, "--k", 2, "--block-size", 100,
                "--m", 40, "--out", out, "--seed", seed) == EXIT_OK
    rep = _report(tmp_path / "sketch.csv.json")
    assert rep["points_seen"] == 300
    assert rep["blocks_built"] == 3
    assert rep["occupied_levels"] == [0, 1]
    assert rep["max_compress_depth"] == 1
    assert rep["error_budget"] == pytest.approx(0.1)
    assert rep["block_m"] == 40
    assert load_dataset(out).n == rep["coreset_size"]


def test_distribute_report_accounting(tmp_path):
    data = tmp_path / "data.csv"
    _run("gen", "--kind", "uniform-box", "--n", 300, "--d", 2, "--out", data,
         "--seed", seed)
    out = tmp_path / "merged.csv"
    assert _run("distribute", "--input", data, "--k", 2, "--workers", 3,
                "--m", 50, "--out", out, "--seed", seed) == EXIT_OK
    rep = _report(tmp_path / "merged.csv.json")
    assert rep["workers"] == 3
    assert rep["partition"] == "rr"
    assert rep["empty_workers"] == []
    assert rep["merged_size"] == sum(rep["worker_sizes"])
    for size, nbytes in zip(rep["worker_sizes"], rep["bytes_per_worker"]):
        assert nbytes == 21 + 8 * size * 3
    assert rep["total_bytes"] == sum(rep["bytes_per_worker"])
    assert "wall_seconds" not in rep
    assert load_dataset(out).n == rep["merged_size"]


def test_bench_compares_distributions(tmp_path):
    data = tmp_path / "adv.csv"
    _run("gen", "--kind", "adversarial", "--n", 500, "--out", data, "--seed", seed)
    report_path = tmp_path / "bench.json"
    assert _run("bench", "--input", data, "--k", 1, "--m", 50, "--trials", 3,
                "--seed", seed, "--report", report_path) == EXIT_OK
    rep = _report(report_path)
    names = [r["distribution"] for r in rep["results"]]
    assert names == ["sensitivity", "uniform"]
    for r in rep["results"]:
        assert r["trials"] == 3
        assert len(r["per_trial"]) == 3
        assert set(r["max_error"]) == {"mean", "median", "min", "max"}
    # the whole point: importance sampling beats uniform on the outlier set
    sens, unif = rep["results"]
    assert sens["max_error"]["mean"] < unif["max_error"]["mean"]


def test_bench_rejects_unknown_distribution(tmp_path, capsys):
    data = tmp_path / "adv.csv"
    _run("gen", "--kind", "adversarial", "--n", 50, "--out", data, "--seed", seed)
    assert _run("bench", "--input", data, "--k", 1, "--m", 10,
                "--compare", "sensitivity,magic", "--seed", seed) == EXIT_VALIDATION
    assert "error:" in capsys.readouterr().err


def test_missing_input_is_validation_error(tmp_path, capsys):
    assert _run("build", "--input", tmp_path / "nope.csv", "--k", 2, "--m", 10,
                "--out", tmp_path / "o.csv") == EXIT_VALIDATION
    assert "error:" in capsys.readouterr().err


def test_bad_parameter_is_validation_error(tmp_path, capsys):
    out = tmp_path / "a.csv"
    assert _run("gen", "--kind", "adversarial", "--n", 1, "--out", out,
                "--seed", seed) == EXIT_VALIDATION
    assert "adversarial needs n >= 2" in capsys.readouterr().err


def test_usage_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as info:
        _run("frobnicate")
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        _run("build", "--k", 2)  # --input and --out are required
    assert info.value.code == 2
    capsys.readouterr()


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as info:
        _run("--version")
    assert info.value.code == 0
    assert coresketch.__version__ in capsys.readouterr().out


def test_seed_env_fallback(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("CORESET_SEED", "777")
    out = tmp_path / "a.csv"
    _run("gen", "--kind", "adversarial", "--n", 4, "--out", out)
    assert _report(tmp_path / "a.csv.json")["provenance"]["seed"] == 777


def test_explicit_seed_overrides_env(tmp_path, monkeypatch):
    monkeypatch.setenv("CORESET_SEED", "777")
    out = tmp_path / "a.csv"
    _run("gen", "--kind", "adversarial", "--n", 4, "--out", out, "--seed", 5)
    assert _report(tmp_path / "a.csv.json")["provenance"]["seed"] == 5


def _pipeline(workdir, monkeypatch, threads):
    """gen -> build -> stream -> distribute with fixed relative paths."""
    monkeypatch.chdir(workdir)
    _run("gen", "--kind", "gmm", "--n", 600, "--d", 2, "--components", 3,
         "--out", "data.csv", "--seed", seed, "--threads", threads)
    _run("build", "--input", "data.csv", "--k", 3, "--m", 80,
         "--out", "coreset.csv", "--seed", seed, "--threads", threads)
    _run("stream", "--input", "data.csv", "--k", 3, "--block-size", 200,
         "--m", 60, "--out", "sketch.csv", "--seed", seed, "--threads", threads)
    _run("distribute", "--input", "data.csv", "--k", 3, "--workers", 4,
         "--m", 60, "--out", "merged.csv", "--seed", seed, "--threads", threads)
    return {p.name: p.read_bytes() for p in sorted(workdir.iterdir())}


def test_rerun_reproduces_every_byte(tmp_path, monkeypatch):
    a = tmp_path / "run_a"
    b = tmp_path / "run_b"
    c = tmp_path / "run_c"
    for d in (a, b, c):
        d.mkdir()
    first = _pipeline(a, monkeypatch, threads=1)
    second = _pipeline(b, monkeypatch, threads=1)
    threaded = _pipeline(c, monkeypatch, threads=8)
    assert first.keys() == second.keys() == threaded.keys()
    for name in first:
        assert first[name] == second[name], name
        assert first[name] == threaded[name], name
