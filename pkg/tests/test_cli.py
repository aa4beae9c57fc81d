import json

import pytest

from bidlab.cli import main

TINY = {"n": 300, "d": 5, "n_dummy": 1, "families": ["richards"], "bias_levels": [0.0, 10.0],
        "repetitions": 1, "methods": ["naive", "logistic"]}


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "desk.json"
    path.write_text(json.dumps(TINY))
    return str(path)


@pytest.fixture
def generated(tmp_path, config):
    out = tmp_path / "data"
    assert main(["generate", "--config", config, "--theta", "0", "--family", "richards",
                 "--seed", "1", "--out-dir", str(out)]) == 0
    return out


def test_generate_is_deterministic(tmp_path, config, generated):
    again = tmp_path / "again"
    assert main(["generate", "--config", config, "--theta", "0", "--family", "richards",
                 "--seed", "1", "--out-dir", str(again)]) == 0
    for name in ("dataset.csv", "spec.json"):
        assert (generated / name).read_bytes() == (again / name).read_bytes()


def test_generate_honors_env_out_dir(tmp_path, config, monkeypatch):
    monkeypatch.setenv("BIDLAB_OUT_DIR", str(tmp_path / "env"))
    assert main(["generate", "--config", config]) == 0
    assert (tmp_path / "env" / "dataset.csv").exists()


def test_fit_evaluate_inspect(tmp_path, config, generated, capsys):
    models = tmp_path / "models"
    assert main(["fit", str(generated), "--method", "logistic", "--config", config,
                 "--out-dir", str(models)]) == 0
    capsys.readouterr()
    assert main(["evaluate", str(generated), str(models / "model_logistic.pkl"), "--config", config]) == 0
    header, row = capsys.readouterr().out.strip().splitlines()
    assert header == "method,mise,mise_r,pe,bs" and row.startswith("logistic,")
    assert main(["inspect-curve", str(generated), str(models / "model_logistic.pkl"), "--config", config,
                 "--row", "2"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "b,mu,mu_hat" and len(lines) == 66


def test_naive_metric_not_applicable(tmp_path, config, generated, capsys):
    models = tmp_path / "models"
    assert main(["fit", str(generated), "--method", "naive", "--out-dir", str(models)]) == 0
    model = str(models / "model_naive.pkl")
    assert main(["evaluate", str(generated), model, "--metric", "mise"]) == 1
    assert "metric not applicable" in capsys.readouterr().err
    assert main(["evaluate", str(generated), model, "--metric", "pe"]) == 0


def test_usage_errors(tmp_path, capsys):
    assert main([]) == 1
    assert main(["sweep", "--workers", "many"]) == 1
    assert main(["generate", "--family", "gompertz"]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"repetitions": 0}))
    assert main(["generate", "--config", str(bad), "--out-dir", str(tmp_path / "x")]) == 1


def test_runtime_failure_exit_code(tmp_path, capsys):
    assert main(["evaluate", str(tmp_path / "missing"), str(tmp_path / "none.pkl")]) == 2
    assert "evaluate" in capsys.readouterr().err


def test_sweep_outputs(tmp_path, config):
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", config, "--theta", "10", "--out-dir", str(out)]) == 0
    names = {p.name for p in out.iterdir()}
    assert {"results.csv", "run.log", "config.json", "richards_mise.md", "richards_pe.md",
            "richards_bs.md", "richards_mise_r.md"} <= names
    rows = (out / "results.csv").read_text().strip().splitlines()
    assert len(rows) == 3  # header + naive + logistic at the one overridden theta
    assert json.loads((out / "config.json").read_text())["bias_levels"] == [10.0]
    assert "wall" not in rows[0] and "logistic" in (out / "run.log").read_text()
    md = (out / "richards_mise.md").read_text()
    assert "| Naive pricing | n.a. |" in md
