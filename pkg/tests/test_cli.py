import json
import subprocess
import sys

import numpy as np
import pytest

from pfcohesive import cli


def _csv(path):
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def test_forward_dugdale(tmp_path):
    out = tmp_path / "g.csv"
    assert cli.run(["forward", "--model", "catalog:dugdale", "--k", "1", "--s-grid", "0:2:0.05", "--out", str(out)]) == 0
    data = _csv(out)
    assert data.shape == (41, 4)
    assert np.allclose(data[:, 1], np.minimum(data[:, 0], 1.0), atol=1e-3)
    man = json.loads((tmp_path / "g_manifest.json").read_text())
    assert man["command"] == "forward"
    assert "timing_s" not in json.dumps(man)


def test_forward_extras(tmp_path):
    out = tmp_path / "lin.csv"
    code = cli.run(["forward", "--model", "catalog:linear", "--s-grid", "0:1:0.25", "--out", str(out), "--phi",
                    "--profiles", "0.5,0.5;0.5,0.7", "--gnuplot-script"])
    assert code == 0
    for name in ("lin_phi.csv", "lin_profile0.csv", "lin_profile1.csv", "lin.gp"):
        assert (tmp_path / name).exists()
    prof = _csv(tmp_path / "lin_profile1.csv")
    assert prof[0, 1] == pytest.approx(0.0) and prof[-1, 1] == pytest.approx(0.7)


def test_forward_model_file(tmp_path):
    spec = tmp_path / "m.json"
    spec.write_text(json.dumps({"fhat": "t^2", "Q": "t^2", "omega": "t^2"}))
    out = tmp_path / "g.csv"
    assert cli.run(["forward", "--model", str(spec), "--s-grid", "0:0.5:0.25", "--out", str(out)]) == 0
    man = json.loads((tmp_path / "g_manifest.json").read_text())
    assert man["diagnostics"]["two_psi1"] == pytest.approx(1.0)


def test_reconstruct_linear(tmp_path):
    out = tmp_path / "r"
    assert cli.run(["reconstruct", "--target", "catalog:linear", "--k", "1", "--fix", "khat=t^2", "--out", str(out)]) == 0
    data = _csv(out / "omega.csv")
    t = data[:, 0]
    assert np.allclose(data[:, 1], (1 - t * t) / np.pi ** 2, atol=1e-9)
    assert (out / "phi.csv").exists()


def test_reconstruct_is_reproducible(tmp_path):
    out = tmp_path / "r"
    argv = ["reconstruct", "--target", "catalog:hyperbolic", "--fix", "khat=t^2", "--out", str(out)]
    assert cli.run(argv) == 0
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    assert cli.run(argv) == 0
    assert {p.name: p.read_bytes() for p in out.iterdir()} == first


def test_reconstruct_dugdale_is_rejected(tmp_path, capsys):
    code = cli.run(["reconstruct", "--target", "catalog:dugdale", "--fix", "khat=t^2", "--out", str(tmp_path)])
    assert code == cli.EXIT_HYPOTHESIS
    assert "dugdale" in capsys.readouterr().err.lower()


def test_reconstruct_incompatible_omega(tmp_path):
    code = cli.run(["reconstruct", "--target", "catalog:linear", "--fix", "omega=t^2", "--out", str(tmp_path)])
    assert code == cli.EXIT_HYPOTHESIS


def test_oracle_command(tmp_path):
    out = tmp_path / "o.csv"
    code = cli.run(["oracle", "--model", "catalog:linear", "--s", "0.3", "--nodes", "400", "--m-grid", "20",
                    "--out", str(out)])
    assert code == 0
    row = _csv(out)[0]
    assert row[1] == pytest.approx(0.255, rel=1e-2)


def test_validate_subset(tmp_path, capsys):
    report = tmp_path / "report.json"
    assert cli.run(["validate", "--suite", "acceptance", "--criteria", "2,3", "--report", str(report)]) == 0
    data = json.loads(report.read_text())
    assert data["all_passed"] and [c["id"] for c in data["criteria"]] == ["2", "3"]
    assert capsys.readouterr().out.count("PASS") == 2


def test_validate_reports_failure(tmp_path):
    report = tmp_path / "report.json"
    assert cli.run(["validate", "--suite", "acceptance", "--criteria", "9b", "--report", str(report)]) == cli.EXIT_FAILED


def test_catalog_commands(capsys):
    assert cli.run(["catalog", "list"]) == 0
    assert "logarithmic" in capsys.readouterr().out
    assert cli.run(["catalog", "show", "bilinear"]) == 0
    assert json.loads(capsys.readouterr().out)["parameters"]["b"] == pytest.approx(1.25)


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"model": "catalog:linear", "s_grid": "0:1:0.5", "k": 2.0}))
    out = tmp_path / "g.csv"
    assert cli.run(["forward", "--config", str(cfg), "--k", "1", "--out", str(out)]) == 0
    assert _csv(out)[1, 1] == pytest.approx(0.375)


@pytest.mark.parametrize("argv", [
    [],
    ["forward", "--model", "catalog:linear"],
    ["forward", "--model", "catalog:nope", "--s-grid", "0:1:0.5", "--out", "x.csv"],
    ["forward", "--model", "catalog:linear", "--s-grid", "1:0:0.5", "--out", "x.csv"],
    ["forward", "--model", "missing.json", "--s-grid", "0:1:0.5", "--out", "x.csv"],
    ["forward", "--model", "catalog:linear", "--pair", "7", "--s-grid", "0:1:0.5", "--out", "x.csv"],
    ["reconstruct", "--target", "catalog:linear", "--fix", "t^2", "--out", "x"],
    ["reconstruct", "--target", "catalog:linear", "--fix", "khat=import(t)", "--out", "x"],
    ["validate", "--suite", "other"],
    ["catalog", "show"],
    ["frobnicate"],
])
def test_usage_errors(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert cli.run(argv) == cli.EXIT_USAGE


def test_unknown_config_key(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"model": "catalog:linear", "bogus": 1}))
    assert cli.run(["forward", "--config", str(cfg), "--s-grid", "0:1:0.5", "--out", "g.csv"]) == cli.EXIT_USAGE


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "pfcohesive", "catalog", "list"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.split() == ["dugdale", "linear", "bilinear", "hyperbolic", "quad_hyperbolic", "exponential",
                                   "logarithmic"]
