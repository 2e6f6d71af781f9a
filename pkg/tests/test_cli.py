import json

import numpy as np
import pytest

from ssv import cli, fixtures


def write_fixture(tmp_path, name):
    path = tmp_path / f"{name}.json"
    path.write_text(fixtures.fixture_text(name))
    return str(path)


def test_nu_command(tmp_path, capsys):
    path = write_fixture(tmp_path, "twoscalar")
    code = cli.main(["nu", path])
    out = capsys.readouterr().out
    assert code == 0
    assert "nu = 2.000000000" in out


def test_nu_command_json(tmp_path, capsys):
    path = write_fixture(tmp_path, "twoscalar")
    code = cli.main(["nu", path, "--json"])
    out = json.loads(capsys.readouterr().out)
    assert code == 0
    assert out["nu"] == pytest.approx(2.0, abs=1e-6)
    assert out["d_opt"][0] == pytest.approx(0.25, abs=1e-4)
    assert out["d_opt"][-1] == 1.0
    assert out["gap_estimate"] >= 0.0


def test_check_exit_codes(tmp_path):
    assert cli.main(["check", write_fixture(tmp_path, "twoscalar")]) == 0
    assert cli.main(["check", write_fixture(tmp_path, "counterexample1")]) == 1
    assert cli.main(["check", write_fixture(tmp_path, "counterexample6")]) == 3


def test_check_json_equal(tmp_path, capsys):
    path = write_fixture(tmp_path, "twoscalar")
    code = cli.main(["check", path, "--json"])
    out = json.loads(capsys.readouterr().out)
    assert code == 0
    assert out["verdict"] == "equal"
    assert out["mu_lower"] == pytest.approx(out["nu"])
    delta = np.array([[complex(re, im) for re, im in row]
                      for row in out["delta"]])
    assert out["delta_norm"] * out["nu"] == pytest.approx(1.0, abs=1e-6)
    m = fixtures.load("twoscalar").matrix
    smin = np.linalg.svd(np.eye(2) - m @ delta, compute_uv=False)[-1]
    assert smin <= 1e-6


def test_check_json_gap(tmp_path, capsys):
    path = write_fixture(tmp_path, "counterexample1")
    code = cli.main(["check", path, "--json"])
    out = json.loads(capsys.readouterr().out)
    assert code == 1
    assert out["verdict"] == "gap"
    assert "delta" not in out


def test_parse_error_exit(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(SystemExit) as exc:
        cli.main(["check", str(bad)])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["nu", str(tmp_path / "missing.json")])
    assert exc.value.code == 2


def test_negative_tolerance_rejected(tmp_path, capsys):
    path = write_fixture(tmp_path, "twoscalar")
    assert cli.main(["nu", path, "--tol", "-1"]) == 2


def test_mu_lower_command(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("SSV_SEED", "7")
    path = write_fixture(tmp_path, "identity3")
    code = cli.main(["mu-lower", path, "--seeds", "4", "--json"])
    out = json.loads(capsys.readouterr().out)
    assert code == 0
    assert out["mu_lower"] == pytest.approx(1.0, abs=1e-9)
    assert out["seeds"] == 4


def test_mu_lower_seed_env(tmp_path, capsys, monkeypatch):
    path = write_fixture(tmp_path, "counterexample1")
    monkeypatch.setenv("SSV_SEED", "11")
    cli.main(["mu-lower", path, "--seeds", "4", "--json"])
    first = capsys.readouterr().out
    cli.main(["mu-lower", path, "--seeds", "4", "--json"])
    again = capsys.readouterr().out
    assert first == again
    monkeypatch.setenv("SSV_SEED", "12")
    cli.main(["mu-lower", path, "--seeds", "4", "--json"])
    other = capsys.readouterr().out
    assert json.loads(other)["mu_lower"] <= 1.0 + 1e-9
