import json

import pandas as pd
import pytest
from click.testing import CliRunner

from app.main import cli
from app.services.export_service import export_service


@pytest.fixture
def runner():
    return CliRunner()


def moments_scenario():
    return {
        "schema": 1,
        "name": "unit-moments",
        "gw": {
            "offspring": {"type": "poisson", "lambda": 1.0},
            "immigration": {"type": "poisson", "lambda": 1.0},
            "initial": {"type": "point_mass", "c": 0},
            "horizon_K": 3,
        },
        "n_ladder": [3],
        "moment_k_values": [1],
        "n_paths": 10,
    }


def test_moments_command(runner, write_scenario, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(cli, ["moments", "--scenario", str(write_scenario(moments_scenario())), "--out", str(out)])
    assert result.exit_code == 0, result.output
    frame = pd.read_csv(out / "moments.csv")
    assert frame["mean_x"].tolist() == [1.0, 2.0, 3.0]
    assert frame["var_x"].tolist() == [1.0, 3.0, 6.0]
    assert (out / "certificates.csv").exists()


def test_moments_json(runner, write_scenario, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(cli, ["moments", "--scenario", str(write_scenario(moments_scenario())),
                                 "--out", str(out), "--format", "json"])
    assert result.exit_code == 0, result.output
    assert json.loads((out / "moments.json").read_text())["mean_x"] == [1.0, 2.0, 3.0]


def test_simulate_deterministic_path(runner, write_scenario, tmp_path):
    document = moments_scenario()
    document["gw"]["offspring"] = {"type": "point_mass", "c": 1}
    document["gw"]["immigration"] = {"type": "point_mass", "c": 2}
    scenario = write_scenario(document)

    result = runner.invoke(cli, ["simulate", "--scenario", str(scenario), "--out", str(tmp_path), "--threads", "2"])
    assert result.exit_code == 0, result.output
    frame = pd.read_csv(tmp_path / "ensemble.csv")
    assert frame[frame["path_id"] == 0]["x_k"].tolist() == [0, 2, 4, 6]

    result = runner.invoke(cli, ["simulate", "--scenario", str(scenario), "--out", str(tmp_path),
                                 "--format", "binary"])
    assert result.exit_code == 0, result.output
    info, block = export_service.read_ensemble_binary(tmp_path / "ensemble.gwie")
    assert info["n_paths"] == 10
    assert block.x[:, -1].tolist() == [6] * 10


def test_sde_command(runner, write_scenario, small_scenario, tmp_path):
    scenario = write_scenario(small_scenario)
    result = runner.invoke(cli, ["sde", "--scenario", str(scenario), "--out", str(tmp_path),
                                 "--steps", "16", "--paths", "200", "--keep-paths", "3"])
    assert result.exit_code == 0, result.output
    ends = pd.read_csv(tmp_path / "sde_endpoints.csv")
    paths = pd.read_csv(tmp_path / "sde_paths.csv")
    assert len(ends) == 200
    assert len(paths) == 3 * 17
    last = paths[paths["t"] == 1.0]["value"].tolist()
    assert last == pytest.approx(ends["value"].tolist()[:3], abs=0)


def test_converge_is_thread_independent(runner, write_scenario, small_scenario, tmp_path):
    small_scenario["tolerances"] = {"reconstruction": 1e-9, "moment_match_se": 6.0, "fdd_ks": 0.1,
                                    "cond1_decay_ratio": 3.0}
    small_scenario["diagnostic_paths"] = 0
    scenario = str(write_scenario(small_scenario))

    one = runner.invoke(cli, ["converge", "--scenario", scenario, "--out", str(tmp_path / "a"), "--threads", "1"])
    many = runner.invoke(cli, ["converge", "--scenario", scenario, "--out", str(tmp_path / "b"), "--threads", "4"])
    assert one.exit_code == 0, one.output
    assert many.exit_code == 0, many.output
    first = (tmp_path / "a" / "report.json").read_bytes()
    assert first == (tmp_path / "b" / "report.json").read_bytes()
    assert json.loads(first)["schema"] == 1
    assert "PASS" in one.output

    rendered = runner.invoke(cli, ["report", str(tmp_path / "a" / "report.json")])
    assert rendered.exit_code == 0
    assert "small-critical" in rendered.output


def test_converge_fails_on_failed_gate(runner, write_scenario, small_scenario, tmp_path):
    small_scenario["tolerances"] = {"fdd_ks": 1e-9}
    small_scenario["diagnostic_paths"] = 0
    result = runner.invoke(cli, ["converge", "--scenario", str(write_scenario(small_scenario)),
                                 "--out", str(tmp_path)])
    assert result.exit_code == 1
    assert "FAIL" in result.output
    assert runner.invoke(cli, ["report", str(tmp_path / "report.json")]).exit_code == 1


def test_set_and_seed_overrides(runner, write_scenario, tmp_path, monkeypatch):
    scenario = str(write_scenario(moments_scenario()))
    monkeypatch.setenv("GWI_SEED", "5")
    a = runner.invoke(cli, ["simulate", "--scenario", scenario, "--out", str(tmp_path / "a"), "--set", "n_paths=4"])
    monkeypatch.setenv("GWI_SEED", "6")
    b = runner.invoke(cli, ["simulate", "--scenario", scenario, "--out", str(tmp_path / "b"), "--set", "n_paths=4"])
    assert a.exit_code == 0 and b.exit_code == 0
    frame_a = pd.read_csv(tmp_path / "a" / "ensemble.csv")
    frame_b = pd.read_csv(tmp_path / "b" / "ensemble.csv")
    assert frame_a["path_id"].max() == 3
    assert not frame_a["x_k"].equals(frame_b["x_k"])


def test_scenario_errors_are_usage_errors(runner, tmp_path, write_scenario):
    broken = tmp_path / "broken.json"
    broken.write_text("{ not json", encoding="utf-8")
    result = runner.invoke(cli, ["moments", "--scenario", str(broken)])
    assert result.exit_code == 2
    assert "line 1" in result.output

    short = moments_scenario()
    short["n_ladder"] = [10]
    result = runner.invoke(cli, ["moments", "--scenario", str(write_scenario(short, "short.json"))])
    assert result.exit_code == 2
    assert "horizon_K" in result.output


def test_engine_errors_exit_one(runner, write_scenario, tmp_path):
    document = moments_scenario()
    document["gw"]["offspring"] = {"type": "point_mass", "c": 1}
    result = runner.invoke(cli, ["sde", "--scenario", str(write_scenario(document)), "--out", str(tmp_path),
                                 "--scheme", "exact_transition"])
    assert result.exit_code == 1
    assert "sigma2_xi" in result.output


def test_version(runner):
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert "GWI Engine" in result.output
