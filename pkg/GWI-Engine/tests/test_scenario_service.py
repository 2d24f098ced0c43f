from pathlib import Path

import pytest

from app.exceptions import ScenarioError
from app.services.scenario_service import Scenario, scenario_service

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


@pytest.mark.parametrize("name", ["poisson-critical", "pointmass-degenerate", "twopoint-bounded"])
def test_bundled_scenarios_validate(name):
    scenario = scenario_service.load(SCENARIOS / f"{name}.json")
    assert scenario.name == name
    assert scenario.gw.is_critical()


def test_reference_scenario_limit_parameters():
    scenario = scenario_service.load(SCENARIOS / "poisson-critical.json")
    sde = scenario.sde_params()
    assert (sde.m_eps, sde.sigma2_xi, sde.x0) == (1.0, 1.0, 0.0)


def test_defaults(small_scenario):
    del small_scenario["n_ladder"]
    small_scenario["gw"]["horizon_K"] = 1000
    scenario = scenario_service.parse(small_scenario)
    assert scenario.n_ladder == [10, 50, 100, 500, 1000]
    assert scenario.sde is None
    assert scenario.schema_version == 1


def test_overrides_apply_in_order(small_scenario, write_scenario):
    path = write_scenario(small_scenario)
    scenario = scenario_service.load(path, [
        "gw.horizon_K=200",
        "n_paths=10",
        "n_paths=20",
        "n_ladder.1=200",
        "tolerances.fdd_ks=0.05",
        "name=renamed",
    ])
    assert scenario.gw.horizon_K == 200
    assert scenario.n_paths == 20
    assert scenario.n_ladder == [10, 200]
    assert scenario.tolerances["fdd_ks"] == 0.05
    assert scenario.name == "renamed"


def test_override_can_replace_a_law(small_scenario, write_scenario):
    path = write_scenario(small_scenario)
    scenario = scenario_service.load(path, ['gw.immigration={"type": "point_mass", "c": 2}'])
    assert scenario.gw.immigration.mean() == 2.0


@pytest.mark.parametrize("override", ["n_paths", "=3", "n_ladder.7=1", "name.first=x"])
def test_malformed_overrides(small_scenario, write_scenario, override):
    with pytest.raises(ScenarioError):
        scenario_service.load(write_scenario(small_scenario), [override])


def test_seed_override_from_environment(small_scenario, write_scenario, monkeypatch):
    path = write_scenario(small_scenario)
    monkeypatch.setenv("GWI_SEED", "777")
    assert scenario_service.load(path).master_seed == 777
    assert scenario_service.load(path, seed=5).master_seed == 5


def test_invalid_json_reports_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "name": "x",\n  "gw": }\n', encoding="utf-8")
    with pytest.raises(ScenarioError) as excinfo:
        scenario_service.load(path)
    assert "line 3" in str(excinfo.value)
    assert excinfo.value.diagnostics


def test_field_errors_are_located(small_scenario):
    small_scenario["n_paths"] = 0
    with pytest.raises(ScenarioError) as excinfo:
        scenario_service.parse(small_scenario)
    assert any(d.startswith("n_paths") for d in excinfo.value.diagnostics)


def test_invalid_law_is_located(small_scenario):
    small_scenario["gw"]["offspring"] = {"type": "poisson", "lambda": -1.0}
    with pytest.raises(ScenarioError) as excinfo:
        scenario_service.parse(small_scenario)
    diagnostic = next(d for d in excinfo.value.diagnostics if d.startswith("gw.offspring"))
    assert "lambda" in diagnostic


def test_short_horizon_rejected(small_scenario):
    small_scenario["gw"]["horizon_K"] = 99
    with pytest.raises(ScenarioError) as excinfo:
        scenario_service.parse(small_scenario)
    assert "horizon_K" in str(excinfo.value)


def test_horizon_covers_largest_time(small_scenario):
    small_scenario["t_values"] = [1.5]
    with pytest.raises(ScenarioError):
        scenario_service.parse(small_scenario)
    small_scenario["gw"]["horizon_K"] = 150
    assert scenario_service.parse(small_scenario).gw.horizon_K == 150


def test_sde_cross_check(small_scenario):
    small_scenario["sde"] = {"m_eps": 1.0, "sigma2_xi": 1.0}
    assert scenario_service.parse(small_scenario).sde_params().sigma2_xi == 1.0
    small_scenario["sde"] = {"m_eps": 2.0, "sigma2_xi": 1.0}
    with pytest.raises(ScenarioError) as excinfo:
        scenario_service.parse(small_scenario)
    assert "sde.m_eps" in str(excinfo.value)


@pytest.mark.parametrize("field, value", [
    ("schema", 2),
    ("tolerances", {"no_such_test": 1.0}),
    ("master_seed", -1),
    ("unknown_field", 1),
    ("moment_k_values", [500]),
])
def test_rejected_documents(small_scenario, field, value):
    small_scenario[field] = value
    with pytest.raises(ScenarioError):
        scenario_service.parse(small_scenario)


def test_missing_file(tmp_path):
    with pytest.raises(ScenarioError):
        scenario_service.load(tmp_path / "missing.json")


def test_scenario_is_immutable(small_scenario):
    scenario = Scenario.model_validate(small_scenario)
    with pytest.raises(ValueError):
        scenario.n_paths = 5
