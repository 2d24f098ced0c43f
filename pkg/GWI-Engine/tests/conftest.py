"""Shared fixtures for the engine tests"""

import json
import os

# before any app import: no .env, no progress bars, no seed override
os.environ["ENV"] = "test"
os.environ["GWI_PROGRESS"] = "0"
os.environ.pop("GWI_SEED", None)

import pytest

from app.distributions import PointMass, Poisson
from app.services.gw_engine import GWConfig


@pytest.fixture
def poisson_critical():
    """Offspring Poisson(1), immigration Poisson(1), X_0 = 0"""
    return GWConfig(offspring=Poisson(lam=1.0), immigration=Poisson(lam=1.0), horizon_K=100)


@pytest.fixture
def deterministic_config():
    """X_k = X_{k-1} + 2, so the path is 0, 2, 4, 6"""
    return GWConfig(offspring=PointMass(c=1), immigration=PointMass(c=2), horizon_K=3)


@pytest.fixture
def write_scenario(tmp_path):
    """Write a scenario document to a temporary JSON file"""

    def _write(document, name="scenario.json"):
        path = tmp_path / name
        path.write_text(json.dumps(document, indent=2), encoding="utf-8")
        return path

    return _write


@pytest.fixture
def small_scenario():
    return {
        "schema": 1,
        "name": "small-critical",
        "gw": {
            "offspring": {"type": "poisson", "lambda": 1.0},
            "immigration": {"type": "poisson", "lambda": 1.0},
            "horizon_K": 100,
            "record_immigration": False,
        },
        "n_ladder": [10, 100],
        "t_values": [1.0],
        "T": 1.0,
        "theta_values": [0.5],
        "n_paths": 2000,
        "master_seed": 11,
        "moment_k_values": [1, 10],
        "sde_steps": 64,
        "sde_paths": 2000,
        "diagnostic_paths": 500,
        "tolerances": {
            "reconstruction": 1e-9,
            "moment_match_se": 6.0,
            "fdd_ks": 0.1,
            "cond1_decay_ratio": 3.0,
            "cond2_final": 0.01,
            "cond11_decay_ratio": 3.0,
            "sde_ks_two_sample": 0.1,
            "sde_moment_se": 6.0,
            "sde_markov_pvalue": 0.0001,
        },
    }
