import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.distributions import Poisson
from app.exceptions import DomainError
from app.services.gw_engine import GWConfig, PathEnsemble
from app.services.moments import (
    MomentParams,
    cond_var_given_prev,
    ensemble_moment_check,
    mean_xk,
    moment_params,
    moment_table,
    order_certificates,
    second_moment_mk,
    var_xk_critical,
)

UNIT = MomentParams(m_xi=1.0, m_eps=1.0, sigma2_xi=1.0, sigma2_eps=1.0, critical_exact=True)


def test_unit_critical_table():
    table = moment_table(UNIT, [1, 2, 3])
    assert table.mean_x == [1.0, 2.0, 3.0]
    assert table.var_x == [1.0, 3.0, 6.0]
    assert table.mean_m2 == [1.0, 2.0, 3.0]
    frame = table.to_frame()
    assert list(frame.columns) == ["k", "mean_x", "var_x", "mean_m2"]


def test_params_from_config():
    config = GWConfig(offspring=Poisson(lam=1.0), immigration=Poisson(lam=2.0), horizon_K=3)
    params = moment_params(config)
    assert params.m_eps == 2.0
    assert params.sigma2_xi == 1.0
    assert params.is_critical


def test_initial_value_enters_moments():
    params = MomentParams(m_xi=1.0, m_eps=0.5, sigma2_xi=2.0, sigma2_eps=0.25, mean_x0=3.0, var_x0=1.5)
    assert mean_xk(params, 0) == 3.0
    assert var_xk_critical(params, 0) == 1.5
    # 0.5 * 2 * 1 + (2 * 3 + 0.25) * 2 + 1.5
    assert var_xk_critical(params, 2) == pytest.approx(1.0 + 12.5 + 1.5)
    assert second_moment_mk(params, 1) == pytest.approx(6.25)


def test_non_critical_mean():
    params = MomentParams(m_xi=0.5, m_eps=1.0, sigma2_xi=0.5, sigma2_eps=1.0)
    assert mean_xk(params, 1) == pytest.approx(1.0)
    assert mean_xk(params, 2) == pytest.approx(1.5)
    with pytest.raises(DomainError):
        var_xk_critical(params, 2)
    with pytest.raises(DomainError):
        order_certificates(params, 5)


def test_near_critical_uses_linear_branch():
    params = MomentParams(m_xi=1.0 + 1e-13, m_eps=1.0, sigma2_xi=1.0, sigma2_eps=1.0)
    assert mean_xk(params, 1000) == 1000.0


@pytest.mark.parametrize("offset", [1e-6, -1e-6, 1e-9, -1e-9, 1e-11, -1e-11])
def test_geometric_branch_is_continuous_near_criticality(offset):
    params = MomentParams(m_xi=1.0 + offset, m_eps=0.7, sigma2_xi=1.0, sigma2_eps=1.0, mean_x0=2.0)
    assert not params.is_critical
    expected = params.mean_x0
    for k in range(1, 1001):
        expected = params.m_xi * expected + params.m_eps
        if k in (1, 10, 100, 1000):
            assert mean_xk(params, k) == pytest.approx(expected, rel=1e-7)
    if abs(offset) <= 1e-11:
        assert mean_xk(params, 1000) == pytest.approx(2.0 + 0.7 * 1000, rel=1e-7)


@pytest.mark.parametrize("m_xi", [0.5, 0.9, 1.1])
def test_mean_follows_recursion(m_xi):
    params = MomentParams(m_xi=m_xi, m_eps=0.7, sigma2_xi=1.0, sigma2_eps=1.0, mean_x0=2.0)
    expected = params.mean_x0
    for k in range(1, 201):
        expected = m_xi * expected + params.m_eps
        assert mean_xk(params, k) == pytest.approx(expected, rel=1e-10)


def test_critical_moments_follow_recursion():
    params = MomentParams(m_xi=1.0, m_eps=0.7, sigma2_xi=1.3, sigma2_eps=0.4, mean_x0=2.0, var_x0=0.5,
                          critical_exact=True)
    mean, var = params.mean_x0, params.var_x0
    for k in range(1, 1001):
        # Var X_k = Var X_{k-1} + E Var(X_k | X_{k-1}) when m_xi = 1
        var = var + params.sigma2_xi * mean + params.sigma2_eps
        mean = mean + params.m_eps
        assert mean_xk(params, k) == pytest.approx(mean, rel=1e-12)
        assert var_xk_critical(params, k) == pytest.approx(var, rel=1e-10)


def test_second_moment_is_expected_conditional_variance():
    params = MomentParams(m_xi=1.0, m_eps=0.7, sigma2_xi=1.3, sigma2_eps=0.4, mean_x0=2.0, critical_exact=True)
    for k in range(1, 101):
        expected = params.sigma2_xi * mean_xk(params, k - 1) + params.sigma2_eps
        assert second_moment_mk(params, k) == pytest.approx(expected, rel=1e-12)
        assert second_moment_mk(params, k) == pytest.approx(cond_var_given_prev(params, mean_xk(params, k - 1)))


def test_conditional_variance():
    assert cond_var_given_prev(UNIT, 4) == 5.0
    assert_allclose(cond_var_given_prev(UNIT, np.array([0, 1, 2])), [1.0, 2.0, 3.0])


def test_negative_k_rejected():
    with pytest.raises(DomainError):
        mean_xk(UNIT, -1)
    with pytest.raises(DomainError):
        second_moment_mk(UNIT, 0)


def test_order_certificates_are_bounded():
    frame = order_certificates(UNIT, 1000)
    assert list(frame.columns) == ["k", "mean_x_over_k", "second_x_over_k2", "abs_m_bound_over_sqrt_k", "m2_over_k"]
    assert_allclose(frame["mean_x_over_k"], 1.0)
    assert frame["second_x_over_k2"].max() < 3.0
    assert frame["m2_over_k"].max() <= 1.0
    with pytest.raises(DomainError):
        order_certificates(UNIT, 1)


def test_invalid_params_rejected():
    with pytest.raises(ValueError):
        MomentParams(m_xi=1.0, m_eps=float("inf"), sigma2_xi=1.0, sigma2_eps=1.0)
    with pytest.raises(ValueError):
        MomentParams(m_xi=1.0, m_eps=-1.0, sigma2_xi=1.0, sigma2_eps=1.0)


def test_ensemble_matches_closed_forms():
    config = GWConfig(offspring=Poisson(lam=1.0), immigration=Poisson(lam=1.0), horizon_K=50,
                      record_immigration=False)
    ensemble = PathEnsemble(config, 31, 20_000, workers=2, cache=None)
    block = ensemble.materialize()
    frame = ensemble_moment_check({k: block.x[:, k] for k in (1, 10, 50)}, moment_params(config))
    assert list(frame["k"]) == [1, 10, 50]
    assert frame["z_mean"].max() < 5.0
    assert frame["z_var"].max() < 5.0
