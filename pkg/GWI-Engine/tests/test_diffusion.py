import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy import stats

from app.exceptions import DomainError
from app.services.diffusion import (
    Output,
    Scheme,
    SDEParams,
    euler_path,
    exact_transition_path,
    gamma_variates,
    limit_cdf,
    limit_marginal_cdf,
    limit_marginal_moments,
    m_path_from_x,
    simulate_paths,
)
from app.services.random_stream import RandomStream, StreamDomain

BESSEL = SDEParams(m_eps=1.0, sigma2_xi=2.0, x0=0.0)


def test_deterministic_line():
    params = SDEParams(m_eps=1.5, sigma2_xi=0.0, x0=0.5)
    path = euler_path(params, 2.0, 8, RandomStream(0))
    assert_allclose(path.values, 0.5 + 1.5 * np.linspace(0.0, 2.0, 9))
    assert list(path.to_frame().columns) == ["t", "value"]


def test_exact_transitions_need_diffusion():
    with pytest.raises(DomainError):
        exact_transition_path(SDEParams(m_eps=1.0, sigma2_xi=0.0), 1.0, 4, RandomStream(0))
    with pytest.raises(DomainError):
        exact_transition_path(SDEParams(m_eps=1.0, sigma2_xi=1.0, x0=-1.0), 1.0, 4, RandomStream(0))


def test_grid_validated():
    with pytest.raises(DomainError):
        euler_path(BESSEL, 0.0, 4, RandomStream(0))
    with pytest.raises(DomainError):
        euler_path(BESSEL, 1.0, 0, RandomStream(0))


def test_exact_paths_stay_nonnegative():
    paths = simulate_paths(BESSEL, 1.0, 32, 5, 500, Scheme.EXACT_TRANSITION)
    assert paths.shape == (500, 33)
    assert paths.min() >= 0.0


def test_single_path_matches_ensemble_lane():
    stream = RandomStream(17, [0], StreamDomain.EXACT_DIFFUSION)
    single = exact_transition_path(BESSEL, 1.0, 16, stream)
    ensemble = simulate_paths(BESSEL, 1.0, 16, 17, 3, Scheme.EXACT_TRANSITION)
    assert_array_equal(single.values, ensemble[0])

    euler = euler_path(BESSEL, 1.0, 16, RandomStream(17, [0], StreamDomain.EULER_DIFFUSION))
    assert_array_equal(euler.values, simulate_paths(BESSEL, 1.0, 16, 17, 1, Scheme.EULER_FULL_TRUNCATION)[0])


def test_ensembles_independent_of_workers_and_blocks():
    a = simulate_paths(BESSEL, 1.0, 8, 3, 300, Scheme.EXACT_TRANSITION, workers=1, block_size=300)
    b = simulate_paths(BESSEL, 1.0, 8, 3, 300, Scheme.EXACT_TRANSITION, workers=3, block_size=41)
    assert_array_equal(a, b)


def test_outputs_are_consistent():
    paths = simulate_paths(BESSEL, 1.0, 8, 3, 50, Scheme.EULER_FULL_TRUNCATION)
    ends = simulate_paths(BESSEL, 1.0, 8, 3, 50, Scheme.EULER_FULL_TRUNCATION, output=Output.ENDPOINT)
    sups = simulate_paths(BESSEL, 1.0, 8, 3, 50, Scheme.EULER_FULL_TRUNCATION, output=Output.SUP)
    assert_array_equal(ends, paths[:, -1])
    assert_array_equal(sups, paths.max(axis=1))


@pytest.mark.parametrize("shape", [0.3, 1.0, 2.5, 40.0])
def test_gamma_variates(shape):
    n = 50_000
    draw = RandomStream(4, np.arange(n)).next_draw()
    values = gamma_variates(np.full(n, shape), draw)
    assert values.min() >= 0.0
    assert abs(values.mean() - shape) < 5 * np.sqrt(shape / n)
    assert values.var() == pytest.approx(shape, rel=0.12)


def test_gamma_zero_shape():
    draw = RandomStream(4, np.arange(3)).next_draw()
    assert_array_equal(gamma_variates(np.zeros(3), draw), [0.0, 0.0, 0.0])


def test_exact_endpoint_law():
    ends = simulate_paths(BESSEL, 1.0, 1, 9, 20_000, Scheme.EXACT_TRANSITION, output=Output.ENDPOINT)
    mean, var = limit_marginal_moments(BESSEL, 1.0)
    assert (mean, var) == (1.0, 1.0)
    assert abs(ends.mean() - mean) < 5 * np.sqrt(var / ends.size)
    assert stats.kstest(ends, limit_cdf(BESSEL, 1.0)).statistic < 0.02


def test_limit_moments_from_positive_start():
    params = SDEParams(m_eps=1.0, sigma2_xi=2.0, x0=0.5)
    mean, var = limit_marginal_moments(params, 1.0)
    assert (mean, var) == (1.5, 2.0)
    ends = simulate_paths(params, 1.0, 1, 13, 20_000, Scheme.EXACT_TRANSITION, output=Output.ENDPOINT)
    assert abs(ends.mean() - mean) < 5 * np.sqrt(var / ends.size)
    assert ends.var(ddof=1) == pytest.approx(var, rel=0.1)
    assert limit_marginal_moments(params, 0.0) == (0.5, 0.0)


def test_euler_close_to_exact():
    euler = simulate_paths(BESSEL, 1.0, 256, 9, 10_000, Scheme.EULER_FULL_TRUNCATION, output=Output.ENDPOINT)
    exact = simulate_paths(BESSEL, 1.0, 1, 9, 10_000, Scheme.EXACT_TRANSITION, output=Output.ENDPOINT)
    assert stats.ks_2samp(euler, exact).statistic < 0.04


def test_limit_marginal_is_gamma():
    x = np.array([0.1, 0.5, 1.0, 3.0])
    expected = stats.gamma(a=2 * 1.0 / 2.0, scale=2.0 * 0.5 / 2.0).cdf(x)
    assert_allclose(limit_marginal_cdf(BESSEL, 0.5, x), expected, rtol=1e-12)
    assert limit_marginal_cdf(BESSEL, 0.5, -1.0) == 0.0


def test_limit_marginal_degenerate_cases():
    line = SDEParams(m_eps=2.0, sigma2_xi=0.0)
    assert limit_marginal_cdf(line, 1.0, 1.99) == 0.0
    assert limit_marginal_cdf(line, 1.0, 2.0) == 1.0
    driftless = SDEParams(m_eps=0.0, sigma2_xi=1.0)
    assert limit_marginal_cdf(driftless, 1.0, 0.0) == 1.0
    with pytest.raises(DomainError):
        limit_marginal_cdf(SDEParams(m_eps=1.0, sigma2_xi=1.0, x0=1.0), 1.0, 0.5)


def test_shifted_cdf_and_m_path():
    shifted = limit_cdf(BESSEL, 1.0, shift=1.0)
    assert shifted(0.0) == pytest.approx(limit_marginal_cdf(BESSEL, 1.0, 1.0))
    path = euler_path(SDEParams(m_eps=1.0, sigma2_xi=0.0), 1.0, 4, RandomStream(0))
    assert_allclose(m_path_from_x(path, 1.0).values, 0.0, atol=1e-15)


def test_invalid_params():
    with pytest.raises(ValueError):
        SDEParams(m_eps=-0.1, sigma2_xi=1.0)
    with pytest.raises(ValueError):
        SDEParams(m_eps=1.0, sigma2_xi=float("nan"))
