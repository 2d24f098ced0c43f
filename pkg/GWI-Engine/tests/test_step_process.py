import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.exceptions import DomainError, PreconditionError
from app.services.moments import MomentParams
from app.services.step_process import (
    StepFunction,
    build_mn,
    build_xn,
    cond11_supx,
    cond1_residual,
    cond1_residual_closed,
    cond1_sup,
    floor_index,
    line_gap_sup,
    psi_identity_residual,
    psi_limit,
    psi_n,
    scaled_values,
    shifted_integral,
)

PARAMS = MomentParams(m_xi=1.0, m_eps=1.0, sigma2_xi=2.0, sigma2_eps=0.5, critical_exact=True)
PATH = np.array([0.0, 3.0, 1.0, 4.0, 2.0, 6.0, 5.0, 8.0, 7.0, 9.0, 12.0])


@pytest.mark.parametrize("n, t, expected", [
    (10, 0.3, 3),
    (10, 0.7, 7),
    (100, 0.29, 29),
    (10, 0.29, 2),
    (7, 1.0, 7),
    (1000, 0.0, 0),
])
def test_floor_index(n, t, expected):
    assert floor_index(n, t) == expected


def test_step_function_evaluation():
    f = StepFunction(4, np.array([0.0, 1.0, 2.0, 3.0, 4.0]), 1.0)
    assert f(0.0) == 0.0
    assert f(0.2499) == 0.0
    assert f(0.25) == 1.0
    assert_allclose(f(np.array([0.5, 0.99, 1.0])), [2.0, 3.0, 4.0])
    with pytest.raises(DomainError):
        f(-0.1)
    frame = f.to_frame()
    assert list(frame.columns) == ["k", "t_left", "value"]
    assert_allclose(frame["t_left"], [0.0, 0.25, 0.5, 0.75, 1.0])


def test_step_function_needs_grid():
    with pytest.raises(PreconditionError):
        StepFunction(4, np.array([0.0, 1.0]), 1.0)


def test_mn_of_deterministic_path_is_flat():
    mn = build_mn(np.array([0.0, 2.0, 4.0, 6.0]), 1, 2.0, 3.0)
    assert_allclose(mn.values, [0.0, 0.0, 0.0, 0.0])


def test_psi_maps_mn_to_scaled_path():
    for n in (1, 2, 5):
        mn = build_mn(PATH, n, 1.0, 2.0)
        assert_allclose(psi_n(mn, n, 1.0).values, build_xn(PATH, n, 2.0).values, atol=1e-12)
    assert psi_identity_residual(np.stack([PATH, PATH[::-1]]), 5, 1.0, 2.0) < 1e-12


def test_psi_of_callable_and_limit():
    g = psi_n(lambda t: t * t, 4, 0.5, T=1.0)
    assert_allclose(g.values, np.array([0.0, 0.0625, 0.25, 0.5625, 1.0]) + np.arange(5) * 0.125)
    with pytest.raises(PreconditionError):
        psi_n(lambda t: t, 4, 0.5)
    assert psi_limit(lambda t: 2.0 * t, 3.0)(0.5) == pytest.approx(2.5)


def test_scaled_values_rowwise():
    block = np.stack([PATH, 2 * PATH])
    assert_allclose(scaled_values(block, 5, 1.0), [PATH[5] / 5, 2 * PATH[5] / 5])


def test_shifted_integral_against_quadrature():
    n, t, m = 2, 1.75, 1.0
    # the integrand is linear on each sub-cell, so the midpoint rule is exact
    h = 1.0 / (n * 200)
    s = (np.arange(int(round(t / h))) + 0.5) * h
    j = np.floor(n * s).astype(int)
    integrand = PATH[j] / n + m * (s - j / n)
    assert shifted_integral(PATH, n, m, t) == pytest.approx(np.sum(integrand) * h, abs=1e-10)
    assert shifted_integral(PATH, n, m, t) == pytest.approx(1.90625)


def random_paths(rows=20, K=40, seed=5):
    paths = np.random.default_rng(seed).integers(0, 20, size=(rows, K + 1)).astype(np.float64)
    paths[:, 0] = 0.0
    return paths


@pytest.mark.parametrize("n", [1, 4, 8])
@pytest.mark.parametrize("t", [0.0, 0.37, 1.0, 2.405, 4.99])
def test_shifted_integral_of_ensemble_against_quadrature(n, t):
    paths, m = random_paths(), 0.7
    h = 1.0 / (n * 1000)
    s = (np.arange(int(round(t / h))) + 0.5) * h
    j = np.floor(n * s).astype(int)
    integrand = paths[:, j] / n + m * (s - j / n)
    assert_allclose(shifted_integral(paths, n, m, t), integrand.sum(axis=-1) * h, rtol=1e-9, atol=1e-12)


def test_shifted_integral_nondecreasing_in_t():
    paths = random_paths(seed=6)
    values = np.stack([shifted_integral(paths, 4, 0.7, t) for t in np.linspace(0.0, 10.0, 2001)])
    assert (np.diff(values, axis=0) >= -1e-12).all()


def test_cond1_forms_agree():
    block = np.stack([PATH, PATH[::-1]])
    for t in (0.0, 0.3, 1.0, 1.55, 2.0):
        assert_allclose(cond1_residual(block, 5, PARAMS, t), cond1_residual_closed(block, 5, PARAMS, t),
                        atol=1e-12)


def test_cond1_sup_bounds_fine_grid():
    n, T = 5, 2.0
    exact = float(cond1_sup(PATH, n, PARAMS, T))
    grid = np.linspace(0.0, T, 20_001)
    sampled = max(abs(float(cond1_residual_closed(PATH, n, PARAMS, t))) for t in grid)
    assert sampled <= exact + 1e-12
    assert exact - sampled < 1e-3


def test_cond1_sup_matches_brute_force_on_random_paths():
    n, T = 5, 2.0
    paths = random_paths(K=10, seed=7)
    exact = cond1_sup(paths, n, PARAMS, T)
    residuals = np.stack([cond1_residual(paths, n, PARAMS, t) for t in np.linspace(0.0, T, 20_001)])
    sampled = np.abs(residuals).max(axis=0)
    assert (sampled <= exact + 1e-12).all()
    assert (exact - sampled < 5e-3).all()


def test_cond11_and_line_gap():
    assert_allclose(cond11_supx(PATH, 5, 1.0), 6.0 / 25.0)
    line = np.arange(11, dtype=np.float64)
    assert float(line_gap_sup(line, 10, 1.0, 1.0)) == pytest.approx(0.1)
    assert float(line_gap_sup(line, 5, 1.0, 2.0)) == pytest.approx(0.2)


def test_horizon_checked():
    with pytest.raises(PreconditionError):
        build_xn(PATH, 20, 1.0)
    with pytest.raises(DomainError):
        build_xn(PATH, 0, 1.0)
