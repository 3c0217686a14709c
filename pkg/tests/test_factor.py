"""Tests for the factor-analysis family."""

import math

import numpy as np
import pytest
from pytest_mock import MockerFixture

from singular_bic.coefficients import format_rational
from singular_bic.errors import DimensionError, NotPositiveDefiniteError, RangeError
from singular_bic.families import factor
from singular_bic.families.factor import (
    FactorProfile,
    default_uniqueness_floor,
    fa_fit,
    fa_fit_profile,
    fa_sbic_input,
    gaussian_loglik,
    sample_covariance,
)
from singular_bic.solver import solve

TRUE_LOADINGS = np.array([[0.9], [0.8], [0.7], [0.6], [0.5], [0.4]])
TRUE_UNIQUENESSES = np.array([0.3, 0.4, 0.5, 0.6, 0.7, 0.8])


def _true_sigma() -> np.ndarray:
    return TRUE_LOADINGS @ TRUE_LOADINGS.T + np.diag(TRUE_UNIQUENESSES)


@pytest.fixture
def one_factor_cov(rng: np.random.Generator) -> np.ndarray:
    x = rng.multivariate_normal(np.zeros(6), _true_sigma(), size=400)
    return sample_covariance(x)


def test_sample_covariance_uses_n_denominator(rng: np.random.Generator) -> None:
    """Test that the sample covariance divides by n."""
    x = rng.normal(size=(30, 4))
    assert np.allclose(sample_covariance(x), np.cov(x, rowvar=False, bias=True))
    with pytest.raises(DimensionError):
        sample_covariance(x[:1])


def test_zero_factors_closed_form(one_factor_cov: np.ndarray) -> None:
    """Test the closed form for zero factors."""
    n = 400
    fit = fa_fit(one_factor_cov, n, 0)
    assert fit.n_factors == 0
    assert np.allclose(fit.uniquenesses, np.diag(one_factor_cov))
    expected = -0.5 * n * (6 * math.log(2 * math.pi) + np.sum(np.log(np.diag(one_factor_cov))) + 6)
    assert fit.loglik == pytest.approx(expected, rel=1e-12)


def test_loglik_is_rotation_invariant(one_factor_cov: np.ndarray, rng: np.random.Generator) -> None:
    """Test that rotating loadings leaves the likelihood unchanged."""
    fit = fa_fit(one_factor_cov, 400, 2, restarts=3)
    q, _ = np.linalg.qr(rng.standard_normal((2, 2)))
    rotated = fit.loadings @ q
    sigma = rotated @ rotated.T + np.diag(fit.uniquenesses)
    assert gaussian_loglik(sigma, one_factor_cov, 400) == pytest.approx(fit.loglik, rel=1e-10)


def test_saturated_covariance_maximizes_loglik(one_factor_cov: np.ndarray) -> None:
    """Test that no fit beats the saturated likelihood."""
    best = gaussian_loglik(one_factor_cov, one_factor_cov, 400)
    assert fa_fit(one_factor_cov, 400, 3, restarts=5).loglik <= best + 1e-8


def test_em_trace_is_monotone(one_factor_cov: np.ndarray) -> None:
    """Test that factor EM never loses likelihood."""
    fit = fa_fit(one_factor_cov, 400, 2, restarts=1)
    assert len(fit.trace) == fit.iterations + 1
    assert np.all(np.diff(fit.trace) >= -1e-8)


def test_uniqueness_floor(one_factor_cov: np.ndarray) -> None:
    """Test that uniquenesses stay above the floor."""
    floor = default_uniqueness_floor(one_factor_cov)
    assert np.allclose(floor, 1e-4 * np.diag(one_factor_cov))
    fit = fa_fit(one_factor_cov, 400, 3, restarts=5)
    assert np.all(fit.uniquenesses >= floor - 1e-15)


def test_large_sample_recovery() -> None:
    """Test recovery of a one-factor model from a large sample."""
    rng = np.random.default_rng([6, 100_000])
    x = rng.multivariate_normal(np.zeros(6), _true_sigma(), size=100_000)
    fit = fa_fit(sample_covariance(x), 100_000, 1, restarts=5)
    assert np.abs(fit.covariance - _true_sigma()).max() < 0.05
    assert np.abs(np.abs(fit.loadings[:, 0]) - TRUE_LOADINGS[:, 0]).max() < 0.05


def test_invalid_covariances() -> None:
    """Test that invalid covariance matrices are rejected."""
    with pytest.raises(NotPositiveDefiniteError):
        fa_fit(np.array([[1.0, 0.5], [0.2, 1.0]]), 10, 0)
    with pytest.raises(NotPositiveDefiniteError):
        fa_fit(np.ones((3, 3)), 10, 0)
    with pytest.raises(DimensionError):
        fa_fit(np.ones((2, 3)), 10, 0)


def test_too_many_factors(one_factor_cov: np.ndarray) -> None:
    """Test that factor counts beyond the variable count are rejected."""
    with pytest.raises(RangeError):
        fa_fit(one_factor_cov, 400, 7)
    with pytest.raises(RangeError):
        fa_fit(one_factor_cov, 400, -1)


def test_overparametrized_factor_count_is_fitted(one_factor_cov: np.ndarray) -> None:
    """Test that four factors on six variables still fit below the saturated likelihood."""
    fit = fa_fit(one_factor_cov, 400, 4, restarts=2)
    assert fit.loadings.shape == (6, 4)
    assert fit.loglik <= gaussian_loglik(one_factor_cov, one_factor_cov, 400) + 1e-8


def test_profile_and_sbic_input(one_factor_cov: np.ndarray) -> None:
    """Test the factor profile and its sBIC input."""
    profile = fa_fit_profile(one_factor_cov, 400, restarts=5, seed=4)
    assert profile.max_factors == 3
    assert profile.n_variables == 6
    assert all(b >= a - 1e-6 for a, b in zip(profile.logliks, profile.logliks[1:]))
    sbic_input = fa_sbic_input(profile)
    assert dict(sbic_input.dims) == {"0": 6, "1": 12, "2": 17, "3": 21}
    assert format_rational(sbic_input.coefficients[("2", "1")].lam) == "29/4"
    result = solve(sbic_input)
    assert result.selected("sbic") == "1"
    assert sum(result.posterior_sbic.values()) == pytest.approx(1.0)


def test_profile_is_seeded(one_factor_cov: np.ndarray) -> None:
    """Test that a seeded profile repeats exactly."""
    a = fa_fit_profile(one_factor_cov, 400, max_factors=2, restarts=3, seed=9)
    b = fa_fit_profile(one_factor_cov, 400, max_factors=2, restarts=3, seed=9, threads=2)
    assert a.logliks == b.logliks


def test_sbic_input_outside_table(rng: np.random.Generator) -> None:
    """Test sBIC input for shapes outside the table."""
    x = rng.normal(size=(200, 7))
    profile = fa_fit_profile(sample_covariance(x), 200, max_factors=1, restarts=2)
    with pytest.raises(RangeError):
        fa_sbic_input(profile)
    wide = FactorProfile(fits=profile.fits * 3, n=200, n_variables=6)
    with pytest.raises(RangeError):
        fa_sbic_input(wide)


def test_profile_fits_every_factor_count(one_factor_cov: np.ndarray, mocker: MockerFixture) -> None:
    """Test that the profile fits each factor count once."""
    spy = mocker.spy(factor, "fa_fit")
    fa_fit_profile(one_factor_cov, 400, max_factors=2, restarts=2)
    assert [call.args[2] for call in spy.call_args_list] == [0, 1, 2]
