"""
Tests for the penalty family beta_eps

Validates:
- Values at the reference points s = 0 and s >= eps
- Range (-1, 0] and monotonicity
- Underflow clamp just below eps
- Derivative against centered differences and self-similarity in s / eps
- Equilibrium gap balancing a constant forcing
"""
import numpy as np
import pytest

from src.acceptance import penalty_derivative_defect
from src.errors import ProblemSpecInvalid
from src.penalty import PenaltyParams, beta_and_prime, equilibrium_gap, penalty_beta


def test_beta_at_zero():
    """Test beta_eps(0) = -1/e and beta_eps'(0) = 1 / (eps e)."""
    params = PenaltyParams(eps=0.1)
    beta, prime = beta_and_prime(params, 0.0)

    assert beta == pytest.approx(-np.exp(-1.0))
    assert prime == pytest.approx(10.0 / np.e)


def test_beta_vanishes_above_eps():
    params = PenaltyParams(eps=0.1)
    beta, prime = beta_and_prime(params, np.array([0.1, 0.5, 3.0]))

    assert np.all(beta == 0.0)
    assert np.all(prime == 0.0)


@pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3])
def test_beta_range_and_monotone(eps):
    params = PenaltyParams(eps=eps)
    s = np.linspace(-1.0, 1.0, 100_001)
    beta, prime = beta_and_prime(params, s)

    assert np.all(beta > -1.0)
    assert np.all(beta <= 0.0)
    assert np.all(beta[s >= eps] == 0.0)
    assert np.all(prime >= 0.0)
    assert np.all(np.diff(beta) >= 0.0)


@pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3])
def test_beta_prime_matches_centered_difference(eps):
    s = np.linspace(-1.0, 1.0, 100_001)
    assert penalty_derivative_defect(eps, s) <= 1e-6


def test_beta_self_similar():
    """Test beta_eps(eps sigma) = -exp(1 / (sigma - 1)) below sigma = 1, zero above."""
    sigma = np.linspace(-5.0, 3.0, 801)
    with np.errstate(divide="ignore"):
        expected = np.where(sigma < 1.0, -np.exp(1.0 / (sigma - 1.0)), 0.0)
    for eps in (1e-1, 1e-2, 1e-3):
        np.testing.assert_allclose(penalty_beta(PenaltyParams(eps), eps * sigma), expected, rtol=1e-10, atol=1e-300)


def test_beta_clamped_just_below_eps():
    """Test exponents beyond the floor give exact zeros instead of underflow noise."""
    params = PenaltyParams(eps=1e-3)
    beta, prime = beta_and_prime(params, 1e-3 * (1.0 - 1e-6))

    assert beta == 0.0
    assert prime == 0.0


def test_scalar_and_array_forms_agree():
    params = PenaltyParams(eps=0.05)
    s = np.array([-0.2, 0.0, 0.01, 0.04])
    arr = penalty_beta(params, s)

    assert isinstance(penalty_beta(params, 0.01), float)
    for value, expected in zip(s, arr):
        assert penalty_beta(params, float(value)) == pytest.approx(expected)


def test_equilibrium_gap_balances_forcing():
    eps = 1e-2
    gap = equilibrium_gap(eps, 0.5)

    assert gap < eps
    assert penalty_beta(PenaltyParams(eps), gap) == pytest.approx(-0.5)
    assert gap == pytest.approx(eps * (1.0 + 1.0 / np.log(0.5)))


def test_equilibrium_gap_rejects_unbalanceable_forcing():
    with pytest.raises(ValueError):
        equilibrium_gap(1e-2, 1.5)
    with pytest.raises(ValueError):
        equilibrium_gap(1e-2, 0.0)


@pytest.mark.parametrize("eps", [0.0, -1.0, float("nan"), float("inf")])
def test_invalid_eps_rejected(eps):
    with pytest.raises(ProblemSpecInvalid):
        PenaltyParams(eps=eps)
