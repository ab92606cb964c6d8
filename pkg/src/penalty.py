"""
Penalty family beta_eps.

beta_eps(s) = -exp(eps / (s - eps)) for s < eps, 0 otherwise.
beta_eps'(s) = eps / (s - eps)^2 * exp(eps / (s - eps)).
Exponents below EXP_FLOOR clamp both to exactly 0.
"""
from dataclasses import dataclass
from typing import Union

import numpy as np

from src.errors import ProblemSpecInvalid

EXP_FLOOR = -700.0

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class PenaltyParams:
    """Penalization parameter eps > 0."""
    eps: float

    def __post_init__(self):
        if not (np.isfinite(self.eps) and self.eps > 0):
            raise ProblemSpecInvalid(f"eps must be positive and finite, got {self.eps}")


def beta_and_prime(params: PenaltyParams, s: ArrayLike):
    """
    Evaluate (beta_eps(s), beta_eps'(s)).

    Scalar input returns a pair of floats; array input returns a pair of arrays.
    beta lies in (-1, 0], beta' >= 0.
    """
    eps = params.eps
    arr = np.asarray(s, dtype=float)
    beta = np.zeros(arr.shape)
    prime = np.zeros(arr.shape)

    below = arr < eps
    if np.any(below):
        exponent = eps / (arr[below] - eps)
        live = exponent > EXP_FLOOR
        e = np.exp(exponent[live])
        b = np.zeros(exponent.shape)
        p = np.zeros(exponent.shape)
        b[live] = -e
        p[live] = exponent[live] ** 2 / eps * e
        beta[below] = b
        prime[below] = p

    if arr.ndim == 0:
        return float(beta), float(prime)
    return beta, prime


def penalty_beta(params: PenaltyParams, s: ArrayLike):
    return beta_and_prime(params, s)[0]


def equilibrium_gap(eps: float, forcing: float) -> float:
    """Gap s < eps where beta_eps(s) = -forcing, for 0 < forcing < 1."""
    if not 0.0 < forcing < 1.0:
        raise ValueError(f"penalty can only balance forcing in (0, 1), got {forcing}")
    return eps * (1.0 + 1.0 / np.log(forcing))
