"""Empirical performance measures for reliability estimators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import InvalidArgument


def observed_error(estimate, truth):
    """Observed multiplicative error.

    (u_hat - u) / u when u_hat > u, else (u_hat - u) / u_hat, so its magnitude
    is |u_hat - u| / min(u_hat, u).
    """
    if estimate <= 0 or truth <= 0:
        raise InvalidArgument(
            f"observed error needs positive estimate and truth, got {estimate}, {truth}")
    if estimate > truth:
        return (estimate - truth) / truth
    return (estimate - truth) / estimate


def observed_confidence(errors: Sequence[float], eps: float) -> float:
    """Fraction of runs whose |observed error| reached eps."""
    if len(errors) == 0:
        raise InvalidArgument("no errors given")
    if not 0 < eps < 1:
        raise InvalidArgument(f"eps must lie in (0, 1), got {eps}")
    return sum(1 for e in errors if abs(e) >= eps) / len(errors)


@dataclass(frozen=True)
class ErrorStats:
    errors: tuple[float, ...]
    eps_target: float
    delta_observed: float

    @classmethod
    def from_errors(cls, errors, eps):
        errors = tuple(errors)
        return cls(errors, eps, observed_confidence(errors, eps))


def _positive(**kwargs):
    for name, value in kwargs.items():
        if not value > 0:
            raise InvalidArgument(f"{name} must be positive, got {value}")


def cmc_variance(mean: float, n: int) -> float:
    """Variance of the crude Monte Carlo mean over n samples."""
    return mean * (1.0 - mean) / n


def efficiency_ratio(var_cmc, tau_cmc, var_a, tau_a):
    """(var_CMC / var_A) * (tau_CMC / tau_A); below 1 plain CMC is preferable."""
    _positive(var_cmc=var_cmc, tau_cmc=tau_cmc, var_a=var_a, tau_a=tau_a)
    return (var_cmc / var_a) * (tau_cmc / tau_a)


def wnrv(tau, variance, mean):
    """Work-normalised relative variance tau * sigma^2 / mu^2."""
    if not mean > 0:
        raise InvalidArgument(f"mean must be positive, got {mean}")
    return tau * variance / mean ** 2
