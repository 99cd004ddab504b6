"""Closed-form steady-state exposure and loss under interventions.

Exposure is the fraction of all traffic that lands on infected sites; loss
is the fraction of all traffic withheld from falsely flagged sites. Both
are independent of the popularity distribution and of ``n``; only the
variances depend on the population, through the tail ratio
``sum(w**2) / sum(w)**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateError, DenominatorError, RangeError, SingularityError
from .model import ModelParams, StationaryDistribution, stationary_distribution, validate

MIN_RATE_SUM = 1e-4
# solver outputs within this distance of [0, 1] are treated as on the boundary
FEASIBILITY_SLACK = 1e-12


@dataclass(frozen=True, slots=True)
class CriticalValue:
    sigma: float
    feasible: bool

    @classmethod
    def from_sigma(cls, sigma: float) -> "CriticalValue":
        if -FEASIBILITY_SLACK <= sigma < 0.0:
            sigma = 0.0
        elif 1.0 < sigma <= 1.0 + FEASIBILITY_SLACK:
            sigma = 1.0
        return cls(sigma, 0.0 <= sigma <= 1.0)


@dataclass(frozen=True, slots=True)
class AnalyticReport:
    params: ModelParams
    tail_ratio: float
    stationary: StationaryDistribution
    expected_exposure: float
    expected_loss: float
    var_exposure: float
    var_loss: float


def _tail_denominator(sigma: float, rate: float) -> float:
    """``1 - sigma * (1 - rate)``, written so that ``sigma = 1`` gives exactly ``rate``."""
    return (1.0 - sigma) + sigma * rate


def _check_rates(params: ModelParams) -> None:
    validate(params)
    if params.rho + params.gamma < MIN_RATE_SUM:
        raise DegenerateError(
            f"rho + gamma = {params.rho + params.gamma} is below {MIN_RATE_SUM}"
        )


def _check_tail_ratio(tail_ratio: float) -> None:
    if not 0.0 < tail_ratio <= 1.0:
        raise RangeError(f"tail_ratio must lie in (0, 1], got {tail_ratio!r}")


def exposure_closed_form(rho: float, gamma: float, beta: int, sigma: float) -> float:
    """Expected exposure fraction with no parameter validation.

    ``gamma == 0`` uses the limit ``(1 - (1 - gamma)**beta) / gamma -> beta``.
    """
    keep = 1.0 - gamma
    tail = _tail_denominator(sigma, gamma)
    if tail == 0.0:
        raise SingularityError("sigma * (1 - gamma) == 1: the tail series diverges")
    if gamma == 0.0:
        return 0.0
    scale = rho * gamma / (rho + gamma)
    undetected = (1.0 - keep**beta) / gamma
    detected = sigma * keep**beta / tail
    return scale * (undetected + detected)


def loss_closed_form(rho: float, gamma: float, f: float, beta: int, sigma: float) -> float:
    """Expected loss fraction with no parameter validation.

    Accepts values such as ``f = 1`` that no valid chain allows, which is
    handy for limits.
    """
    rate = gamma + rho
    keep = 1.0 - rate
    tail = _tail_denominator(sigma, rate)
    if tail == 0.0:
        raise SingularityError("sigma * (1 - gamma - rho) == 1: the tail series diverges")
    if rate == 0.0:
        raise DegenerateError("gamma + rho == 0")
    scale = f * gamma * keep**beta / (f + rate)
    # + 0.0 turns a -0.0 from f == 0 into 0.0
    return scale * (1.0 / rate - sigma / tail) + 0.0


def expected_exposure(params: ModelParams) -> float:
    _check_rates(params)
    return exposure_closed_form(params.rho, params.gamma, params.beta, params.sigma)


def expected_loss(params: ModelParams) -> float:
    _check_rates(params)
    return loss_closed_form(params.rho, params.gamma, params.f, params.beta, params.sigma)


def per_site_scaling(omega: float, population_fraction: float) -> float:
    """Turn a population fraction into the expected traffic for one site of weight ``omega``."""
    if omega < 0:
        raise RangeError(f"omega must be nonnegative, got {omega!r}")
    return omega * population_fraction


def variance_exposure(params: ModelParams, tail_ratio: float) -> float:
    """Variance of the exposure fraction at a single steady-state step.

    Each site's weight factor has second moment equal to the exposure at
    ``sigma**2``, and sites are independent, so the per-site variances
    add up scaled by the tail ratio.
    """
    _check_tail_ratio(tail_ratio)
    mean = expected_exposure(params)
    second = expected_exposure(params.replace(sigma=params.sigma**2))
    # rounding can push an exactly-zero variance a hair below zero
    return max(second - mean**2, 0.0) * tail_ratio


def variance_loss(params: ModelParams, tail_ratio: float) -> float:
    """Variance of the loss fraction at a single steady-state step.

    The tail factor is ``sum(w**2) / sum(w)**2``, the same one as for
    exposure.
    """
    _check_tail_ratio(tail_ratio)
    mean = expected_loss(params)
    squared = expected_loss(params.replace(sigma=params.sigma**2))
    return max(2.0 * mean - squared - mean**2, 0.0) * tail_ratio


def sigma_for_exposure(params: ModelParams, target: float) -> CriticalValue:
    """Depreferencing factor that yields expected exposure ``target``.

    ``params.sigma`` is ignored. Targets outside
    ``[expected_exposure(sigma=0), p_infected]`` come back flagged
    infeasible.
    """
    _check_rates(params)
    rho, gamma, beta = params.rho, params.gamma, params.beta
    if rho == 0.0 or gamma == 0.0:
        raise DegenerateError("exposure does not depend on sigma when rho or gamma is 0")
    keep = 1.0 - gamma
    scale = rho * gamma / (rho + gamma)
    # target - E[X(beta, 0)], divided by the prefactor; exact zero at the lower end
    excess = (target - scale * ((1.0 - keep**beta) / gamma)) / scale
    denominator = keep * excess + keep**beta
    if denominator == 0.0:
        raise DenominatorError(f"zero denominator solving for sigma at target {target!r}")
    return CriticalValue.from_sigma(excess / denominator)


def sigma_for_loss(params: ModelParams, target: float) -> CriticalValue:
    """Depreferencing factor that yields expected loss ``target``; ``params.sigma`` is ignored."""
    _check_rates(params)
    rho, gamma, f, beta = params.rho, params.gamma, params.f, params.beta
    rate = gamma + rho
    keep = 1.0 - rate
    prefactor = f * gamma * keep**beta / (f + rate)
    if prefactor == 0.0:
        raise DenominatorError("loss is identically zero; sigma is not identifiable")
    # 1/(gamma+rho) - sigma/(1 - sigma*keep) solved for the bracket value
    bracket = 1.0 / rate - target / prefactor
    denominator = 1.0 + keep * bracket
    if denominator == 0.0:
        raise DenominatorError(f"zero denominator solving for sigma at target {target!r}")
    return CriticalValue.from_sigma(bracket / denominator)


def critical_sigma_exposure(params: ModelParams, new_beta: int) -> CriticalValue:
    """Sigma that keeps expected exposure unchanged when beta moves to ``new_beta``.

    The base point is ``(params.beta, params.sigma)``.
    """
    _check_rates(params)
    gamma, beta, sigma = params.gamma, params.beta, params.sigma
    if new_beta < 0 or new_beta != int(new_beta):
        raise RangeError(f"new_beta must be a nonnegative integer, got {new_beta!r}")
    keep = 1.0 - gamma
    tail = _tail_denominator(sigma, gamma)
    if tail == 0.0:
        raise SingularityError("sigma * (1 - gamma) == 1")
    if new_beta == beta:
        return CriticalValue.from_sigma(sigma)
    try:
        shift = keep ** (beta - int(new_beta))
    except ZeroDivisionError:
        return CriticalValue(math.inf, False)
    a = 1.0 - shift + sigma * gamma * shift / tail
    denominator = gamma + a * keep
    if denominator == 0.0:
        return CriticalValue(math.copysign(math.inf, a), False)
    return CriticalValue.from_sigma(a / denominator)


def critical_sigma_loss(params: ModelParams, new_beta: int) -> CriticalValue:
    """Sigma that keeps expected loss unchanged when beta moves to ``new_beta``.

    Does not depend on ``f``.
    """
    _check_rates(params)
    rho, gamma, beta, sigma = params.rho, params.gamma, params.beta, params.sigma
    if new_beta < 0 or new_beta != int(new_beta):
        raise RangeError(f"new_beta must be a nonnegative integer, got {new_beta!r}")
    rate = gamma + rho
    keep = 1.0 - rate
    tail = _tail_denominator(sigma, rate)
    if tail == 0.0:
        raise SingularityError("sigma * (1 - gamma - rho) == 1")
    if new_beta == beta:
        return CriticalValue.from_sigma(sigma)
    try:
        shift = keep ** (beta - int(new_beta))
    except ZeroDivisionError:
        return CriticalValue(math.inf, False)
    b = 1.0 / rate - shift * (1.0 / rate - sigma / tail)
    denominator = 1.0 + b * keep
    if denominator == 0.0:
        return CriticalValue(math.copysign(math.inf, b), False)
    return CriticalValue.from_sigma(b / denominator)


def analyze(params: ModelParams, tail_ratio: float = 1.0) -> AnalyticReport:
    return AnalyticReport(
        params=params,
        tail_ratio=tail_ratio,
        stationary=stationary_distribution(params),
        expected_exposure=expected_exposure(params),
        expected_loss=expected_loss(params),
        var_exposure=variance_exposure(params, tail_ratio),
        var_loss=variance_loss(params, tail_ratio),
    )
