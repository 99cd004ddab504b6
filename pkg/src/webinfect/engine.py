"""Seeded Monte Carlo over a population of sites.

Each run starts with every site clean and, per step, first advances every
site one transition (synchronously, from the pre-step states) and then
measures exposure and loss as fractions of total traffic.

Run ``k`` draws all of its randomness from its own generator seeded by
``SeedSequence(seed, spawn_key=(0, k))``: first the population (only when
resampling per run), then one ``(steps, n)`` block of uniforms driving the
transitions. Results therefore do not depend on how runs are batched or
spread over workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import RangeError
from .model import ModelParams, ServerState, State, advance, transition_matrix, transition_thresholds
from .popularity import Population, PopularitySpec, sample, sample_weights, tail_ratio

RUN_STREAM = 0
POPULATION_STREAM = 1
# uniforms held in memory per batch of runs
BATCH_BUDGET = 4_000_000

Intervention = Literal["depreference", "blacklist"]


@dataclass(frozen=True)
class SimConfig:
    """Everything that determines an ensemble.

    Attributes:
        params: rates and intervention knobs.
        population: a fixed :class:`Population`, or a :class:`PopularitySpec`
            sampled once per ensemble (or once per run with
            ``resample_population_per_run``).
        steps: time steps per run.
        runs: number of independent runs.
        burn_in: steps discarded before steady-state averages.
        seed: 64-bit master seed.
        resample_population_per_run: draw a fresh population in every run.
        intervention: ``"depreference"`` scales flagged traffic by
            ``sigma`` per step; ``"blacklist"`` zeroes it and ignores sigma.
    """

    params: ModelParams
    population: Population | PopularitySpec
    steps: int = 75
    runs: int = 1000
    burn_in: int = 50
    seed: int = 0
    resample_population_per_run: bool = False
    intervention: Intervention = "depreference"

    def __post_init__(self) -> None:
        if not isinstance(self.params, ModelParams):
            raise TypeError("params must be a ModelParams")
        if not isinstance(self.population, (Population, PopularitySpec)):
            raise TypeError("population must be a Population or PopularitySpec")
        if self.steps < 1:
            raise RangeError(f"steps must be positive, got {self.steps}")
        if self.runs < 1:
            raise RangeError(f"runs must be positive, got {self.runs}")
        if not 0 <= self.burn_in < self.steps:
            raise RangeError(f"burn_in must satisfy 0 <= burn_in < steps, got {self.burn_in}")
        if not 0 <= self.seed < 2**64:
            raise RangeError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.resample_population_per_run and not isinstance(self.population, PopularitySpec):
            raise RangeError("resampling per run needs a PopularitySpec, not a fixed Population")
        if self.intervention not in ("depreference", "blacklist"):
            raise RangeError(f"unknown intervention {self.intervention!r}")

    @property
    def n(self) -> int:
        return self.population.n


@dataclass(frozen=True)
class TimeSeries:
    exposure: np.ndarray
    loss: np.ndarray
    state_counts: np.ndarray
    tail_ratio: float


@dataclass(frozen=True)
class EnsembleSummary:
    mean_exposure_t: np.ndarray
    var_exposure_t: np.ndarray
    mean_loss_t: np.ndarray
    var_loss_t: np.ndarray
    steady_exposure: float
    steady_loss: float
    per_run_steady_exposure: np.ndarray
    per_run_steady_loss: np.ndarray
    exposure_runs: np.ndarray
    loss_runs: np.ndarray
    tail_ratios: np.ndarray
    burn_in: int

    @property
    def runs(self) -> int:
        return self.exposure_runs.shape[0]


def traffic_factor(durations, beta: int, sigma: float, intervention: Intervention = "depreference"):
    """Fraction of a flagged site's traffic that still arrives after ``durations`` steps flagged."""
    d = np.asarray(durations)
    detected = d >= beta
    if intervention == "blacklist":
        return np.where(detected, 0.0, 1.0)
    return np.where(detected, sigma ** np.maximum(d - beta + 1, 0), 1.0)


def effective_traffic(
    omega: float, server: ServerState, params: ModelParams, intervention: Intervention = "depreference"
) -> float:
    """Traffic a site receives this step.

    Clean sites keep their full weight. Infected and flagged sites keep it
    for the first ``beta`` steps, then lose a factor ``sigma`` per step.
    """
    if omega < 0:
        raise RangeError(f"omega must be nonnegative, got {omega!r}")
    if server.state == State.N:
        return float(omega)
    factor = traffic_factor(server.duration, params.beta, params.sigma, intervention)
    return float(omega * factor)


def blacklisted_traffic(omega: float, server: ServerState, beta: int) -> float:
    """Traffic under plain blacklisting: all or nothing once ``beta`` steps have passed."""
    if server.state == State.N or server.duration < beta:
        return float(omega)
    return 0.0


def _run_generator(seed: int, run_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(RUN_STREAM, run_index)))


def fixed_population(config: SimConfig) -> Population | None:
    """The population shared by all runs, or None when each run draws its own."""
    if config.resample_population_per_run:
        return None
    if isinstance(config.population, Population):
        return config.population
    rng = np.random.default_rng(
        np.random.SeedSequence(config.seed, spawn_key=(POPULATION_STREAM,))
    )
    return sample(config.population, rng)


def _simulate_batch(config: SimConfig, population: Population | None, run_indices) -> dict:
    steps, n, params = config.steps, config.n, config.params
    size = len(run_indices)
    weights = np.empty((size, n))
    uniforms = np.empty((size, steps, n))
    for row, k in enumerate(run_indices):
        rng = _run_generator(config.seed, k)
        if population is None:
            weights[row] = sample_weights(config.population, rng)
        else:
            weights[row] = population.weights
        uniforms[row] = rng.random((steps, n))
    totals = weights.sum(axis=1)
    ratios = np.array([tail_ratio(w) for w in weights])

    thresholds = transition_thresholds(transition_matrix(params))
    states = np.zeros((size, n), dtype=np.int8)
    durations = np.zeros((size, n), dtype=np.int64)
    exposure = np.empty((size, steps))
    loss = np.empty((size, steps))
    counts = np.empty((size, steps, 3), dtype=np.int64)
    for t in range(steps):
        states, durations = advance(states, durations, uniforms[:, t, :], thresholds)
        factor = traffic_factor(durations, params.beta, params.sigma, config.intervention)
        effective = weights * factor
        infected = states == State.I
        flagged = states == State.F
        exposure[:, t] = np.where(infected, effective, 0.0).sum(axis=1) / totals
        loss[:, t] = np.where(flagged, weights - effective, 0.0).sum(axis=1) / totals
        counts[:, t, State.I] = infected.sum(axis=1)
        counts[:, t, State.F] = flagged.sum(axis=1)
        counts[:, t, State.N] = n - counts[:, t, State.I] - counts[:, t, State.F]
    return {"exposure": exposure, "loss": loss, "counts": counts, "tail_ratios": ratios}


def _batch_size(config: SimConfig) -> int:
    return max(1, BATCH_BUDGET // (config.steps * config.n))


def run(config: SimConfig, run_index: int) -> TimeSeries:
    """Simulate run ``run_index`` of the ensemble described by ``config``."""
    if not 0 <= run_index:
        raise RangeError(f"run_index must be nonnegative, got {run_index}")
    out = _simulate_batch(config, fixed_population(config), [run_index])
    return TimeSeries(
        exposure=out["exposure"][0],
        loss=out["loss"][0],
        state_counts=out["counts"][0],
        tail_ratio=float(out["tail_ratios"][0]),
    )


def steady_state_estimate(ts: TimeSeries, burn_in: int) -> tuple[float, float]:
    steps = len(ts.exposure)
    if not 0 <= burn_in < steps:
        raise RangeError(f"burn_in must satisfy 0 <= burn_in < {steps}, got {burn_in}")
    return float(np.mean(ts.exposure[burn_in:])), float(np.mean(ts.loss[burn_in:]))


def _across_runs_var(values: np.ndarray) -> np.ndarray:
    if values.shape[0] == 1:
        return np.zeros(values.shape[1:])
    return values.var(axis=0, ddof=1)


def ensemble(config: SimConfig, workers: int = 1) -> EnsembleSummary:
    """Run ``config.runs`` runs and aggregate them.

    ``workers`` only changes how batches are scheduled; the summary is
    identical for any value.
    """
    population = fixed_population(config)
    size = _batch_size(config)
    batches = [range(start, min(start + size, config.runs)) for start in range(0, config.runs, size)]
    if workers > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _simulate_batch(config, population, b), batches))
    else:
        parts = [_simulate_batch(config, population, b) for b in batches]
    exposure = np.concatenate([p["exposure"] for p in parts])
    loss = np.concatenate([p["loss"] for p in parts])
    ratios = np.concatenate([p["tail_ratios"] for p in parts])

    steady_x = exposure[:, config.burn_in :].mean(axis=1)
    steady_l = loss[:, config.burn_in :].mean(axis=1)
    return EnsembleSummary(
        mean_exposure_t=exposure.mean(axis=0),
        var_exposure_t=_across_runs_var(exposure),
        mean_loss_t=loss.mean(axis=0),
        var_loss_t=_across_runs_var(loss),
        steady_exposure=float(steady_x.mean()),
        steady_loss=float(steady_l.mean()),
        per_run_steady_exposure=steady_x,
        per_run_steady_loss=steady_l,
        exposure_runs=exposure,
        loss_runs=loss,
        tail_ratios=ratios,
        burn_in=config.burn_in,
    )


def standard_error(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return math.inf
    return float(values.std(ddof=1) / math.sqrt(values.size))
