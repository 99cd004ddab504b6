"""Website popularity samples and the tail ratio that drives outcome variance."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from os import PathLike
from typing import Literal

import numpy as np

from .errors import EmptyPopulationError, SpecError

DEFAULT_ALPHA = 1.4


@dataclass(frozen=True, slots=True)
class PopularitySpec:
    """Distribution of site weights.

    ``kind="uniform"`` draws from ``Uniform(lo, hi)``. ``kind="powerlaw"``
    draws from the Pareto density ``~ x**-alpha`` on ``[x_min, x_max]``;
    ``x_max=None`` leaves it untruncated. With ``1 < alpha < 2`` the
    untruncated law has infinite mean.
    """

    kind: Literal["uniform", "powerlaw"] = "uniform"
    n: int = 1000
    lo: float = 0.0
    hi: float = 1.0
    alpha: float = DEFAULT_ALPHA
    x_min: float = 1.0
    x_max: float | None = None

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise SpecError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if self.kind == "uniform":
            if not (0.0 <= self.lo < self.hi) or not math.isfinite(self.hi):
                raise SpecError(f"uniform needs 0 <= lo < hi, got lo={self.lo}, hi={self.hi}")
        elif self.kind == "powerlaw":
            if not self.alpha > 1.0:
                raise SpecError(f"power-law exponent must exceed 1, got {self.alpha}")
            if not (self.x_min > 0.0 and math.isfinite(self.x_min)):
                raise SpecError(f"x_min must be positive, got {self.x_min}")
            if self.x_max is not None and not self.x_max > self.x_min:
                raise SpecError(f"x_max must exceed x_min, got {self.x_max}")
        else:
            raise SpecError(f"unknown popularity kind {self.kind!r}")

    @classmethod
    def uniform(cls, n: int, lo: float = 0.0, hi: float = 1.0) -> "PopularitySpec":
        return cls(kind="uniform", n=n, lo=lo, hi=hi)

    @classmethod
    def powerlaw(
        cls, n: int, alpha: float = DEFAULT_ALPHA, x_min: float = 1.0, x_max: float | None = None
    ) -> "PopularitySpec":
        return cls(kind="powerlaw", n=n, alpha=alpha, x_min=x_min, x_max=x_max)


@dataclass(frozen=True)
class Population:
    weights: np.ndarray
    total: float = field(init=False)
    tail_ratio: float = field(init=False)

    def __post_init__(self) -> None:
        weights = np.array(self.weights, dtype=float)
        if weights.ndim != 1:
            raise SpecError("weights must be one-dimensional")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise SpecError("weights must be finite and nonnegative")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "tail_ratio", tail_ratio(weights))
        object.__setattr__(self, "total", float(weights.sum()))

    @property
    def n(self) -> int:
        return self.weights.size


def tail_ratio(weights) -> float:
    """``sum(w**2) / sum(w)**2``: 1/n for equal weights, 1 when one site holds all traffic.

    The weights are rescaled by their maximum first so heavy-tailed draws
    cannot overflow when squared.
    """
    w = np.asarray(weights, dtype=float)
    if w.size == 0 or not np.any(w > 0):
        raise EmptyPopulationError("tail ratio needs at least one positive weight")
    w = w / w.max()
    total = w.sum()
    return float(np.dot(w, w) / (total * total))


def powerlaw_inverse_cdf(u, alpha: float = DEFAULT_ALPHA, x_min: float = 1.0, x_max: float | None = None):
    """Map uniform draws ``u`` in [0, 1) to Pareto variates with density ``~ x**-alpha``."""
    u = np.asarray(u, dtype=float)
    exponent = -1.0 / (alpha - 1.0)
    if x_max is None:
        return x_min * (1.0 - u) ** exponent
    # truncated: invert F(x) = (1 - (x/x_min)**(1-alpha)) / (1 - (x_max/x_min)**(1-alpha))
    upper_mass = 1.0 - (x_max / x_min) ** (1.0 - alpha)
    return x_min * (1.0 - u * upper_mass) ** exponent


def powerlaw_cdf(x, alpha: float = DEFAULT_ALPHA, x_min: float = 1.0, x_max: float | None = None):
    x = np.maximum(np.asarray(x, dtype=float), x_min)
    mass = 1.0 - (x / x_min) ** (1.0 - alpha)
    if x_max is None:
        return mass
    return np.minimum(mass / (1.0 - (x_max / x_min) ** (1.0 - alpha)), 1.0)


def sample_weights(spec: PopularitySpec, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(spec.n)
    if spec.kind == "uniform":
        return spec.lo + (spec.hi - spec.lo) * u
    return powerlaw_inverse_cdf(u, spec.alpha, spec.x_min, spec.x_max)


def sample(spec: PopularitySpec, rng: np.random.Generator) -> Population:
    """Draw ``spec.n`` independent site weights.

    Both kinds consume exactly ``spec.n`` uniforms from ``rng``. A uniform
    draw on ``[0, hi)`` can in principle be all zeros; that raises
    :class:`EmptyPopulationError`.
    """
    return Population(sample_weights(spec, rng))


def load_weights(path: str | PathLike) -> Population:
    """Read one weight per line from a text file; blank lines and ``#`` comments are skipped."""
    weights = np.loadtxt(path, dtype=float, comments="#", ndmin=1)
    if weights.ndim != 1:
        raise SpecError(f"{path}: expected a single column of weights")
    return Population(weights)
