"""Three-state website infection chain.

Every site is in one of three states at each discrete step:

* ``N``: clean,
* ``I``: infected,
* ``F``: clean but wrongly flagged as infected.

Per-step transitions (rows and columns ordered N, I, F)::

    N -> (1 - rho - f, rho,       f            )
    I -> (gamma,       1 - gamma, 0            )
    F -> (gamma,       rho,       1 - gamma - rho)

An infected site is never flagged as a false positive; a flagged site can
become genuinely infected, which starts a fresh infection.
"""

from __future__ import annotations

import enum
import numbers
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ErgodicityError, RangeError, StochasticityError

ROW_SUM_TOL = 1e-12


class State(enum.IntEnum):
    N = 0
    I = 1  # noqa: E741
    F = 2


@dataclass(frozen=True, slots=True)
class ModelParams:
    """Rates and intervention knobs for one scenario.

    Construction checks ranges and row-stochasticity. Ergodicity is a
    separate check (:func:`validate`) because some degenerate chains are
    still useful, e.g. the identity chain at ``rho = gamma = f = 0``.

    Attributes:
        rho: per-step infection probability.
        gamma: per-step recovery probability (real and false infections).
        f: per-step probability a clean site is flagged.
        beta: detection delay in steps before an intervention applies.
        sigma: per-step traffic retention once the intervention applies;
            0 is blacklisting, 1 is no intervention.
    """

    rho: float
    gamma: float
    f: float = 0.0
    beta: int = 0
    sigma: float = 1.0

    def __post_init__(self) -> None:
        for name in ("rho", "gamma", "f", "sigma"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, numbers.Real):
                raise RangeError(f"{name} must be a real number, got {value!r}")
            value = float(value)
            if not 0.0 <= value <= 1.0:
                raise RangeError(f"{name} must lie in [0, 1], got {value!r}")
            object.__setattr__(self, name, value)
        beta = self.beta
        if isinstance(beta, bool) or not isinstance(beta, numbers.Real) or beta != int(beta):
            raise RangeError(f"beta must be a nonnegative integer, got {beta!r}")
        if beta < 0:
            raise RangeError(f"beta must be a nonnegative integer, got {beta!r}")
        object.__setattr__(self, "beta", int(beta))
        if self.rho + self.f > 1.0:
            raise StochasticityError(
                f"rho + f must not exceed 1 (rho={self.rho}, f={self.f})"
            )
        if self.rho + self.gamma > 1.0:
            raise StochasticityError(
                f"rho + gamma must not exceed 1 (rho={self.rho}, gamma={self.gamma})"
            )

    def replace(self, **changes) -> "ModelParams":
        fields = {
            "rho": self.rho,
            "gamma": self.gamma,
            "f": self.f,
            "beta": self.beta,
            "sigma": self.sigma,
        }
        fields.update(changes)
        return ModelParams(**fields)


@dataclass(frozen=True, slots=True)
class ServerState:
    """A site's state plus the number of steps it has spent there (0 on entry)."""

    state: State
    duration: int = 0


class StationaryDistribution(NamedTuple):
    infected: float
    clean: float
    flagged: float


def transition_matrix(params: ModelParams) -> np.ndarray:
    rho, gamma, f = params.rho, params.gamma, params.f
    return np.array(
        [
            [1.0 - rho - f, rho, f],
            [gamma, 1.0 - gamma, 0.0],
            [gamma, rho, 1.0 - gamma - rho],
        ]
    )


def _closed_classes(matrix: np.ndarray) -> list[list[int]]:
    size = matrix.shape[0]
    reach = (matrix > 0) | np.eye(size, dtype=bool)
    for k in range(size):
        reach |= reach[:, [k]] & reach[[k], :]
    classes = []
    seen = set()
    for i in range(size):
        if i in seen:
            continue
        # recurrent iff every state reachable from i leads back to i
        if all(reach[j, i] for j in range(size) if reach[i, j]):
            members = [j for j in range(size) if reach[i, j]]
            seen.update(members)
            classes.append(members)
    return classes


def _is_primitive(block: np.ndarray) -> bool:
    m = block.shape[0]
    power = np.linalg.matrix_power((block > 0).astype(float), (m - 1) ** 2 + 1)
    return bool(np.all(power > 0))


def is_ergodic(params: ModelParams) -> bool:
    """True when the chain has a single closed class and it is aperiodic.

    Transient states are allowed (``rho = 0`` makes ``I`` transient), since
    the chain still converges to a unique limit from any start.
    """
    matrix = transition_matrix(params)
    classes = _closed_classes(matrix)
    if len(classes) != 1:
        return False
    members = classes[0]
    return _is_primitive(matrix[np.ix_(members, members)])


def validate(params: ModelParams) -> ModelParams:
    """Return ``params`` unchanged if every invariant holds, otherwise raise.

    Range and row-sum violations are already rejected when the
    :class:`ModelParams` is built; this adds the ergodicity guard.
    """
    if not isinstance(params, ModelParams):
        raise TypeError(f"expected ModelParams, got {type(params).__name__}")
    if not is_ergodic(params):
        raise ErgodicityError(
            "transition chain is not ergodic for "
            f"rho={params.rho}, gamma={params.gamma}, f={params.f}"
        )
    return params


def stationary_distribution(params: ModelParams) -> StationaryDistribution:
    validate(params)
    rho, gamma, f = params.rho, params.gamma, params.f
    infected = rho / (rho + gamma)
    clean = gamma / (f + rho + gamma)
    flagged = f * gamma / ((gamma + rho) * (f + gamma + rho))
    return StationaryDistribution(infected, clean, flagged)


def infected_duration_pmf(params: ModelParams, x: int) -> float:
    """Stationary probability that a site has been infected for exactly ``x`` steps."""
    if x < 0:
        raise RangeError(f"duration must be nonnegative, got {x}")
    p_infected = stationary_distribution(params).infected
    return params.rho * (1.0 - p_infected) * (1.0 - params.gamma) ** x


def false_duration_pmf(params: ModelParams, x: int) -> float:
    """Stationary probability that a site has been falsely flagged for exactly ``x`` steps."""
    if x < 0:
        raise RangeError(f"duration must be nonnegative, got {x}")
    p_clean = stationary_distribution(params).clean
    return params.f * p_clean * (1.0 - (params.gamma + params.rho)) ** x


def transition_thresholds(matrix: np.ndarray) -> np.ndarray:
    """Inverse-CDF cut points for sampling each row of ``matrix``.

    Row ``s`` maps a uniform draw ``u`` to ``N`` if ``u < t0``, ``I`` if
    ``u < t1``, else ``F``. Zero-probability targets get cut points that
    can never select them, so rounding in ``t0 + p_I`` cannot leak mass
    into a forbidden transition.
    """
    t0 = matrix[:, 0].copy()
    t1 = t0 + matrix[:, 1]
    t1[matrix[:, 2] == 0.0] = np.inf
    return np.column_stack([t0, t1])


def advance(
    states: np.ndarray, durations: np.ndarray, u: np.ndarray, thresholds: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Advance a vector of sites by one step given uniform draws ``u``."""
    cuts = thresholds[states]
    new_states = (u >= cuts[..., 0]).astype(np.int8) + (u >= cuts[..., 1])
    new_states = new_states.astype(np.int8)
    new_durations = np.where(new_states == states, durations + 1, 0)
    return new_states, new_durations


def step_server(
    server: ServerState, params: ModelParams, rng: np.random.Generator
) -> ServerState:
    """Sample one transition for a single site."""
    thresholds = transition_thresholds(transition_matrix(params))
    states, durations = advance(
        np.array([int(server.state)], dtype=np.int8),
        np.array([server.duration]),
        np.array([rng.random()]),
        thresholds,
    )
    return ServerState(State(int(states[0])), int(durations[0]))
