"""Reference computations that share no code with the package's closed forms."""

import numpy as np

SERIES_LENGTH = 10_000


def power_iterate(matrix, tol=1e-16, max_iter=200_000):
    v = np.full(matrix.shape[0], 1.0 / matrix.shape[0])
    for _ in range(max_iter):
        nxt = v @ matrix
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - v)) <= tol:
            return nxt
        v = nxt
    return v


def detection_weights(durations, beta, sigma):
    """Share of traffic kept after each duration, built term by term."""
    out = np.ones(len(durations))
    for i, d in enumerate(durations):
        if d >= beta:
            out[i] = sigma ** (d - beta + 1)
    return out


def infected_series(rho, gamma, length=SERIES_LENGTH):
    """Stationary mass of 'infected for exactly x steps', x = 0..length."""
    p_infected = rho / (rho + gamma)
    x = np.arange(length + 1)
    return x, rho * (1 - p_infected) * (1 - gamma) ** x


def flagged_series(rho, gamma, f, length=SERIES_LENGTH):
    p_clean = gamma / (f + rho + gamma)
    x = np.arange(length + 1)
    return x, f * p_clean * (1 - gamma - rho) ** x


def exposure_series(rho, gamma, beta, sigma, omega=1.0, length=SERIES_LENGTH):
    x, mass = infected_series(rho, gamma, length)
    return float(np.sum(omega * mass * detection_weights(x, beta, sigma)))


def loss_series(rho, gamma, f, beta, sigma, omega=1.0, length=SERIES_LENGTH):
    x, mass = flagged_series(rho, gamma, f, length)
    return float(np.sum(omega * mass * (1 - detection_weights(x, beta, sigma))))


def site_moments(rho, gamma, f, beta, sigma, length=SERIES_LENGTH):
    """First two moments of one unit-weight site's exposure and loss."""
    x, infected = infected_series(rho, gamma, length)
    _, flagged = flagged_series(rho, gamma, f, length)
    w = detection_weights(x, beta, sigma)
    return {
        "exposure": (np.sum(infected * w), np.sum(infected * w**2)),
        "loss": (np.sum(flagged * (1 - w)), np.sum(flagged * (1 - w) ** 2)),
    }


def population_variance(moments, weights):
    weights = np.asarray(weights, dtype=float)
    mean, second = moments
    return float((second - mean**2) * np.sum(weights**2) / np.sum(weights) ** 2)
