"""Search-engine interventions against website infections: exact analytics and Monte Carlo."""

from .analytics import (
    AnalyticReport,
    CriticalValue,
    analyze,
    critical_sigma_exposure,
    critical_sigma_loss,
    expected_exposure,
    expected_loss,
    per_site_scaling,
    sigma_for_exposure,
    sigma_for_loss,
    variance_exposure,
    variance_loss,
)
from .engine import EnsembleSummary, SimConfig, TimeSeries, effective_traffic, ensemble, run, steady_state_estimate
from .model import (
    ModelParams,
    ServerState,
    State,
    false_duration_pmf,
    infected_duration_pmf,
    stationary_distribution,
    step_server,
    transition_matrix,
    validate,
)
from .popularity import Population, PopularitySpec, load_weights, sample, tail_ratio

__version__ = "0.1.0"
