import numpy as np
import pytest

from webinfect.model import ModelParams

_criteria = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    number, title = marker.args
    detail = dict(item.user_properties).get("detail", "")
    _criteria.append((number, title, report.outcome, detail))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, outcome, detail in sorted(_criteria):
        status = "PASS" if outcome == "passed" else "FAIL"
        line = f"[{status}] {number:>2}. {title}"
        if detail:
            line += f" -- {detail}"
        terminalreporter.write_line(line)


@pytest.fixture
def baseline():
    """Experiment defaults with no intervention."""
    return ModelParams(rho=0.01, gamma=0.1, f=0.0, beta=0, sigma=1.0)


def random_params(rng: np.random.Generator, *, gamma=(0.01, 0.3), rho=(0.001, 0.1), f=(0.001, 0.5), beta=(0, 20)):
    """Draw a valid parameter set from simple box ranges."""
    g = rng.uniform(*gamma)
    r = min(rng.uniform(*rho), 1.0 - g)
    ff = min(rng.uniform(*f), 1.0 - r)
    return ModelParams(
        rho=r, gamma=g, f=ff, beta=int(rng.integers(beta[0], beta[1] + 1)), sigma=rng.uniform(0.0, 1.0)
    )
