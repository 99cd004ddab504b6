import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats

from webinfect.errors import EmptyPopulationError, SpecError
from webinfect.popularity import (
    Population,
    PopularitySpec,
    load_weights,
    powerlaw_cdf,
    powerlaw_inverse_cdf,
    sample,
    tail_ratio,
)


def test_uniform_moments():
    pop = sample(PopularitySpec.uniform(100_000), np.random.default_rng(11))
    assert pop.weights.mean() == pytest.approx(0.5, abs=0.005)
    # E[w^2] / (n E[w]^2) = (1/12 + 1/4) / (n / 4)
    assert pop.tail_ratio == pytest.approx((1 / 12 + 1 / 4) / (100_000 / 4), rel=0.2)
    assert pop.tail_ratio == pytest.approx(1.333e-5, rel=0.2)


def test_powerlaw_inverse_transform_points():
    assert powerlaw_inverse_cdf(0.0, 1.4, 1.0) == 1.0
    assert powerlaw_inverse_cdf(0.99, 1.4, 1.0) == pytest.approx(0.01**-2.5, rel=1e-9)
    assert powerlaw_inverse_cdf(0.99, 1.4, 1.0) == pytest.approx(1e5, rel=1e-9)


def test_truncated_powerlaw_stays_in_bounds():
    u = np.linspace(0, 1, 101)
    x = powerlaw_inverse_cdf(u, 1.4, 2.0, 50.0)
    assert x[0] == pytest.approx(2.0)
    assert x[-1] == pytest.approx(50.0)
    np.testing.assert_allclose(powerlaw_cdf(x, 1.4, 2.0, 50.0), u, atol=1e-12)


def test_powerlaw_sample_matches_cdf():
    spec = PopularitySpec.powerlaw(100_000)
    pop = sample(spec, np.random.default_rng(12))
    statistic = stats.kstest(pop.weights, lambda x: powerlaw_cdf(x, 1.4, 1.0)).statistic
    assert statistic < 0.02


def test_powerlaw_tail_ratio_much_larger_than_uniform():
    rng = np.random.default_rng(13)
    heavy = [sample(PopularitySpec.powerlaw(1000), rng).tail_ratio for _ in range(100)]
    light = [sample(PopularitySpec.uniform(1000), rng).tail_ratio for _ in range(100)]
    assert np.median(heavy) >= 20 * np.median(light)


def test_sample_is_reproducible():
    spec = PopularitySpec.powerlaw(50)
    a = sample(spec, np.random.default_rng(7)).weights
    b = sample(spec, np.random.default_rng(7)).weights
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(kind="uniform", n=10, lo=1.0, hi=1.0),
        dict(kind="uniform", n=10, lo=-1.0, hi=1.0),
        dict(kind="powerlaw", n=10, alpha=1.0),
        dict(kind="powerlaw", n=10, x_min=0.0),
        dict(kind="powerlaw", n=10, x_max=0.5),
        dict(kind="uniform", n=0),
        dict(kind="gaussian", n=10),
    ],
)
def test_invalid_specs(kwargs):
    with pytest.raises(SpecError):
        PopularitySpec(**kwargs)


def test_tail_ratio_examples():
    assert tail_ratio(np.full(8, 3.0)) == pytest.approx(1 / 8)
    assert tail_ratio([0, 0, 5.0, 0]) == 1.0
    assert tail_ratio([3, 1]) == pytest.approx(0.625)


def test_tail_ratio_empty():
    with pytest.raises(EmptyPopulationError):
        tail_ratio([])
    with pytest.raises(EmptyPopulationError):
        tail_ratio([0.0, 0.0])


def test_tail_ratio_survives_huge_weights():
    assert tail_ratio([1e200, 1e200]) == pytest.approx(0.5)


positive_weights = arrays(
    float, st.integers(1, 50), elements=st.floats(0.0, 1e6, allow_nan=False)
).filter(lambda w: w.max() > 1e-3)


@given(positive_weights, st.floats(1e-3, 1e3))
def test_tail_ratio_scale_invariant(weights, scale):
    assert tail_ratio(weights * scale) == pytest.approx(tail_ratio(weights), rel=1e-9)


@given(positive_weights)
def test_tail_ratio_bounds(weights):
    value = tail_ratio(weights)
    assert 1 / weights.size - 1e-12 <= value <= 1 + 1e-12


def test_population_fields_and_immutability():
    pop = Population([1.0, 2.0, 3.0])
    assert pop.total == 6.0
    assert pop.n == 3
    assert pop.tail_ratio == pytest.approx(14 / 36)
    with pytest.raises(ValueError):
        pop.weights[0] = 5.0


def test_population_rejects_negative():
    with pytest.raises(SpecError):
        Population([1.0, -1.0])


def test_load_weights(tmp_path):
    path = tmp_path / "weights.txt"
    path.write_text("# visits\n10\n2.5\n\n7.5\n")
    pop = load_weights(path)
    np.testing.assert_array_equal(pop.weights, [10.0, 2.5, 7.5])
    assert pop.total == 20.0


def test_load_weights_rejects_multiple_columns(tmp_path):
    path = tmp_path / "weights.txt"
    path.write_text("1 2\n3 4\n")
    with pytest.raises(SpecError):
        load_weights(path)
