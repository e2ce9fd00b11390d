import math
import statistics

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dualcausal.errors import SingularCovariance, TooFewSamples, ZeroVariance
from dualcausal.stats import (
    CLAMP_EPS,
    Degeneracy,
    FisherZTest,
    correlation_from_covariance,
    covariance,
    fisher_z_test,
    partial_correlation,
    pearson,
)

from helpers import inverse_partial_corr, random_spd, recursive_partial_corr


def test_covariance_matches_numpy():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(50, 4))
    np.testing.assert_allclose(covariance(x), np.cov(x, rowvar=False), atol=1e-12)
    with pytest.raises(TooFewSamples):
        covariance(x[:1])


def test_correlation_from_covariance_unit_diagonal():
    c = correlation_from_covariance(random_spd(np.random.default_rng(1), 4))
    np.testing.assert_allclose(np.diag(c), 1.0)
    assert np.all(np.abs(c) <= 1.0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 6))
def test_partial_correlation_matches_recursion_and_inverse(seed, k):
    rng = np.random.default_rng(seed)
    cov = random_spd(rng, k)
    cond = tuple(range(2, k))
    r = correlation_from_covariance(cov).tolist()
    got = partial_correlation(cov, 0, 1, cond)
    assert got == pytest.approx(recursive_partial_corr(r, 0, 1, cond), abs=1e-9)
    assert got == pytest.approx(inverse_partial_corr(cov, 0, 1, cond), abs=1e-9)


def test_partial_correlation_is_scale_free():
    cov = random_spd(np.random.default_rng(3), 4)
    d = np.diag([1e-3, 10.0, 5e4, 1.0])
    assert partial_correlation(d @ cov @ d, 0, 1, (2, 3)) == pytest.approx(partial_correlation(cov, 0, 1, (2, 3)))


def test_singular_and_zero_variance():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(200, 2))
    data = np.column_stack([x, x[:, 0] + x[:, 1], np.ones(200)])
    cov = covariance(data)
    with pytest.raises(SingularCovariance) as info:
        partial_correlation(cov, 0, 2, (1,))
    assert (info.value.x, info.value.y, info.value.cond_set) == (0, 2, (1,))
    with pytest.raises(ZeroVariance):
        partial_correlation(cov, 0, 3)


def test_clamping():
    cov = np.array([[1.0, 1.0], [1.0, 1.0]])
    assert partial_correlation(cov, 0, 1) == 1.0 - CLAMP_EPS


def test_fisher_z_against_normal_tail():
    rng = np.random.default_rng(5)
    data = rng.normal(size=(300, 3))
    data[:, 1] += 0.2 * data[:, 0]
    d = fisher_z_test(data, 0, 1, (2,), alpha=0.01)
    r = inverse_partial_corr(np.cov(data, rowvar=False), 0, 1, (2,))
    stat = math.sqrt(300 - 1 - 3) * abs(math.atanh(r))
    assert d.partial_r == pytest.approx(r, abs=1e-10)
    assert d.statistic == pytest.approx(stat, rel=1e-10)
    assert d.p_value == pytest.approx(2 * (1 - statistics.NormalDist().cdf(stat)), rel=1e-6)
    assert d.independent == (d.p_value > 0.01)
    assert d.cond_set == (2,)


def test_fisher_z_degenerate_cases():
    x = np.random.default_rng(6).normal(size=(5, 4))
    with pytest.raises(TooFewSamples):
        fisher_z_test(x, 0, 1, (2, 3))
    d = fisher_z_test(x, 0, 1, (2, 3), raise_on_degenerate=False)
    assert d.degenerate is Degeneracy.TOO_FEW_SAMPLES and not d.independent
    y = np.column_stack([x[:, 0], x[:, 0], x[:, 1]])
    d = fisher_z_test(np.vstack([y] * 3), 0, 2, (1,), raise_on_degenerate=False)
    assert d.degenerate is Degeneracy.SINGULAR_COVARIANCE
    with pytest.raises(ValueError):
        fisher_z_test(x, 0, 0)
    with pytest.raises(ValueError):
        fisher_z_test(x, 0, 1, (1,))


def test_fisherz_test_object_matches_function():
    rng = np.random.default_rng(7)
    data = rng.normal(size=(400, 4))
    data[:, 3] += data[:, 0] - data[:, 1]
    t = FisherZTest(data, 0.01)
    for x, y, cond in [(0, 1, ()), (0, 3, (1,)), (1, 2, (0, 3)), (3, 0, (2, 1))]:
        a = t.decision(x, y, cond)
        b = fisher_z_test(data, min(x, y), max(x, y), cond, 0.01)
        assert a.p_value == pytest.approx(b.p_value, abs=1e-12)
        assert t(x, y, cond) == b.independent
    assert t.n_tests == 4
    t(1, 0, ())
    assert t.n_tests == 4  # cached regardless of argument order


def test_pearson_matches_statistics():
    rng = np.random.default_rng(8)
    a, b = rng.normal(size=100), rng.normal(size=100)
    assert pearson(np.column_stack([a, b]), 0, 1) == pytest.approx(statistics.correlation(a, b), abs=1e-12)
    with pytest.raises(ZeroVariance):
        pearson(np.column_stack([a, np.zeros(100)]), 0, 1)


def test_monte_carlo_null_rejection_rate():
    """Under independence the rejection rate at alpha=0.05 stays near 0.05."""
    rng = np.random.default_rng(9)
    rejections = sum(not fisher_z_test(rng.normal(size=(200, 3)), 0, 1, (2,), 0.05).independent for _ in range(1000))
    # binomial(1000, 0.05): sd ~ 6.9; allow 4 sd
    assert abs(rejections - 50) < 28
