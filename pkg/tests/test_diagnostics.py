import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smcforecast.diagnostics import (
    acf,
    batch_means_se,
    cumulative_log_evidence,
    posterior_summary,
    rhat,
    simplex_series,
)
from smcforecast.filters import FilterRecord


class TestRhat:
    def test_common_law(self):
        rng = np.random.default_rng(0)
        assert rhat(rng.standard_normal((2, 20_000)))[0] == pytest.approx(1.0, abs=0.01)

    def test_separated_means(self):
        rng = np.random.default_rng(1)
        c = rng.standard_normal((2, 1000)) + np.array([[-10.0], [10.0]])
        assert rhat(c)[0] > 1.5

    def test_chain_paired_with_itself(self):
        x = np.random.default_rng(2).standard_normal(5000)
        assert rhat(np.stack([x, x]))[0] == pytest.approx(1.0, abs=0.01)

    def test_split_catches_drift(self):
        x = np.linspace(0, 10, 1000) + np.random.default_rng(3).standard_normal(1000) * 0.1
        assert rhat(np.stack([x, x]), split=True)[0] > 1.5
        assert rhat(np.stack([x, x]), split=False)[0] == pytest.approx(1.0, abs=1e-9)

    def test_multi_parameter_shape(self):
        assert rhat(np.random.default_rng(4).standard_normal((4, 100, 3))).shape == (3,)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 5), st.integers(4, 60), st.integers(0, 2**31))
    def test_at_least_one_and_permutation_invariant(self, m, n, seed):
        rng = np.random.default_rng(seed)
        c = rng.standard_normal((m, n)) * rng.uniform(0.5, 2, (m, 1)) + rng.normal(0, 0.3, (m, 1))
        r = rhat(c)
        assert r[0] >= 1 - 1e-10
        assert rhat(c[rng.permutation(m)])[0] == pytest.approx(r[0], rel=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError):
            rhat(np.zeros((1, 10)))
        with pytest.raises(ValueError):
            rhat(np.ones((3, 10)))
        with pytest.raises(ValueError):
            rhat(np.random.default_rng(0).standard_normal((2, 3)))


class TestAcf:
    def test_lag_zero(self):
        assert acf(np.random.default_rng(0).standard_normal(50), 5)[0] == 1.0

    def test_alternating(self):
        n = 1000
        x = np.where(np.arange(n) % 2, 1.0, -1.0)
        # the biased estimator gives -(n-1)/n
        assert acf(x, 1)[1] == pytest.approx(-1.0, abs=1.0 / n + 1e-12)

    def test_white_noise(self):
        n = 10_000
        assert abs(acf(np.random.default_rng(1).standard_normal(n), 1)[1]) < 3 / math.sqrt(n)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-100, 100), st.floats(0.01, 100), st.integers(0, 2**31))
    def test_affine_invariance(self, a, b, seed):
        x = np.random.default_rng(seed).standard_normal(200).cumsum()
        np.testing.assert_allclose(acf(a + b * x, 10), acf(x, 10), atol=1e-9)

    def test_matches_numpy_correlate(self):
        x = np.random.default_rng(2).standard_normal(300)
        d = x - x.mean()
        full = np.correlate(d, d, "full")[299:] / (d @ d)
        np.testing.assert_allclose(acf(x, 20), full[:21], atol=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError):
            acf(np.ones(10), 2)
        with pytest.raises(ValueError):
            acf(np.arange(5.0), 5)


class TestSummary:
    def test_constant(self):
        (s,) = posterior_summary(np.full(10, 2.5))
        assert (s.mean, s.lower, s.upper) == (2.5, 2.5, 2.5)

    def test_arithmetic(self):
        (s,) = posterior_summary(np.arange(1, 101, dtype=float))
        assert s.mean == 50.5
        # type-7: h = (n-1) p
        assert s.lower == pytest.approx(1 + 0.025 * 99)

    def test_normal_quantiles(self):
        (s,) = posterior_summary(np.random.default_rng(0).standard_normal(100_000))
        assert s.lower == pytest.approx(-1.96, abs=0.05) and s.upper == pytest.approx(1.96, abs=0.05)

    def test_names_and_order(self):
        rng = np.random.default_rng(1)
        out = posterior_summary(rng.gamma(2, size=(500, 2)), ["a", "b"])
        assert [p.name for p in out] == ["a", "b"]
        assert all(p.lower <= p.upper for p in out)

    def test_empty(self):
        with pytest.raises(ValueError):
            posterior_summary(np.empty((0, 2)))


def test_batch_means_se_on_iid():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(40_000)
    assert batch_means_se(x) == pytest.approx(1 / math.sqrt(x.size), rel=0.25)


def test_batch_means_se_grows_with_autocorrelation():
    rng = np.random.default_rng(4)
    e = rng.standard_normal(20_000)
    ar = np.empty_like(e)
    ar[0] = e[0]
    for t in range(1, e.size):
        ar[t] = 0.95 * ar[t - 1] + e[t]
    assert batch_means_se(ar) > 3 * batch_means_se(e)


class TestCumulative:
    def test_examples(self):
        assert cumulative_log_evidence([1.5]).tolist() == [1.5]
        assert cumulative_log_evidence([1.0, 2.0]).tolist() == [1.0, 3.0]
        assert cumulative_log_evidence([0.0] * 4).tolist() == [0.0] * 4

    def test_accepts_records(self):
        recs = [FilterRecord(t, v, 0.0, 1.0) for t, v in enumerate([-1.0, -2.0], start=1)]
        assert cumulative_log_evidence(recs).tolist() == [-1.0, -3.0]


class TestSimplex:
    def test_equal_streams(self):
        s = simplex_series([np.zeros(5)] * 3)
        np.testing.assert_allclose(s, 1 / 3)

    def test_hand_value(self):
        s = simplex_series([[math.log(2)], [0.0], [0.0]])
        np.testing.assert_allclose(s[0], [0.5, 0.25, 0.25])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.lists(st.floats(-700, 0), min_size=4, max_size=4), min_size=2, max_size=5),
           st.floats(-1e3, 1e3))
    def test_rows_sum_to_one_and_shift_invariant(self, streams, c):
        s = simplex_series(streams)
        assert np.all(np.abs(s.sum(axis=1) - 1.0) <= 1e-12) and np.all(s >= 0)
        shifted = simplex_series(np.asarray(streams) + c)
        np.testing.assert_allclose(shifted, s, atol=1e-9)

    def test_errors(self):
        with pytest.raises(ValueError):
            simplex_series([np.zeros(3)])
        with pytest.raises(ValueError):
            simplex_series([np.zeros(3), np.zeros(4)])
        with pytest.raises(ValueError, match="row 1"):
            simplex_series([[0.0, -np.inf], [0.0, -np.inf]])
