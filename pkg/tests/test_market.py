import numpy as np
import pytest
from hypothesis import given, strategies as st

from rfqmm.market import (
    FillCurve,
    PriceParams,
    fill_probability,
    kappa_implied_price,
    price_step,
    sample_fills,
)

CURVE = FillCurve()
LAM_LOW, LAM_HIGH = 10.83, 73.03


class TestFillProbability:
    def test_at_zero_spread(self):
        assert fill_probability(CURVE, 0.0) == pytest.approx(0.6682, abs=1e-4)

    def test_endpoints(self):
        assert fill_probability(CURVE, -0.16) == pytest.approx(0.9980, abs=1e-4)
        assert fill_probability(CURVE, 0.2) == pytest.approx(0.0020, abs=1e-4)

    def test_at_composite_spread(self):
        # exponent = -0.7 + 3.1
        assert fill_probability(CURVE, 0.09) == pytest.approx(0.0832, abs=1e-4)

    @given(st.floats(-0.5, 0.5), st.floats(1e-6, 0.5))
    def test_strictly_decreasing(self, d, gap):
        assert fill_probability(CURVE, d) > fill_probability(CURVE, d + gap)

    @given(st.floats(-0.5, 0.5))
    def test_point_symmetry(self, d):
        # f is logistic, point-symmetric about the spread where the exponent
        # vanishes: delta* = -alpha * delta0 / beta.
        d_star = -CURVE.alpha * CURVE.delta0 / CURVE.beta
        assert fill_probability(CURVE, d) + fill_probability(CURVE, 2 * d_star - d) \
            == pytest.approx(1.0, abs=1e-12)

    def test_half_probability_point(self):
        d_star = 0.7 * 0.09 / 3.1
        assert d_star == pytest.approx(0.02032, abs=1e-5)
        assert fill_probability(CURVE, d_star) == pytest.approx(0.5, abs=1e-12)

    def test_curve_validation(self):
        with pytest.raises(ValueError):
            FillCurve(delta0=0.0)
        with pytest.raises(ValueError):
            FillCurve(beta=-1.0)


class TestPriceStep:
    def test_balanced_flow_no_noise_leaves_price(self):
        p = PriceParams()
        assert price_step(p, 100.0, LAM_HIGH, LAM_HIGH, 0.0) == pytest.approx(100.0)

    def test_drift_arithmetic(self):
        p = PriceParams(kappa=2.29)
        s = price_step(p, 103.593, LAM_LOW, LAM_HIGH, 0.0)
        assert s == pytest.approx(103.593 + 2.29 * 62.2 / 250.0, abs=1e-6)
        assert s == pytest.approx(104.1627, abs=1e-3)

    def test_one_step_volatility(self):
        p = PriceParams()
        rng = np.random.default_rng(21)
        draws = rng.standard_normal(100_000)
        increments = price_step(p, 0.0, LAM_LOW, LAM_LOW, draws)
        target = 18.39 / np.sqrt(250.0)
        assert target == pytest.approx(1.1631, abs=1e-3)
        assert increments.std() == pytest.approx(target, rel=0.01)
        assert abs(increments.mean()) < 3 * target / np.sqrt(draws.size)

    def test_params_validation(self):
        with pytest.raises(ValueError):
            PriceParams(sigma=-1.0)
        with pytest.raises(ValueError):
            PriceParams(dt=0.0)


class TestSampleFills:
    def test_zero_intensity_never_fills(self):
        rng = np.random.default_rng(0)
        n_bid, n_ask = sample_fills(0.0, LAM_HIGH, 0.0, 0.0, CURVE, 1.0, rng)
        assert n_bid == 0

    def test_mean_matches_thinned_rate(self):
        rng = np.random.default_rng(5)
        d_star = -CURVE.alpha * CURVE.delta0 / CURVE.beta  # f = 0.5 exactly
        n_bid, n_ask = sample_fills(
            np.full(100_000, 1e-12), np.full(100_000, LAM_HIGH),
            0.0, d_star, CURVE, 1.0, rng)
        assert n_ask.mean() == pytest.approx(73.03 * 0.5, rel=0.01)

    def test_mean_on_delta_grid(self):
        rng = np.random.default_rng(6)
        for delta in (0.0, 0.02, 0.05, 0.08):
            lam = np.full(100_000, LAM_HIGH)
            n_bid, _ = sample_fills(lam, lam, delta, delta, CURVE, 1.0, rng)
            expected = LAM_HIGH * float(fill_probability(CURVE, delta))
            assert n_bid.mean() == pytest.approx(expected, rel=0.01)

    def test_sides_exchangeable_when_symmetric(self):
        # Same intensity and spread on both sides: the two count samples
        # come from the same distribution (two-sample KS at the 1% level).
        rng = np.random.default_rng(9)
        lam = np.full(100_000, LAM_HIGH)
        n_bid, n_ask = sample_fills(lam, lam, 0.02, 0.02, CURVE, 1.0, rng)
        ks = _two_sample_ks(n_bid, n_ask)
        crit = 1.628 * np.sqrt(2 / 100_000.0)  # c(0.01) * sqrt((n+m)/(n*m))
        assert ks < crit

    def test_exact_arrival_mode_matches_thinned_mean(self):
        rng = np.random.default_rng(13)
        lam = np.full(100_000, LAM_HIGH)
        n_bid, _ = sample_fills(lam, lam, 0.02, 0.02, CURVE, 1.0, rng, exact_arrivals=True)
        expected = LAM_HIGH * float(fill_probability(CURVE, 0.02))
        assert n_bid.mean() == pytest.approx(expected, rel=0.01)

    def test_deterministic_given_seed(self):
        a = sample_fills(LAM_HIGH, LAM_HIGH, 0.02, 0.03, CURVE, 1.0, rng=77)
        b = sample_fills(LAM_HIGH, LAM_HIGH, 0.02, 0.03, CURVE, 1.0, rng=77)
        assert a == b

    def test_rejects_nonpositive_interval(self):
        with pytest.raises(ValueError):
            sample_fills(LAM_LOW, LAM_LOW, 0.0, 0.0, CURVE, 0.0, rng=1)


def _two_sample_ks(a, b):
    values = np.unique(np.concatenate([a, b]))
    cdf_a = np.searchsorted(np.sort(a), values, side="right") / a.size
    cdf_b = np.searchsorted(np.sort(b), values, side="right") / b.size
    return np.abs(cdf_a - cdf_b).max()


class TestKappaImpliedPrice:
    def test_balanced_flow_returns_price(self):
        assert kappa_implied_price(101.0, LAM_HIGH, LAM_HIGH, 2.29) == pytest.approx(101.0)

    def test_figure_arithmetic(self):
        got = kappa_implied_price(103.593, LAM_LOW, LAM_HIGH, 2.29)
        assert got == pytest.approx(246.031, abs=1e-3)

    def test_mirrored_states_antisymmetric(self):
        s = 103.593
        up = kappa_implied_price(s, LAM_LOW, LAM_HIGH, 2.29)
        down = kappa_implied_price(s, LAM_HIGH, LAM_LOW, 2.29)
        assert up - s == pytest.approx(-(down - s))
