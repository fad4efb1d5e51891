import math

import numpy as np
import pytest
from scipy.stats import norm

from mhgrad.errors import InvalidInputError
from mhgrad.estimators import Mode, estimate_batch
from mhgrad.greeks import (
    GbmSpec,
    call_value,
    delta_bump_sample,
    delta_hybrid,
    delta_malliavin_sample,
    delta_oracle,
    delta_pair,
    delta_pathwise_sample,
    max_jumps,
    strike_crossing_w,
    terminal_price,
)
from mhgrad.stats import RunningMoments

S0, MU, SIG, T = 100.0, 0.05, 0.2, 1.0
MONEYNESS = (0.5, 0.8, 1.0, 1.2, 2.0)


def spec(m=1.0):
    return GbmSpec(S0, MU, SIG, T, m * S0)


def analytic_delta(s):
    # undiscounted, physical drift: e^{mu T} N(d1)
    d1 = (math.log(s.s0 / s.K) + (s.mu + 0.5 * s.sigma**2) * s.T) / (s.sigma * math.sqrt(s.T))
    return math.exp(s.mu * s.T) * norm.cdf(d1)


def analytic_value(s):
    vol = s.sigma * math.sqrt(s.T)
    d1 = (math.log(s.s0 / s.K) + (s.mu + 0.5 * s.sigma**2) * s.T) / vol
    return s.s0 * math.exp(s.mu * s.T) * norm.cdf(d1) - s.K * norm.cdf(d1 - vol)


class TestSpec:
    @pytest.mark.parametrize("field", ["s0", "sigma", "T", "K"])
    def test_rejects_nonpositive(self, field):
        kw = dict(s0=S0, mu=MU, sigma=SIG, T=T, K=S0)
        kw[field] = 0.0
        with pytest.raises(InvalidInputError):
            GbmSpec(**kw)

    def test_rejects_nan_drift(self):
        with pytest.raises(InvalidInputError):
            GbmSpec(S0, float("nan"), SIG, T, S0)


class TestTerminalPrice:
    def test_zero_vol_limit(self):
        s = GbmSpec(S0, MU, 1e-12, T, S0)
        assert terminal_price(s, 0.7) == pytest.approx(S0 * math.exp(MU * T), rel=1e-12)

    def test_zero_noise(self):
        assert terminal_price(spec(), 0.0) == pytest.approx(S0 * math.exp(MU - 0.02))

    def test_mean(self):
        w = math.sqrt(T) * np.random.default_rng(1).standard_normal(1_000_000)
        s_T = terminal_price(spec(), w)
        assert abs(s_T.mean() - S0 * math.exp(MU * T)) <= 4 * s_T.std() / 1000


class TestOracle:
    @pytest.mark.parametrize("m", MONEYNESS)
    def test_against_closed_form(self, m):
        assert delta_oracle(spec(m)) == pytest.approx(analytic_delta(spec(m)), abs=1e-6)

    @pytest.mark.parametrize("m", MONEYNESS)
    def test_value_against_closed_form(self, m):
        assert call_value(spec(m)) == pytest.approx(analytic_value(spec(m)), rel=1e-10)

    def test_deep_in_the_money(self):
        assert delta_oracle(spec(1e-6)) == pytest.approx(math.exp(MU * T), rel=1e-8)

    def test_deep_out_of_the_money(self):
        assert delta_oracle(spec(10.0)) < 1e-12

    def test_rejects_bad_bump(self):
        with pytest.raises(InvalidInputError):
            delta_oracle(spec(), h=1.0)


class TestSamples:
    def test_pathwise_indicator(self):
        s = spec()
        w = np.array([-3.0, 3.0])
        np.testing.assert_allclose(delta_pathwise_sample(s, w), [0.0, terminal_price(s, 3.0) / S0])

    def test_malliavin_zero_below_strike(self):
        assert delta_malliavin_sample(spec(), -3.0) == 0.0

    def test_pair_streams(self):
        w = np.linspace(-2, 2, 9)
        p = delta_pair(spec(), w)
        np.testing.assert_array_equal(p.g_path, delta_pathwise_sample(spec(), w))
        np.testing.assert_array_equal(p.g_mall, delta_malliavin_sample(spec(), w))

    @pytest.mark.parametrize("m", MONEYNESS)
    def test_unbiased(self, m):
        s = spec(m)
        w = math.sqrt(T) * np.random.default_rng(int(m * 10)).standard_normal(1_000_000)
        ref = delta_oracle(s)
        for g in (delta_pathwise_sample(s, w), delta_malliavin_sample(s, w)):
            acc = RunningMoments.from_array(g)
            assert abs(acc.mean - ref) <= 3 * acc.sem

    def test_bump_and_revalue(self):
        s = spec()
        w = math.sqrt(T) * np.random.default_rng(8).standard_normal(1_000_000)
        acc = RunningMoments.from_array(delta_bump_sample(s, w))
        # forward step bias is about h * gamma / 2, well under 1e-3
        assert abs(acc.mean - delta_oracle(s)) <= 3 * acc.sem + 1e-3


class TestJumps:
    @pytest.mark.parametrize("m", MONEYNESS)
    def test_pathwise_jumps_malliavin_does_not(self, m):
        s = spec(m)
        jp, jm = max_jumps(s)
        assert jp == pytest.approx(m, rel=1e-4)
        assert jm < 1e-6

    def test_crossing_point(self):
        s = spec(1.2)
        assert terminal_price(s, strike_crossing_w(s)) == pytest.approx(s.K, rel=1e-14)


class TestHybrid:
    @pytest.mark.parametrize("seed", range(5))
    def test_no_worse_than_either(self, seed):
        s = spec(1.0)
        w = math.sqrt(T) * np.random.default_rng(seed).standard_normal(200_000)
        p = delta_pair(s, w)
        v = {mode: estimate_batch(p, mode).variance for mode in Mode}
        assert delta_hybrid(s, p).variance == v[Mode.HYBRID]
        assert v[Mode.HYBRID] <= min(v[Mode.PATHWISE], v[Mode.MALLIAVIN])

    def test_unbiased_at_the_money(self):
        s = spec(1.0)
        w = math.sqrt(T) * np.random.default_rng(31).standard_normal(1_000_000)
        est = delta_hybrid(s, delta_pair(s, w), split_batch=True)
        assert abs(est.mean - delta_oracle(s)) <= 3 * est.sem
