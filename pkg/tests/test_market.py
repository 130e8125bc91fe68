import math
from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swingopt.market import (DAY, DeliveryPeriod, HorizonExceededError, InitialCurve,
                             MalformedRowError, ONE_DAY, OutOfBoundsPriceError,
                             VanillaQuote, black76_call, implied_vol, load_curve,
                             load_quotes, period_futures, save_quotes, synth_quotes)

from conftest import VALUATION

# high-precision oracle: 20*(2*Phi(0.1)-1) = 20*erf(0.1/sqrt(2)), frozen via mpmath
BLACK_ATM_20_V20_T1 = 1.5931134910811593


def linear_curve():
    t = np.arange(0, 731) / 365.0
    return InitialCurve(VALUATION, t, 20.0 + t, horizon=float(t[-1]) + DAY)


class TestPeriodFutures:
    def test_flat_curve_average_is_level(self, flat_curve):
        dp = DeliveryPeriod(0.0, 1.0 / 12.0)
        assert period_futures(flat_curve, 0.5, dp) == pytest.approx(20.0, abs=1e-12)

    def test_linear_curve_exact_integral(self):
        # f0(u) = 20 + u averaged on [0, 1] -> 20.5, up to the daily staircase
        val = period_futures(linear_curve(), 0.0, DeliveryPeriod(0.0, 1.0))
        assert val == pytest.approx(20.5, abs=2e-3)

    def test_one_day_window_returns_that_level(self):
        curve = linear_curve()
        val = period_futures(curve, 100 * DAY, ONE_DAY)
        assert val == pytest.approx(curve.f0(100 * DAY + 0.4 * DAY), abs=2e-3)

    def test_linear_in_curve(self):
        rng = np.random.default_rng(5)
        t = np.arange(0, 400) / 365.0
        levels = 10.0 + rng.uniform(0.0, 5.0, size=t.size)
        c1 = InitialCurve(VALUATION, t, levels, horizon=float(t[-1]) + DAY)
        c2 = InitialCurve(VALUATION, t, 2.0 * levels, horizon=float(t[-1]) + DAY)
        dp = DeliveryPeriod(0.01, 0.2)
        assert period_futures(c2, 0.3, dp) == pytest.approx(
            2.0 * period_futures(c1, 0.3, dp), rel=1e-14)

    def test_horizon_exceeded(self, flat_curve):
        with pytest.raises(HorizonExceededError):
            period_futures(flat_curve, 2.5, ONE_DAY)


class TestBlack76:
    def test_atm_frozen_value(self):
        assert black76_call(20.0, 20.0, 0.2, 1.0, 1.0) == pytest.approx(
            BLACK_ATM_20_V20_T1, abs=1e-12)

    def test_zero_vol_is_intrinsic(self):
        assert black76_call(22.0, 20.0, 0.0, 1.0, 0.97) == pytest.approx(2.0 * 0.97)
        assert black76_call(18.0, 20.0, 0.0, 1.0, 0.97) == 0.0

    def test_zero_strike_is_forward(self):
        assert black76_call(20.0, 0.0, 0.4, 2.0, 0.95) == pytest.approx(19.0)

    def test_monotone_in_vol_and_convex_in_strike(self):
        vols = np.linspace(0.05, 1.0, 30)
        prices = [black76_call(20.0, 21.0, v, 0.7) for v in vols]
        assert np.all(np.diff(prices) > 0)
        ks = np.linspace(10.0, 30.0, 41)
        pk = np.array([black76_call(20.0, k, 0.3, 0.7) for k in ks])
        assert np.all(np.diff(pk, 2) > -1e-12)


class TestImpliedVol:
    def test_round_trip(self):
        price = black76_call(20.0, 20.0, 0.2, 1.0, 1.0)
        assert implied_vol(price, 20.0, 20.0, 1.0, 1.0) == pytest.approx(0.2, abs=1e-10)

    def test_lower_bound_price_gives_zero(self):
        assert implied_vol(2.0 * 0.99, 22.0, 20.0, 1.0, 0.99) == 0.0

    def test_frozen_price_inverts(self):
        assert implied_vol(BLACK_ATM_20_V20_T1, 20.0, 20.0, 1.0, 1.0) == pytest.approx(
            0.2, abs=1e-6)

    def test_out_of_bounds_raises(self):
        with pytest.raises(OutOfBoundsPriceError):
            implied_vol(25.0, 20.0, 20.0, 1.0, 1.0)
        with pytest.raises(OutOfBoundsPriceError):
            implied_vol(1.0, 22.0, 20.0, 1.0, 0.5)

    @settings(max_examples=60, deadline=None)
    @given(vol=st.floats(0.01, 2.0), m=st.floats(0.5, 1.8), T=st.floats(0.05, 3.0))
    def test_identity_property(self, vol, m, T):
        F = 20.0
        price = black76_call(F, m * F, vol, T)
        assert implied_vol(price, F, m * F, T) == pytest.approx(vol, abs=1e-8)


class TestQuotesIO:
    def test_empty_file(self, tmp_path):
        p = tmp_path / "q.csv"
        p.write_text("kind,option_expiry,futures_maturity,delivery_start,"
                     "delivery_end,strike,implied_vol\n")
        assert load_quotes(p, VALUATION) == []

    def test_negative_vol_rejected_with_line(self, tmp_path):
        p = tmp_path / "q.csv"
        p.write_text("kind,option_expiry,futures_maturity,delivery_start,"
                     "delivery_end,strike,implied_vol\n"
                     "PVO,2018-06-01,2018-06-01,2018-06-01,2018-07-01,20,-0.2\n")
        with pytest.raises(MalformedRowError) as err:
            load_quotes(p, VALUATION)
        assert err.value.line == 2

    def test_synth_flat_is_55_quotes_at_flat_vol(self, flat_curve, base_dp):
        quotes = synth_quotes(flat_curve, [0.2, 0.4, 0.6, 0.8, 1.0],
                              np.linspace(0.8, 1.2, 11), base_dp, flat_vol=0.2)
        assert len(quotes) == 55
        assert all(q.implied_vol == 0.2 and q.kind == "PVO" for q in quotes)

    def test_save_load_round_trip(self, tmp_path, flat_curve, base_dp):
        quotes = synth_quotes(flat_curve, [73 / 365.0, 146 / 365.0],
                              [0.9, 1.0, 1.1], base_dp, flat_vol=0.25)
        p = tmp_path / "q.csv"
        save_quotes(p, quotes, VALUATION)
        back = load_quotes(p, VALUATION)
        assert len(back) == len(quotes)
        for a, b in zip(quotes, back):
            assert b.option_expiry == pytest.approx(a.option_expiry, abs=1e-9)
            assert b.implied_vol == pytest.approx(a.implied_vol, rel=1e-8)

    def test_curve_round_trip(self, tmp_path):
        import csv
        from datetime import timedelta
        p = tmp_path / "c.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["date", "price"])
            for i in range(10):
                w.writerow([(VALUATION + timedelta(days=i)).isoformat(), 15.0 + i])
        c = load_curve(p)
        assert c.valuation_date == VALUATION
        assert c.f0(3.5 * DAY) == pytest.approx(18.0)

    def test_quote_invariants(self, base_dp):
        with pytest.raises(ValueError):
            VanillaQuote("MCO", 0.5, 0.5, base_dp, 20.0, 0.2)  # not strictly before
        with pytest.raises(ValueError):
            VanillaQuote("PVO", 0.6, 0.5, base_dp, 20.0, 0.2)  # expiry after maturity
