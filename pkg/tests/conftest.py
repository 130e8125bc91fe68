import math
import warnings
from datetime import date

import numpy as np
import pytest

from swingopt.calibrate import calibrate_local_vol
from swingopt.lvmodel import LocalVolSurface, ModelParams
from swingopt.market import DeliveryPeriod, InitialCurve, synth_quotes

warnings.filterwarnings("ignore", message=".*TBB.*")

VALUATION = date(2018, 3, 29)


def make_seasonal_curve() -> InitialCurve:
    t = np.arange(0, 731) / 365.0
    levels = 17.0 + 2.5 * np.cos(2.0 * np.pi * (t + 0.25))
    return InitialCurve(VALUATION, t, levels, horizon=float(t[-1]) + 1.0 / 365.0)


def make_flat_curve(level: float = 20.0, days: int = 731) -> InitialCurve:
    t = np.arange(0, days) / 365.0
    return InitialCurve(VALUATION, t, np.full(days, level), horizon=float(t[-1]) + 1.0 / 365.0)


def make_smiley_surface() -> LocalVolSurface:
    tk = np.array([55, 128, 201, 274, 347]) / 365.0
    kk = np.linspace(0.8, 1.2, 11)
    vals = np.empty((tk.size, kk.size))
    for i, tt in enumerate(tk):
        vals[i] = 0.21 + 0.05 * math.exp(-1.5 * tt) + 0.8 * (kk - 1.0) ** 2
    return LocalVolSurface(tk, kk, vals)


@pytest.fixture(scope="session")
def seasonal_curve():
    return make_seasonal_curve()


@pytest.fixture(scope="session")
def flat_curve():
    return make_flat_curve()


@pytest.fixture(scope="session")
def base_dp():
    return DeliveryPeriod(0.0, 30.0 / 365.0, "1m")


@pytest.fixture(scope="session")
def smiley_surface():
    return make_smiley_surface()


@pytest.fixture(scope="session")
def smiley_quotes(seasonal_curve, base_dp, smiley_surface):
    """The 55-quote synthetic PVO surface generated under a known model."""
    tk = list(smiley_surface.time_knots)
    kk = smiley_surface.k_knots
    return synth_quotes(seasonal_curve, tk, kk, base_dp,
                        vol_surface=smiley_surface, a=1.0)


@pytest.fixture(scope="session")
def flat_quotes(seasonal_curve, base_dp):
    tk = [55 / 365.0, 128 / 365.0, 201 / 365.0, 274 / 365.0, 347 / 365.0]
    return synth_quotes(seasonal_curve, tk, np.linspace(0.8, 1.2, 11),
                        base_dp, flat_vol=0.2)


@pytest.fixture(scope="session")
def calibrated_flat_a1(flat_quotes, seasonal_curve):
    """Model with a=1 calibrated to the flat 20% synthetic market."""
    lv, rep = calibrate_local_vol(flat_quotes, 1.0, seasonal_curve, initial_guess=0.25)
    assert rep.converged
    return ModelParams(1.0, lv)
