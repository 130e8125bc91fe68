#!/usr/bin/env python3
"""Regenerate the committed market fixtures under data/.

The curve is a seasonal TTF-like term structure as of 2018-03-29; the quote
surface is produced by the engine itself under a known smiley local vol with
mean reversion 1, plus a handful of mid-curve options for the outer fit.
"""

import csv
import math
import sys
from datetime import date, timedelta
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from swingopt.calibrate import calibrate_local_vol  # noqa: E402
from swingopt.lvmodel import LocalVolSurface, ModelParams  # noqa: E402
from swingopt.market import (DeliveryPeriod, InitialCurve, period_futures,  # noqa: E402
                             save_quotes, synth_quotes, VanillaQuote)
from swingopt.pde import model_iv, solve_dupire  # noqa: E402

VALUATION = date(2018, 3, 29)
EXPIRIES = [55 / 365.0, 128 / 365.0, 201 / 365.0, 274 / 365.0, 347 / 365.0]
MONEYNESS = np.linspace(0.8, 1.2, 11)
A_STAR = 1.0


def seasonal_curve() -> InitialCurve:
    t = np.arange(0, 731) / 365.0
    levels = 17.0 + 2.5 * np.cos(2.0 * np.pi * (t + 0.25))
    return InitialCurve(VALUATION, t, levels, horizon=float(t[-1]) + 1.0 / 365.0)


def smiley_surface() -> LocalVolSurface:
    tk = np.asarray(EXPIRIES)
    kk = MONEYNESS
    vals = np.empty((tk.size, kk.size))
    for i, tt in enumerate(tk):
        vals[i] = 0.21 + 0.05 * math.exp(-1.5 * tt) + 0.8 * (kk - 1.0) ** 2
    return LocalVolSurface(tk, kk, vals)


def main() -> None:
    out = Path(__file__).resolve().parents[1] / "data"
    out.mkdir(exist_ok=True)
    curve = seasonal_curve()
    with open(out / "curve_ttf_2018.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "price"])
        for i, lvl in enumerate(curve.levels):
            w.writerow([(VALUATION + timedelta(days=i)).isoformat(), f"{lvl:.6f}"])
    dp = DeliveryPeriod(0.0, 30 / 365.0, "1m")
    quotes = synth_quotes(curve, EXPIRIES, MONEYNESS, dp,
                          vol_surface=smiley_surface(), a=A_STAR)
    # a few ATM mid-curve options priced under the same reference model so the
    # mean-reversion fit has targets
    params = ModelParams(A_STAR, smiley_surface())
    surf = solve_dupire(params, max(EXPIRIES) + 1 / 365.0)
    for T in EXPIRIES[1:]:
        F0 = period_futures(curve, T, dp)
        t_exp = T - 31.0 / 365.0
        placeholder = VanillaQuote("MCO", t_exp, T, dp, F0, 0.2)
        iv = model_iv(surf, params, placeholder, curve)
        quotes.append(VanillaQuote("MCO", t_exp, T, dp, F0, iv))
    save_quotes(out / "quotes_smiley.csv", quotes, VALUATION)
    print(f"wrote {out / 'curve_ttf_2018.csv'} and {out / 'quotes_smiley.csv'} "
          f"({len(quotes)} quotes)")


if __name__ == "__main__":
    main()
