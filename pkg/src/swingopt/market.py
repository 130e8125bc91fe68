"""Term structures, Black-76 utilities and market-quote ingestion.

Prices are EUR/MWh, times are ACT/365 year fractions from the valuation
date. The instantaneous futures curve is piecewise-flat between (typically
daily) pillars, matching the delivery mechanics of day-ahead contracts.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np

DAY = 1.0 / 365.0


class HorizonExceededError(ValueError):
    """Curve support does not cover the requested time."""


class MalformedRowError(ValueError):
    """A CSV row failed validation; carries the 1-based line number."""

    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line


class OutOfBoundsPriceError(ValueError):
    """Option price outside its arbitrage bounds; no implied vol exists."""


def year_fraction(valuation: date, d: date) -> float:
    return (d - valuation).days / 365.0


@dataclass(frozen=True)
class InitialCurve:
    """Today's instantaneous futures curve f_0, flat between pillars."""

    valuation_date: date
    times: np.ndarray  # pillar left edges, strictly increasing, times[0] == 0
    levels: np.ndarray  # level on [times[i], times[i+1]); last level up to horizon
    horizon: float

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        v = np.asarray(self.levels, dtype=np.float64)
        if t.ndim != 1 or t.size == 0 or t.size != v.size:
            raise ValueError("times/levels must be equal-length 1-d arrays")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("pillar times must start at 0 and strictly increase")
        if np.any(v <= 0.0):
            raise ValueError("curve levels must be strictly positive")
        if self.horizon <= t[-1]:
            raise ValueError("horizon must exceed the last pillar time")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "levels", v)

    @classmethod
    def from_pillars(cls, valuation_date: date, pillars, horizon: float | None = None):
        times = np.array([p[0] for p in pillars], dtype=np.float64)
        levels = np.array([p[1] for p in pillars], dtype=np.float64)
        if horizon is None:
            horizon = float(times[-1]) + DAY
        return cls(valuation_date, times, levels, float(horizon))

    def f0(self, t):
        """Instantaneous futures level; flat on each pillar interval."""
        t = np.asarray(t, dtype=np.float64)
        if np.any(t < 0.0) or np.any(t > self.horizon + 1e-12):
            raise HorizonExceededError(
                f"t outside curve support [0, {self.horizon:.6f}]")
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, self.times.size - 1)
        out = self.levels[idx]
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DiscountCurve:
    """Deterministic zero yields; P(T) = exp(-y*T). zero_rates means P = 1."""

    flat_yield: float = 0.0
    zero_rates: bool = True

    def df(self, T) -> float | np.ndarray:
        T = np.asarray(T, dtype=np.float64)
        if self.zero_rates:
            out = np.ones_like(T)
        else:
            out = np.exp(-self.flat_yield * T)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DeliveryPeriod:
    """Delivery window [T+delta0, T+delta1] relative to the maturity label T."""

    delta0: float
    delta1: float
    label: str = ""

    def __post_init__(self):
        if not (0.0 <= self.delta0 < self.delta1):
            raise ValueError("require 0 <= delta0 < delta1")

    @property
    def length(self) -> float:
        return self.delta1 - self.delta0


ONE_DAY = DeliveryPeriod(0.0, DAY, "1d")


def one_month(days: int = 30) -> DeliveryPeriod:
    return DeliveryPeriod(0.0, days * DAY, "1m")


@dataclass(frozen=True)
class VanillaQuote:
    kind: str  # "PVO" | "MCO"
    option_expiry: float
    futures_maturity: float
    delivery: DeliveryPeriod
    strike: float
    implied_vol: float

    def __post_init__(self):
        if self.kind not in ("PVO", "MCO"):
            raise ValueError(f"kind must be PVO or MCO, got {self.kind!r}")
        if self.option_expiry > self.futures_maturity + 1e-12:
            raise ValueError("option_expiry must not exceed futures_maturity")
        if self.kind == "MCO" and not self.option_expiry < self.futures_maturity - 1e-12:
            raise ValueError("MCO expiry must be strictly before futures maturity")
        if self.implied_vol <= 0.0:
            raise ValueError("implied_vol must be positive")
        if self.strike <= 0.0:
            raise ValueError("strike must be positive")


# ---------------------------------------------------------------------------
# period futures by quadrature
# ---------------------------------------------------------------------------


def _window_grid(T: float, dp: DeliveryPeriod):
    """Daily trapezoid abscissae spanning [T+delta0, T+delta1]."""
    a, b = T + dp.delta0, T + dp.delta1
    n = max(2, int(math.ceil((b - a) / DAY)) + 1)
    return np.linspace(a, b, n)


def period_futures(curve: InitialCurve, T: float, dp: DeliveryPeriod) -> float:
    """Average of f_0 over the delivery window (uniform weight)."""
    if T + dp.delta1 > curve.horizon + 1e-12:
        raise HorizonExceededError(
            f"delivery window end {T + dp.delta1:.6f} beyond curve horizon {curve.horizon:.6f}")
    u = _window_grid(T, dp)
    f = curve.f0(u)
    return float(np.trapezoid(f, u) / (u[-1] - u[0]))


def weighted_period_integral(curve: InitialCurve, T: float, dp: DeliveryPeriod, weight_fn) -> float:
    """Trapezoid of f_0(u) * weight_fn(u) averaged over the delivery window."""
    if T + dp.delta1 > curve.horizon + 1e-12:
        raise HorizonExceededError("curve support insufficient for delivery window")
    u = _window_grid(T, dp)
    f = curve.f0(u) * weight_fn(u)
    return float(np.trapezoid(f, u) / (u[-1] - u[0]))


# ---------------------------------------------------------------------------
# Black-76
# ---------------------------------------------------------------------------

_SQRT2 = math.sqrt(2.0)


def norm_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / _SQRT2))


def black76_call(F: float, K: float, vol: float, T: float, df: float = 1.0) -> float:
    """Discounted Black-76 call on a futures price."""
    if F <= 0.0 or K < 0.0:
        raise ValueError("require F > 0 and K >= 0")
    if vol < 0.0 or T < 0.0:
        raise ValueError("require vol >= 0 and T >= 0")
    if not 0.0 < df <= 1.0:
        raise ValueError("df must lie in (0, 1]")
    if K == 0.0:
        return df * F
    sd = vol * math.sqrt(T)
    if sd == 0.0:
        return df * max(F - K, 0.0)
    d1 = math.log(F / K) / sd + 0.5 * sd
    d2 = d1 - sd
    return df * (F * norm_cdf(d1) - K * norm_cdf(d2))


def black76_vega(F: float, K: float, vol: float, T: float, df: float = 1.0) -> float:
    sd = vol * math.sqrt(T)
    if sd == 0.0:
        return 0.0
    d1 = math.log(F / K) / sd + 0.5 * sd
    return df * F * math.sqrt(T) * math.exp(-0.5 * d1 * d1) / math.sqrt(2.0 * math.pi)


def implied_vol(price: float, F: float, K: float, T: float, df: float = 1.0,
                tol_rel: float = 1e-12, max_iter: int = 200) -> float:
    """Invert black76_call by bracketing bisection plus a Newton polish."""
    lo_bound = df * max(F - K, 0.0)
    hi_bound = df * F
    if price < lo_bound - 1e-12 * F or price >= hi_bound:
        raise OutOfBoundsPriceError(
            f"price {price} outside [{lo_bound}, {hi_bound}) for F={F}, K={K}")
    if price <= lo_bound:
        return 0.0
    if T == 0.0:
        raise OutOfBoundsPriceError("T=0 option carries no vol information above intrinsic")
    tol = tol_rel * F
    lo, hi = 0.0, 1.0
    while black76_call(F, K, hi, T, df) < price:
        hi *= 2.0
        if hi > 64.0:
            raise OutOfBoundsPriceError("no vol below 64 reproduces the price")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if black76_call(F, K, mid, T, df) < price:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-7:
            break
    v = 0.5 * (lo + hi)
    for _ in range(20):
        diff = black76_call(F, K, v, T, df) - price
        if abs(diff) <= tol:
            return v
        vega = black76_vega(F, K, v, T, df)
        if vega <= 0.0:
            break
        step = diff / vega
        v = min(max(v - step, lo), hi)
    return v


# ---------------------------------------------------------------------------
# quote ingestion
# ---------------------------------------------------------------------------

QUOTE_COLUMNS = ["kind", "option_expiry", "futures_maturity",
                 "delivery_start", "delivery_end", "strike", "implied_vol"]


def load_curve(path) -> InitialCurve:
    """Curve CSV: header `date,price`, first row at the valuation date."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != ["date", "price"]:
            raise MalformedRowError(1, "curve header must be 'date,price'")
        for ln, row in enumerate(reader, start=2):
            try:
                d = date.fromisoformat(row["date"].strip())
                p = float(row["price"])
            except (ValueError, AttributeError, KeyError) as exc:
                raise MalformedRowError(ln, str(exc)) from exc
            if p <= 0.0:
                raise MalformedRowError(ln, f"non-positive price {p}")
            rows.append((d, p))
    if not rows:
        raise MalformedRowError(1, "empty curve file")
    valuation = rows[0][0]
    times = np.array([year_fraction(valuation, d) for d, _ in rows])
    levels = np.array([p for _, p in rows])
    return InitialCurve(valuation, times, levels, horizon=float(times[-1]) + DAY)


def load_quotes(path, valuation: date) -> list[VanillaQuote]:
    """Quote CSV per the schema in QUOTE_COLUMNS; ISO dates, decimal vols."""
    quotes = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        if [c.strip() for c in reader.fieldnames] != QUOTE_COLUMNS:
            raise MalformedRowError(1, f"header must be {','.join(QUOTE_COLUMNS)}")
        for ln, row in enumerate(reader, start=2):
            try:
                kind = row["kind"].strip().upper()
                t_exp = year_fraction(valuation, date.fromisoformat(row["option_expiry"].strip()))
                t_fut = year_fraction(valuation, date.fromisoformat(row["futures_maturity"].strip()))
                d0 = year_fraction(valuation, date.fromisoformat(row["delivery_start"].strip()))
                d1 = year_fraction(valuation, date.fromisoformat(row["delivery_end"].strip()))
                strike = float(row["strike"])
                vol = float(row["implied_vol"])
                quote = VanillaQuote(kind, t_exp, t_fut,
                                     DeliveryPeriod(d0 - t_fut, d1 - t_fut), strike, vol)
            except (ValueError, AttributeError, KeyError) as exc:
                raise MalformedRowError(ln, str(exc)) from exc
            quotes.append(quote)
    return quotes


def save_quotes(path, quotes: list[VanillaQuote], valuation: date) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(QUOTE_COLUMNS)
        for q in quotes:
            w.writerow([
                q.kind,
                (valuation + timedelta(days=round(q.option_expiry * 365.0))).isoformat(),
                (valuation + timedelta(days=round(q.futures_maturity * 365.0))).isoformat(),
                (valuation + timedelta(days=round((q.futures_maturity + q.delivery.delta0) * 365.0))).isoformat(),
                (valuation + timedelta(days=round((q.futures_maturity + q.delivery.delta1) * 365.0))).isoformat(),
                f"{q.strike:.10g}",
                f"{q.implied_vol:.10g}",
            ])


def synth_quotes(curve: InitialCurve, expiries, moneyness, dp: DeliveryPeriod,
                 flat_vol: float | None = None, vol_surface=None, a: float = 0.0,
                 pde_cfg=None) -> list[VanillaQuote]:
    """Quotes priced under a reference model so calibrations can round-trip.

    flat_vol: quotes carry that vol verbatim (flat smile is exact for the
    lognormal-in-k model only at a=0; for a != 0 it is still a valid market).
    vol_surface: a LocalVolSurface; quotes are generated by solving the
    pricing PDE under (a, vol_surface) and inverting to Black-76 vols.
    """
    quotes = []
    if vol_surface is None:
        if flat_vol is None or flat_vol <= 0.0:
            raise ValueError("need flat_vol > 0 or a vol_surface")
        for T in expiries:
            F0 = period_futures(curve, T, dp)
            for m in moneyness:
                quotes.append(VanillaQuote("PVO", T, T, dp, m * F0, flat_vol))
        return quotes
    from .lvmodel import ModelParams
    from .pde import PdeGrid, model_iv_pvo, solve_dupire

    params = ModelParams(a=a, localvol=vol_surface)
    grid = pde_cfg if pde_cfg is not None else PdeGrid()
    surface = solve_dupire(params, horizon=max(expiries) + DAY, grid=grid)
    for T in expiries:
        F0 = period_futures(curve, T, dp)
        for m in moneyness:
            iv = model_iv_pvo(surface, params, T, m * F0, F0)
            quotes.append(VanillaQuote("PVO", T, T, dp, m * F0, iv))
    return quotes
