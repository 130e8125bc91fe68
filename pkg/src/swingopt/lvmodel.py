"""Local-volatility linear model for the normalized spot and its delivery-period remaps.

The normalized spot s follows ds = a(1-s) dt + eta(t,s) s dW with s_0 = 1,
so futures are affine in s and stay martingales for any positive bounded
local vol. Period futures (delivery window averages of the instantaneous
curve) keep the same affine structure after a deterministic change of
normalization G; all linking formulas below flow from that.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .kernels import pchip_eval_np, pchip_slopes
from .market import DAY, DeliveryPeriod, InitialCurve, weighted_period_integral

VOL_FLOOR = 1e-4
VOL_CAP = 5.0


class MappedStrikeError(ValueError):
    """Strike maps below the model's support (k_F <= 0)."""


class BelowSupportError(ValueError):
    """Normalized strike at or below the period floor 1 - G(t)."""


@dataclass(frozen=True)
class LocalVolSurface:
    """eta(t, k) on knots: monotone cubic in k, piecewise-constant in t.

    Slice i applies on (time_knots[i-1], time_knots[i]] (and slice 0 down to
    t=0), so each quoted expiry is controlled by its own slice during
    bootstrapped calibration. Extrapolation is flat in both coordinates and
    values are clamped to [VOL_FLOOR, VOL_CAP].
    """

    time_knots: np.ndarray
    k_knots: np.ndarray
    values: np.ndarray  # (n_t, n_k)

    def __post_init__(self):
        t = np.asarray(self.time_knots, dtype=np.float64)
        k = np.asarray(self.k_knots, dtype=np.float64)
        v = np.clip(np.asarray(self.values, dtype=np.float64), VOL_FLOOR, VOL_CAP)
        if t.ndim != 1 or k.ndim != 1 or v.shape != (t.size, k.size):
            raise ValueError("values must be (len(time_knots), len(k_knots))")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("time_knots must strictly increase")
        if k.size > 1 and np.any(np.diff(k) <= 0):
            raise ValueError("k_knots must strictly increase")
        if np.any(k <= 0):
            raise ValueError("k_knots must be positive")
        slopes = np.vstack([pchip_slopes(k, v[i]) for i in range(t.size)])
        for arr in (t, k, v, slopes):
            arr.setflags(write=False)
        object.__setattr__(self, "time_knots", t)
        object.__setattr__(self, "k_knots", k)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_slopes", slopes)

    @classmethod
    def flat(cls, vol: float, time_knots=(1.0,), k_knots=(1.0,)):
        t = np.asarray(time_knots, dtype=np.float64)
        k = np.asarray(k_knots, dtype=np.float64)
        return cls(t, k, np.full((t.size, k.size), float(vol)))

    def slice_for(self, t: float) -> int:
        idx = int(np.searchsorted(self.time_knots, t, side="left"))
        return min(idx, self.time_knots.size - 1)

    def slice_values(self, slice_idx: int, k) -> np.ndarray:
        out = pchip_eval_np(self.k_knots, self.values[slice_idx],
                            self._slopes[slice_idx], np.asarray(k, dtype=np.float64))
        return np.clip(out, VOL_FLOOR, VOL_CAP)

    def __call__(self, t: float, k):
        out = self.slice_values(self.slice_for(t), k)
        return float(out) if np.ndim(k) == 0 else out

    def with_values(self, values: np.ndarray) -> "LocalVolSurface":
        return LocalVolSurface(self.time_knots, self.k_knots, values)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "k", "vol"])
            for i, t in enumerate(self.time_knots):
                for j, k in enumerate(self.k_knots):
                    w.writerow([f"{t:.10g}", f"{k:.10g}", f"{self.values[i, j]:.12g}"])

    @classmethod
    def from_csv(cls, path) -> "LocalVolSurface":
        ts, ks, vols = [], [], []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                ts.append(float(row["t"]))
                ks.append(float(row["k"]))
                vols.append(float(row["vol"]))
        t = np.unique(ts)
        k = np.unique(ks)
        v = np.full((t.size, k.size), np.nan)
        for ti, ki, vi in zip(ts, ks, vols):
            v[np.searchsorted(t, ti), np.searchsorted(k, ki)] = vi
        if np.any(np.isnan(v)):
            raise ValueError("surface CSV does not cover the full knot grid")
        return cls(t, k, v)


@dataclass(frozen=True)
class ModelParams:
    a: float
    localvol: LocalVolSurface

    def __post_init__(self):
        if self.a < 0.0:
            raise ValueError("mean reversion a must be >= 0")


def sde_coefficients(params: ModelParams, t: float, s: float) -> tuple[float, float]:
    """(drift, diffusion) of the normalized spot at (t, s)."""
    if s <= 0.0:
        raise ValueError("s must be positive")
    return params.a * (1.0 - s), params.localvol(t, s) * s


def futures_closed_form(params: ModelParams, s_t, t: float, T: float, F0T: float):
    """F_t(T) of the base model: affine in the normalized spot."""
    if not 0.0 <= t <= T + 1e-12:
        raise ValueError("require 0 <= t <= T")
    return F0T * (1.0 - (1.0 - np.asarray(s_t)) * math.exp(-params.a * (T - t)))


def k_F(params: ModelParams, t: float, T: float, K: float, F0T: float) -> float:
    """Map a futures strike into the normalized-spot coordinate."""
    k = 1.0 - (1.0 - K / F0T) * math.exp(params.a * (T - t))
    if k <= 0.0:
        raise MappedStrikeError(
            f"strike {K} maps to k={k:.6g} <= 0 (below model support)")
    return k


def eta_F(params: ModelParams, t: float, T: float, K: float, F0T: float) -> float:
    """Absolute (price) local volatility of the futures at strike K."""
    k = k_F(params, t, T, K, F0T)
    return (K - F0T * (1.0 - math.exp(-params.a * (T - t)))) * params.localvol(t, k)


# ---------------------------------------------------------------------------
# delivery-period remapping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeliveryRemap:
    """G(t) tabulated daily for one delivery period (optionally divided by a
    reference period's G, which is how smiles are transferred between
    delivery periods)."""

    dp: DeliveryPeriod
    a: float
    t_grid: np.ndarray
    logG: np.ndarray
    base_dp: DeliveryPeriod | None = None

    def G(self, t) -> float | np.ndarray:
        out = np.exp(np.interp(t, self.t_grid, self.logG))
        return float(out) if np.ndim(t) == 0 else out

    def A(self, t: float, step: float = DAY) -> float:
        """Drift coefficient a - d/dt log G by central finite difference."""
        t0 = max(t - step, self.t_grid[0])
        t1 = min(t + step, self.t_grid[-1])
        dlog = (np.interp(t1, self.t_grid, self.logG)
                - np.interp(t0, self.t_grid, self.logG)) / (t1 - t0)
        return self.a - dlog

    def int_A(self, t: float, T: float) -> float:
        """Exact integral of A over [t, T] via log-G telescoping."""
        return self.a * (T - t) + float(np.interp(t, self.t_grid, self.logG)
                                        - np.interp(T, self.t_grid, self.logG))


def remap_G(curve: InitialCurve, params: ModelParams, dp: DeliveryPeriod,
            t_max: float | None = None) -> DeliveryRemap:
    """Tabulate G(t) = E-weight of the delivery window under mean reversion a.

    The table is capped at the curve horizon; beyond it G extrapolates flat.
    """
    cap = curve.horizon - dp.delta1
    t_max = cap if t_max is None else min(t_max, cap)
    n = int(math.floor(t_max / DAY + 1e-9)) + 1
    t_grid = np.arange(n) * DAY
    a = params.a
    logG = np.empty(n)
    for i, t in enumerate(t_grid):
        if a == 0.0:
            logG[i] = 0.0
            continue
        num = weighted_period_integral(curve, t, dp, lambda u: np.exp(-a * (u - t)))
        den = weighted_period_integral(curve, t, dp, lambda u: np.ones_like(u))
        logG[i] = math.log(num / den)
    return DeliveryRemap(dp, a, t_grid, logG)


def relative_remap(curve: InitialCurve, params: ModelParams, dp: DeliveryPeriod,
                   base_dp: DeliveryPeriod, t_max: float | None = None) -> DeliveryRemap:
    """Remap of period dp relative to the calibrated (quoted) period base_dp.

    The effective factor is G(t, dp)/G(t, base_dp); it exceeds 1 for periods
    shorter than the quoted one, raising their implied vols when a > 0.
    """
    if t_max is None:
        t_max = curve.horizon - max(dp.delta1, base_dp.delta1)
    r_dst = remap_G(curve, params, dp, t_max)
    r_src = remap_G(curve, params, base_dp, t_max)
    return DeliveryRemap(dp, params.a, r_dst.t_grid, r_dst.logG - r_src.logG, base_dp=base_dp)


def spot_delta(s_t, remap: DeliveryRemap, t: float):
    """Normalized spot of the delivery period: 1 - (1-s) G(t)."""
    return 1.0 - (1.0 - np.asarray(s_t)) * remap.G(t)


def eta_delta(params: ModelParams, remap: DeliveryRemap, t: float, k: float) -> float:
    """Local vol of the period-delta normalized spot at (t, k)."""
    G = remap.G(t)
    if k <= 1.0 - G:
        raise BelowSupportError(f"k={k} at or below period floor {1.0 - G:.6g}")
    return (1.0 - (1.0 - G) / k) * params.localvol(t, 1.0 - (1.0 - k) / G)


def eta_delta_grid(params: ModelParams, remap: DeliveryRemap, t: float,
                   k: np.ndarray) -> np.ndarray:
    """Vectorized eta_delta clamped to the vol floor below the support."""
    G = remap.G(t)
    k = np.asarray(k, dtype=np.float64)
    safe = (k > (1.0 - G) + 1e-12) & (k > 1e-12)
    kk = np.where(safe, k, 1.0)
    inner = 1.0 - (1.0 - kk) / G
    vols = params.localvol(t, np.maximum(inner, 1e-12))
    out = (1.0 - (1.0 - G) / kk) * vols
    return np.where(safe, np.clip(out, VOL_FLOOR, VOL_CAP), VOL_FLOOR)


def link_smiles(params: ModelParams, remap_src: DeliveryRemap,
                remap_dst: DeliveryRemap, t: float, k: float) -> float:
    """Transfer the calibrated period's local vol to another delivery period."""
    g = remap_dst.G(t) / remap_src.G(t)
    if k <= 1.0 - g:
        raise BelowSupportError(f"k={k} at or below linked floor {1.0 - g:.6g}")
    return (1.0 - (1.0 - g) / k) * params.localvol(t, 1.0 - (1.0 - k) / g)


def period_futures_closed_form(s_t, t: float, T: float, remap: DeliveryRemap,
                               F0Tdelta: float):
    """F_t(T, delta) = F0 (1 - (1 - s_t(delta)) exp(-int_t^T A)).

    The G(t) factors telescope, leaving (1-s_t) G(T) exp(-a (T-t)); this makes
    the closed form agree with direct quadrature of the instantaneous futures
    on any curve, not just flat ones.
    """
    if not 0.0 <= t <= T + 1e-12:
        raise ValueError("require 0 <= t <= T")
    factor = remap.G(T) * math.exp(-remap.a * (T - t))
    return F0Tdelta * (1.0 - (1.0 - np.asarray(s_t)) * factor)
