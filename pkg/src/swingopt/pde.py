"""Forward PDE for normalized call prices and vanilla pricing on top of it.

The solver is fully implicit (backward Euler in time) with central k
differences, switching to one-sided differences wherever the cell Peclet
number exceeds 2 so the implicit operator stays an M-matrix. Boundary
conditions: c(t,0)=1 (Dirichlet), c(t,k_max)=0, initial slice (1-k)^+.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .lvmodel import DeliveryRemap, ModelParams, VOL_CAP, VOL_FLOOR, eta_delta_grid
from .market import DAY, DiscountCurve, InitialCurve, VanillaQuote, implied_vol, period_futures


class MappedStrikeOutOfGridError(ValueError):
    """k_F beyond the PDE grid's upper edge."""


@dataclass(frozen=True)
class PdeGrid:
    k_max: float = 4.0
    nodes: int = 801
    dt: float = DAY

    def __post_init__(self):
        if self.k_max <= 1.0 or self.nodes < 11 or self.dt <= 0.0:
            raise ValueError("need k_max > 1, nodes >= 11, dt > 0")
        dk = self.k_max / (self.nodes - 1)
        if abs(round(1.0 / dk) - 1.0 / dk) > 1e-9:
            raise ValueError("grid must contain k=1 exactly; pick nodes so that "
                             "(nodes-1)/k_max is an integer multiple of 1/k_max")

    @property
    def k_nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.k_max, self.nodes)

    def refined(self, factor: int = 2) -> "PdeGrid":
        return PdeGrid(self.k_max, (self.nodes - 1) * factor + 1, self.dt / factor)


class NormalizedCallSurface:
    """c(t_i, k_j) slices; monotone cubic in k, linear in t."""

    def __init__(self, times: np.ndarray, k: np.ndarray, values: np.ndarray):
        self.times = times
        self.k = k
        self.values = values
        self._slope_cache: dict[int, np.ndarray] = {}

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def _row_eval(self, i: int, kq) -> np.ndarray:
        d = self._slope_cache.get(i)
        if d is None:
            d = kernels.pchip_slopes(self.k, self.values[i])
            self._slope_cache[i] = d
        return kernels.pchip_eval_np(self.k, self.values[i], d, kq)

    def value(self, t: float, kq):
        """Interpolated normalized call; kq may be scalar or array in [0, k_max]."""
        if t < -1e-12 or t > self.times[-1] + 1e-9:
            raise ValueError(f"t={t} outside solved horizon {self.times[-1]}")
        dt = self.times[1] - self.times[0] if self.times.size > 1 else 1.0
        x = min(max(t, 0.0), self.times[-1]) / dt
        i0 = int(math.floor(x + 1e-9))
        i0 = min(i0, self.times.size - 1)
        frac = x - i0
        kq_arr = np.asarray(kq, dtype=np.float64)
        out = self._row_eval(i0, kq_arr)
        if frac > 1e-9 and i0 + 1 < self.times.size:
            out = (1.0 - frac) * out + frac * self._row_eval(i0 + 1, kq_arr)
        return float(out) if np.ndim(kq) == 0 else out

    def bound_violation(self) -> float:
        """Max violation of (1-k)^+ <= c <= 1 over all nodes."""
        intrinsic = np.maximum(1.0 - self.k, 0.0)[None, :]
        return float(max(np.max(intrinsic - self.values), np.max(self.values - 1.0), 0.0))

    def convexity_violation(self) -> float:
        """Most negative discrete second difference in k (0 when convex)."""
        d2 = np.diff(self.values, n=2, axis=1)
        return float(max(-np.min(d2), 0.0))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "k", "c"])
            for i, t in enumerate(self.times):
                for j, kj in enumerate(self.k):
                    w.writerow([f"{t:.10g}", f"{kj:.10g}", f"{self.values[i, j]:.12g}"])


def _n_steps(horizon: float, dt: float) -> int:
    return max(1, int(math.ceil(horizon / dt - 1e-9)))


def solve_dupire(params: ModelParams, horizon: float, grid: PdeGrid | None = None
                 ) -> NormalizedCallSurface:
    """Solve the base-model PDE (constant mean reversion) up to horizon."""
    grid = grid or PdeGrid()
    k = grid.k_nodes
    S = _n_steps(horizon, grid.dt)
    times = np.arange(S + 1) * grid.dt
    lv = params.localvol
    slice_idx = np.array([lv.slice_for(times[n + 1]) for n in range(S)])
    vol2 = np.empty((S, k.size))
    cache: dict[int, np.ndarray] = {}
    for n in range(S):
        li = int(slice_idx[n])
        row = cache.get(li)
        if row is None:
            row = lv.slice_values(li, k) ** 2
            cache[li] = row
        vol2[n] = row
    drift = np.full(S, params.a)
    c0 = np.maximum(1.0 - k, 0.0)
    values = kernels.dupire_solve(c0, k, grid.dt, drift, vol2)
    return NormalizedCallSurface(times, k, values)


def solve_dupire_remapped(params: ModelParams, horizon: float, remap: DeliveryRemap,
                          grid: PdeGrid | None = None) -> NormalizedCallSurface:
    """Solve the PDE for a delivery period's normalized spot.

    Drift uses the finite-difference A(t) of the remap; the local vol is the
    period-linked surface. Pass a relative remap (quoted period as base) to
    imply smiles for other delivery periods from a calibrated model.
    """
    grid = grid or PdeGrid()
    k = grid.k_nodes
    S = _n_steps(horizon, grid.dt)
    times = np.arange(S + 1) * grid.dt
    drift = np.array([remap.A(times[n + 1]) for n in range(S)])
    vol2 = np.empty((S, k.size))
    for n in range(S):
        vol2[n] = eta_delta_grid(params, remap, times[n + 1], k) ** 2
    c0 = np.maximum(1.0 - k, 0.0)
    values = kernels.dupire_solve(c0, k, grid.dt, drift, vol2)
    return NormalizedCallSurface(times, k, values)


def option_on_futures(surface: NormalizedCallSurface, params: ModelParams,
                      t_expiry: float, T_futures: float, K: float, F0T: float,
                      df: float = 1.0, remap: DeliveryRemap | None = None) -> float:
    """PVO/MCO price df * F0T * exp(-int A) * c(t, k_F).

    Strikes mapping to k_F <= 0 price by the exact linear extension
    c = 1 - k_F (unit-forward put-call parity); k_F beyond the grid raises.
    """
    if t_expiry > T_futures + 1e-12:
        raise ValueError("option expiry after futures maturity")
    int_a = remap.int_A(t_expiry, T_futures) if remap is not None \
        else params.a * (T_futures - t_expiry)
    kf = 1.0 - (1.0 - K / F0T) * math.exp(int_a)
    if kf >= surface.k[-1]:
        raise MappedStrikeOutOfGridError(
            f"k_F={kf:.4f} beyond grid edge {surface.k[-1]}")
    cval = (1.0 - kf) if kf <= 0.0 else surface.value(t_expiry, kf)
    return df * F0T * math.exp(-int_a) * cval


def model_iv(surface: NormalizedCallSurface, params: ModelParams, quote: VanillaQuote,
             curve: InitialCurve, dcurve: DiscountCurve | None = None,
             remap: DeliveryRemap | None = None) -> float:
    """Black-76 implied vol of the model price for a market quote."""
    dcurve = dcurve or DiscountCurve()
    F0T = period_futures(curve, quote.futures_maturity, quote.delivery)
    df = float(dcurve.df(quote.option_expiry))
    price = option_on_futures(surface, params, quote.option_expiry,
                              quote.futures_maturity, quote.strike, F0T, df, remap)
    return implied_vol(price, F0T, quote.strike, quote.option_expiry, df)


def model_iv_pvo(surface: NormalizedCallSurface, params: ModelParams,
                 T: float, K: float, F0T: float) -> float:
    price = option_on_futures(surface, params, T, T, K, F0T, 1.0)
    return implied_vol(price, F0T, K, T, 1.0)


def vol_drop(surface: NormalizedCallSurface, params: ModelParams, curve: InitialCurve,
             front_ltd: float, back_futures: float, dp, dcurve: DiscountCurve | None = None,
             remap: DeliveryRemap | None = None) -> float:
    """ATM PVO vol of the back futures minus the ATM MCO vol expiring at the
    front futures' last trading date."""
    if front_ltd > back_futures + 1e-12:
        raise ValueError("front LTD must not exceed the back futures maturity")
    dcurve = dcurve or DiscountCurve()
    F0T = period_futures(curve, back_futures, dp)
    iv_pvo = model_iv(surface, params,
                      VanillaQuote("PVO", back_futures, back_futures, dp, F0T, 1.0),
                      curve, dcurve, remap)
    if front_ltd >= back_futures - 1e-12:
        return 0.0
    iv_mco = model_iv(surface, params,
                      VanillaQuote("MCO", front_ltd, back_futures, dp, F0T, 1.0),
                      curve, dcurve, remap)
    return iv_pvo - iv_mco
