"""Seeded simulation of the normalized spot and the derived fixings.

Paths are Euler-Maruyama with (at most daily) substeps; every variate comes
from a counter-based stream keyed by (seed, stream, absolute path id), so
results are independent of chunking and worker count. Regression-phase and
repricing-phase paths live in disjoint path-id domains enforced here, never
by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels, rng
from .backend import USE_NUMBA
from .lvmodel import DeliveryRemap, ModelParams, period_futures_closed_form, relative_remap, remap_G
from .market import DAY, DeliveryPeriod, InitialCurve, ONE_DAY, period_futures

SPOT_FLOOR = 1e-8


@dataclass(frozen=True)
class SimulationSchedule:
    fixing_times: np.ndarray
    strike_times: np.ndarray | None = None
    substep: float = DAY

    def __post_init__(self):
        ft = np.asarray(self.fixing_times, dtype=np.float64)
        if ft.ndim != 1 or ft.size == 0 or np.any(np.diff(ft) <= 0) or ft[0] <= 0:
            raise ValueError("fixing times must be positive and strictly increasing")
        if self.substep <= 0 or self.substep > DAY + 1e-15:
            raise ValueError("substep must be positive and at most one day")
        ft.setflags(write=False)
        object.__setattr__(self, "fixing_times", ft)
        if self.strike_times is not None:
            st = np.asarray(self.strike_times, dtype=np.float64)
            if st.size == 0 or np.any(np.diff(st) <= 0) or st[0] <= 0:
                raise ValueError("strike times must be positive and strictly increasing")
            if st[-1] >= ft[0]:
                raise ValueError("strike window must end before the first fixing")
            st.setflags(write=False)
            object.__setattr__(self, "strike_times", st)

    @property
    def n_fixings(self) -> int:
        return int(self.fixing_times.size)

    def record_times(self) -> np.ndarray:
        if self.strike_times is None:
            return self.fixing_times
        return np.concatenate([self.strike_times, self.fixing_times])


@dataclass(frozen=True)
class PathSet:
    times: np.ndarray       # record times
    values: np.ndarray      # (n_paths, n_records) normalized spot
    seed: int
    stream: int
    path0: int

    @property
    def n_paths(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class FixingSet:
    fixing_times: np.ndarray
    fixings: np.ndarray             # (n_paths, n_fixings) day-ahead futures
    forwards: np.ndarray            # (n_fixings,) matching F_0 values
    strikes: np.ndarray | None = None  # (n_paths,) floating strikes


def _step_grid(schedule: SimulationSchedule):
    """Substep sizes plus the step indices landing exactly on record times."""
    rec = schedule.record_times()
    dts = []
    rec_idx = []
    t = 0.0
    for target in rec:
        gap = target - t
        n = max(1, int(math.ceil(gap / schedule.substep - 1e-9)))
        h = gap / n
        dts.extend([h] * n)
        rec_idx.append(len(dts) - 1)
        t = target
    return np.asarray(dts), np.asarray(rec_idx, dtype=np.int64)


def simulate_spot(params: ModelParams, schedule: SimulationSchedule, n_paths: int,
                  seed: int, path0: int = 0, stream: int = rng.STREAM_DIFFUSION,
                  chunk_size: int = 250_000) -> PathSet:
    """Euler paths of the normalized spot recorded at the schedule's dates."""
    if n_paths < 1:
        raise ValueError("need n_paths >= 1")
    dts, rec_idx = _step_grid(schedule)
    sqdts = np.sqrt(dts)
    cum = np.cumsum(dts)
    slice_idx = np.array([params.localvol.slice_for(cum[n]) for n in range(dts.size)],
                         dtype=np.int64)
    lv = params.localvol
    values = np.empty((n_paths, rec_idx.size))
    lo, hi = rng._split_seed(seed)
    for c0 in range(0, n_paths, chunk_size):
        c1 = min(n_paths, c0 + chunk_size)
        if USE_NUMBA:
            block = kernels.euler_paths_nb(lo, hi, stream, path0 + c0, c1 - c0,
                                           dts, sqdts, params.a, lv.k_knots,
                                           lv.values, lv._slopes, slice_idx,
                                           rec_idx, SPOT_FLOOR)
        else:
            block = kernels.euler_paths_np(lo, hi, stream, path0 + c0, c1 - c0,
                                           dts, sqdts, params.a, lv.k_knots,
                                           lv.values, lv._slopes, slice_idx,
                                           rec_idx, SPOT_FLOOR)
        values[c0:c1] = block
    return PathSet(schedule.record_times(), values, seed, stream, path0)


def _fixing_columns(pathset: PathSet, schedule: SimulationSchedule) -> np.ndarray:
    n_s = 0 if schedule.strike_times is None else schedule.strike_times.size
    return pathset.values[:, n_s:]


def day_ahead_remap(curve: InitialCurve, params: ModelParams,
                    base_dp: DeliveryPeriod | None, t_max: float) -> DeliveryRemap:
    if base_dp is None:
        return remap_G(curve, params, ONE_DAY, t_max)
    return relative_remap(curve, params, ONE_DAY, base_dp, t_max)


def day_ahead_fixings(pathset: PathSet, params: ModelParams, curve: InitialCurve,
                      schedule: SimulationSchedule,
                      base_dp: DeliveryPeriod | None = None) -> FixingSet:
    """Map each recorded spot to F_{T_i}(T_i + 1d, 1d) in closed form.

    base_dp, when given, is the quoted delivery period the model was
    calibrated on; the one-day contract then uses the relative remap (its
    vols sit above the quoted period's for a > 0).
    """
    ft = schedule.fixing_times
    t_max = float(ft[-1] + DAY)
    remap = day_ahead_remap(curve, params, base_dp, t_max)
    s = _fixing_columns(pathset, schedule)
    fix = np.empty_like(s)
    fwd = np.empty(ft.size)
    for i, t in enumerate(ft):
        T = t + DAY
        F0 = period_futures(curve, T, ONE_DAY)
        fwd[i] = F0
        fix[:, i] = period_futures_closed_form(s[:, i], t, T, remap, F0)
    strikes = None
    return FixingSet(ft, fix, fwd, strikes)


def floating_strikes(pathset: PathSet, params: ModelParams, curve: InitialCurve,
                     schedule: SimulationSchedule, month_T: float,
                     month_dp: DeliveryPeriod) -> np.ndarray:
    """Per-path average of the one-month futures over the strike window."""
    if schedule.strike_times is None:
        raise ValueError("schedule has no strike window")
    st = schedule.strike_times
    s = pathset.values[:, : st.size]
    F0m = period_futures(curve, month_T, month_dp)
    ks = np.zeros(pathset.n_paths)
    for j, t in enumerate(st):
        ks += F0m * (1.0 - (1.0 - s[:, j]) * math.exp(-params.a * (month_T - t)))
    return ks / st.size


def attach_floating_strikes(fixset: FixingSet, strikes: np.ndarray) -> FixingSet:
    return FixingSet(fixset.fixing_times, fixset.fixings, fixset.forwards, strikes)


def martingale_report(params: ModelParams, curve: InitialCurve,
                      schedule: SimulationSchedule, n_paths: int, seed: int,
                      base_dp: DeliveryPeriod | None = None) -> dict:
    """Mean-vs-forward z-scores for the spot and the day-ahead fixings."""
    ps = simulate_spot(params, schedule, n_paths, seed)
    fx = day_ahead_fixings(ps, params, curve, schedule, base_dp)
    s = _fixing_columns(ps, schedule)
    out = {"n_paths": n_paths, "seed": seed, "fixings": []}
    sm = s.mean(axis=0)
    sse = s.std(axis=0, ddof=1) / math.sqrt(n_paths)
    fm = fx.fixings.mean(axis=0)
    fse = fx.fixings.std(axis=0, ddof=1) / math.sqrt(n_paths)
    for i, t in enumerate(schedule.fixing_times):
        out["fixings"].append({
            "t": float(t),
            "spot_z": float((sm[i] - 1.0) / max(sse[i], 1e-300)),
            "fixing_mean": float(fm[i]),
            "forward": float(fx.forwards[i]),
            "fixing_z": float((fm[i] - fx.forwards[i]) / max(fse[i], 1e-300)),
        })
    out["max_abs_spot_z"] = float(max(abs(r["spot_z"]) for r in out["fixings"]))
    out["max_abs_fixing_z"] = float(max(abs(r["fixing_z"]) for r in out["fixings"]))
    return out
