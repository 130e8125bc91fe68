"""Spike overlay: mean-reverting jump process on top of the diffusive spot.

y jumps by exponentially distributed amplitudes at Poisson times and decays
at speed gamma. Adding (s + y) and renormalizing by 1 + h(0, t), where
h(t, T) is the accumulated expected spike mass, leaves today's futures curve
unchanged. Simulation only; spike parameters are inputs, never calibrated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .market import DeliveryPeriod, InitialCurve, period_futures, weighted_period_integral


@dataclass(frozen=True)
class SpikeParams:
    gamma: float
    intensity: float
    zeta: float

    def __post_init__(self):
        if self.gamma <= 0.0:
            raise ValueError("gamma must be positive")
        if self.intensity < 0.0 or self.zeta < 0.0:
            raise ValueError("intensity and zeta must be non-negative")


def h(params: SpikeParams, t: float, T: float):
    """Expected spike mass accumulated over [t, T], seen from t."""
    if np.any(np.asarray(T) < t - 1e-12):
        raise ValueError("require t <= T")
    tau = np.asarray(T, dtype=np.float64) - t
    out = params.zeta * params.intensity * (1.0 - np.exp(-params.gamma * tau)) / params.gamma
    return float(out) if np.ndim(T) == 0 else out


@dataclass(frozen=True)
class SpikePath:
    jump_times: np.ndarray
    amplitudes: np.ndarray
    gamma: float

    def y(self, t):
        t = np.asarray(t, dtype=np.float64)
        tt = t[..., None] if t.ndim else t[None]
        mask = self.jump_times[None, :] <= tt
        dec = np.exp(-self.gamma * np.maximum(tt - self.jump_times[None, :], 0.0))
        out = np.sum(np.where(mask, self.amplitudes[None, :] * dec, 0.0), axis=-1)
        return float(out[0]) if t.ndim == 0 else out


def _poisson_quantile_bound(lam: float, eps: float = 1e-14) -> int:
    """Smallest n with P(N > n) < eps for N ~ Poisson(lam)."""
    if lam == 0.0:
        return 0
    n, p, cdf = 0, math.exp(-lam), math.exp(-lam)
    while cdf < 1.0 - eps and n < 10_000:
        n += 1
        p *= lam / n
        cdf += p
    return n


def simulate_spike_path(params: SpikeParams, horizon: float, seed: int,
                        path_id: int = 0) -> SpikePath:
    """One seeded spike path on [0, horizon]."""
    times, amps = _spike_jumps(params, horizon, seed, path_id, 1)
    n = int(np.sum(np.isfinite(times[0])))
    return SpikePath(times[0, :n].copy(), amps[0, :n].copy(), params.gamma)


def _spike_jumps(params: SpikeParams, horizon: float, seed: int, path0: int,
                 n_paths: int):
    """Jump times (+inf padded, sorted) and amplitudes per path."""
    lam = params.intensity * horizon
    n_max = _poisson_quantile_bound(lam)
    u = rng.uniform_pairs(seed, rng.STREAM_SPIKE, path0, n_paths, n_max + 1)
    counts = _poisson_inverse_cdf(u[:, 0, 0], lam, n_max)
    if n_max == 0:
        inf = np.full((n_paths, 1), np.inf)
        return inf, np.zeros((n_paths, 1))
    times = u[:, 1:, 0] * horizon
    amps = -params.zeta * np.log(u[:, 1:, 1])
    col = np.arange(n_max)[None, :]
    alive = col < counts[:, None]
    times = np.where(alive, times, np.inf)
    order = np.argsort(times, axis=1, kind="stable")
    rows = np.arange(n_paths)[:, None]
    return times[rows, order], np.where(alive, amps, 0.0)[rows, order]


def _poisson_inverse_cdf(u: np.ndarray, lam: float, n_max: int) -> np.ndarray:
    if lam == 0.0:
        return np.zeros(u.shape, dtype=np.int64)
    pmf = np.empty(n_max + 1)
    pmf[0] = math.exp(-lam)
    for n in range(1, n_max + 1):
        pmf[n] = pmf[n - 1] * lam / n
    cdf = np.cumsum(pmf)
    return np.searchsorted(cdf, u).astype(np.int64)


def simulate_spike_values(params: SpikeParams, times, n_paths: int, seed: int,
                          path0: int = 0) -> np.ndarray:
    """(n_paths, len(times)) values of y at the requested times."""
    times = np.asarray(times, dtype=np.float64)
    horizon = float(times[-1])
    jt, ja = _spike_jumps(params, horizon, seed, path0, n_paths)
    out = np.empty((n_paths, times.size))
    for i, t in enumerate(times):
        mask = jt <= t
        dec = np.exp(-params.gamma * np.where(mask, t - jt, 0.0))
        out[:, i] = np.sum(np.where(mask, ja * dec, 0.0), axis=1)
    return out


# ---------------------------------------------------------------------------
# spike-adjusted prices
# ---------------------------------------------------------------------------


def spike_adjusted_spot(s_t, y_t, t: float, curve: InitialCurve, params: SpikeParams):
    """Spot price with spikes: f_0(t) (s + y) / (1 + h(0, t))."""
    return curve.f0(t) * (np.asarray(s_t) + np.asarray(y_t)) / (1.0 + h(params, 0.0, t))


def spike_instant_futures(s_t, y_t, t: float, T: float, curve: InitialCurve,
                          params: SpikeParams, a: float):
    """Instantaneous futures under spikes; reduces to the diffusive closed
    form when intensity = 0 and preserves f_0 exactly at t = 0."""
    if T < t - 1e-12:
        raise ValueError("require t <= T")
    hT = 1.0 + h(params, 0.0, T)
    term_s = (1.0 - np.asarray(s_t)) * math.exp(-a * (T - t)) / hT
    term_y = (h(params, 0.0, t) - np.asarray(y_t)) * math.exp(-params.gamma * (T - t)) / hT
    return curve.f0(T) * (1.0 - term_s - term_y)


def _G_spiked(curve: InitialCurve, params: SpikeParams, T: float,
              dp: DeliveryPeriod, decay: float) -> float:
    """Window average of f_0(u) e^{-decay (u-T)} / (1+h(0,u)), over F_0(T, dp)."""
    num = weighted_period_integral(
        curve, T, dp,
        lambda u: np.exp(-decay * (u - T)) / (1.0 + h(params, 0.0, u)))
    return num / period_futures(curve, T, dp)


def spike_period_futures(s_t, y_t, t: float, T: float, dp: DeliveryPeriod,
                         curve: InitialCurve, params: SpikeParams, a: float):
    """Delivery-period futures under spikes.

    Quadrature of the two spike-weighted G functions; the exponential decay
    integrals telescope exactly, so the result equals direct window
    integration of the instantaneous formula.
    """
    if T < t - 1e-12:
        raise ValueError("require t <= T")
    F0 = period_futures(curve, T, dp)
    G_a = _G_spiked(curve, params, T, dp, a)
    G_g = _G_spiked(curve, params, T, dp, params.gamma)
    term_s = (1.0 - np.asarray(s_t)) * math.exp(-a * (T - t)) * G_a
    term_y = (h(params, 0.0, t) - np.asarray(y_t)) * math.exp(-params.gamma * (T - t)) * G_g
    return F0 * (1.0 - term_s - term_y)
