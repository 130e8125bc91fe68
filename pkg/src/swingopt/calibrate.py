"""Exact-fit local-vol calibration and mean-reversion best fit.

The local vol is pinned on one knot per quoted expiry and one per remapped
strike; each sweep reprices all quotes with one PDE solve and rescales the
knot values by the market/model implied-vol ratio (the asymptotic update).
Anderson mixing over the flattened knot vector accelerates the fixed point.
The scalar mean reversion is fitted outside by grid search plus a
golden-section refinement against MCO vols or vol-drop targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lvmodel import LocalVolSurface, ModelParams, VOL_CAP, VOL_FLOOR, k_F
from .market import DiscountCurve, InitialCurve, VanillaQuote, period_futures
from .pde import PdeGrid, model_iv, solve_dupire, vol_drop

BP = 1e-4


class NoConvergenceError(RuntimeError):
    """Calibration hit the iteration cap above tolerance."""


@dataclass(frozen=True)
class FixedPointConfig:
    tol_bp: float = 0.1
    max_iter: int = 50
    anderson_memory: int = 5
    use_anderson: bool = True
    ridge: float = 1e-10


@dataclass(frozen=True)
class CsoTarget:
    front_ltd: float
    back_futures: float
    target_drop: float


@dataclass(frozen=True)
class CalibrationTarget:
    pvo: list[VanillaQuote]
    secondary: list = field(default_factory=list)  # VanillaQuote (MCO) or CsoTarget
    weights: np.ndarray | None = None

    def __post_init__(self):
        if not self.pvo:
            raise ValueError("need at least one PVO quote")
        deliveries = {(q.delivery.delta0, q.delivery.delta1) for q in self.pvo}
        if len(deliveries) != 1:
            raise ValueError("all PVO quotes must share one delivery period")


@dataclass
class CalibrationReport:
    iterations: int
    max_abs_iv_error_bp: float
    per_quote_errors_bp: np.ndarray
    converged: bool
    error_history_bp: list[float] = field(default_factory=list)
    a_path: list[tuple[float, float]] = field(default_factory=list)


def anderson_step(history: list[tuple[np.ndarray, np.ndarray]], m: int,
                  ridge: float = 1e-10) -> np.ndarray:
    """Type-II Anderson mixing over the last min(m, n)+1 iterates.

    history entries are (x_i, g(x_i)); returns the next iterate. Falls back
    to the plain step g(x_n) whenever mixing is impossible or degenerate.
    """
    if not history:
        raise ValueError("need at least one history entry")
    x_n, g_n = history[-1]
    p = min(m, len(history) - 1)
    if p == 0:
        return g_n.copy()
    xs = [h[0] for h in history[-(p + 1):]]
    gs = [h[1] for h in history[-(p + 1):]]
    fs = [g - x for x, g in zip(xs, gs)]
    dF = np.stack([fs[j + 1] - fs[j] for j in range(p)], axis=1)
    dG = np.stack([gs[j + 1] - gs[j] for j in range(p)], axis=1)
    A = dF.T @ dF + ridge * np.eye(p)
    try:
        gamma = np.linalg.solve(A, dF.T @ fs[-1])
    except np.linalg.LinAlgError:
        return g_n.copy()
    if not np.all(np.isfinite(gamma)):
        return g_n.copy()
    return g_n - dG @ gamma


def _build_knots(quotes: list[VanillaQuote], a: float, curve: InitialCurve):
    """One time knot per expiry, one k knot per remapped strike (deduped)."""
    t_knots = np.unique(np.round([q.option_expiry for q in quotes], 12))
    kqs = []
    for q in quotes:
        F0T = period_futures(curve, q.futures_maturity, q.delivery)
        params = ModelParams(a=a, localvol=LocalVolSurface.flat(0.2))
        kqs.append(k_F(params, q.option_expiry, q.futures_maturity, q.strike, F0T))
    kq = np.asarray(kqs)
    k_knots = [float(kq.min())]
    for v in np.sort(kq):
        if v - k_knots[-1] > 1e-7:
            k_knots.append(float(v))
    k_knots = np.asarray(k_knots)
    t_idx = np.searchsorted(t_knots, np.round([q.option_expiry for q in quotes], 12))
    k_idx = np.array([int(np.argmin(np.abs(k_knots - v))) for v in kq])
    # nearest quote for every knot cell, within the quote's own expiry slice
    nearest = np.full((t_knots.size, k_knots.size), -1, dtype=np.int64)
    for i in range(t_knots.size):
        in_slice = np.where(t_idx == i)[0]
        for j in range(k_knots.size):
            qsel = in_slice[np.argmin(np.abs(kq[in_slice] - k_knots[j]))]
            nearest[i, j] = qsel
    return t_knots, k_knots, t_idx, k_idx, nearest, kq


def calibrate_local_vol(quotes: list[VanillaQuote], a: float, curve: InitialCurve,
                        pde_cfg: PdeGrid | None = None,
                        fp_cfg: FixedPointConfig | None = None,
                        dcurve: DiscountCurve | None = None,
                        initial_guess: float = 0.2
                        ) -> tuple[LocalVolSurface, CalibrationReport]:
    """Fit eta(t,k) so every PVO reprices within tol_bp implied-vol error."""
    pde_cfg = pde_cfg or PdeGrid()
    fp_cfg = fp_cfg or FixedPointConfig()
    dcurve = dcurve or DiscountCurve()
    t_knots, k_knots, t_idx, k_idx, nearest, _ = _build_knots(quotes, a, curve)
    horizon = float(max(q.option_expiry for q in quotes))
    mkt = np.array([q.implied_vol for q in quotes])
    values = np.full((t_knots.size, k_knots.size), float(initial_guess))
    tol = fp_cfg.tol_bp * BP

    def model_vols(vals: np.ndarray) -> np.ndarray:
        surface_obj = LocalVolSurface(t_knots, k_knots, vals)
        params = ModelParams(a=a, localvol=surface_obj)
        surf = solve_dupire(params, horizon, pde_cfg)
        return np.array([model_iv(surf, params, q, curve, dcurve) for q in quotes])

    history: list[tuple[np.ndarray, np.ndarray]] = []
    err_hist: list[float] = []
    iterations = max(fp_cfg.max_iter, 0)
    for iterations in range(1, fp_cfg.max_iter + 1):
        mdl = model_vols(values)
        err = float(np.max(np.abs(mdl - mkt)))
        err_hist.append(err / BP)
        if err <= tol:
            iterations -= 1
            break
        ratio = mkt / mdl
        updated = values * ratio[nearest]
        updated = np.clip(updated, VOL_FLOOR, VOL_CAP)
        if fp_cfg.use_anderson:
            history.append((values.ravel().copy(), updated.ravel().copy()))
            nxt = anderson_step(history, fp_cfg.anderson_memory, fp_cfg.ridge)
            values = np.clip(nxt.reshape(values.shape), VOL_FLOOR, VOL_CAP)
        else:
            values = updated
    surface_obj = LocalVolSurface(t_knots, k_knots, values)
    final = model_vols(values)
    errors = (final - mkt) / BP
    max_err = float(np.max(np.abs(errors)))
    report = CalibrationReport(
        iterations=iterations,
        max_abs_iv_error_bp=max_err,
        per_quote_errors_bp=errors,
        converged=max_err <= fp_cfg.tol_bp,
        error_history_bp=err_hist,
    )
    return surface_obj, report


def _secondary_objective(target: CalibrationTarget, params: ModelParams,
                         curve: InitialCurve, pde_cfg: PdeGrid,
                         dcurve: DiscountCurve) -> float:
    horizon = max([q.option_expiry for q in target.pvo]
                  + [getattr(s, "option_expiry", getattr(s, "back_futures", 0.0))
                     for s in target.secondary])
    surf = solve_dupire(params, horizon, pde_cfg)
    errs = []
    dp = target.pvo[0].delivery
    for s in target.secondary:
        if isinstance(s, CsoTarget):
            drop = vol_drop(surf, params, curve, s.front_ltd, s.back_futures, dp, dcurve)
            errs.append(drop - s.target_drop)
        else:
            errs.append(model_iv(surf, params, s, curve, dcurve) - s.implied_vol)
    errs = np.asarray(errs)
    w = target.weights if target.weights is not None else np.ones(errs.size)
    return float(math.sqrt(np.sum(w * errs ** 2) / np.sum(w)))


def calibrate_mean_reversion(target: CalibrationTarget, curve: InitialCurve,
                             pde_cfg: PdeGrid | None = None,
                             fp_cfg: FixedPointConfig | None = None,
                             a_grid=None, dcurve: DiscountCurve | None = None,
                             golden_iters: int = 8
                             ) -> tuple[float, ModelParams, CalibrationReport]:
    """Grid search + golden-section refinement of a on the secondary RMSE."""
    if not target.secondary:
        raise ValueError("secondary targets required to fit the mean reversion")
    pde_cfg = pde_cfg or PdeGrid()
    fp_cfg = fp_cfg or FixedPointConfig()
    dcurve = dcurve or DiscountCurve()
    a_grid = np.arange(0.0, 2.01, 0.25) if a_grid is None else np.asarray(a_grid, dtype=float)
    a_path: list[tuple[float, float]] = []
    cache: dict[float, tuple] = {}

    def evaluate(a: float) -> float:
        a = round(float(a), 12)
        if a in cache:
            return cache[a][0]
        try:
            lv, rep = calibrate_local_vol(target.pvo, a, curve, pde_cfg, fp_cfg, dcurve)
        except Exception:
            cache[a] = (np.inf, None, None)
            return np.inf
        if not rep.converged:
            cache[a] = (np.inf, None, None)
            return np.inf
        params = ModelParams(a=a, localvol=lv)
        obj = _secondary_objective(target, params, curve, pde_cfg, dcurve)
        cache[a] = (obj, params, rep)
        a_path.append((a, obj))
        return obj

    objs = [evaluate(a) for a in a_grid]
    best_i = int(np.argmin(objs))  # argmin takes the first (smallest a) on ties
    if len(a_grid) > 1 and not math.isinf(objs[best_i]):
        lo = a_grid[max(best_i - 1, 0)]
        hi = a_grid[min(best_i + 1, len(a_grid) - 1)]
        if hi > lo:
            invphi = (math.sqrt(5.0) - 1.0) / 2.0
            x1 = hi - invphi * (hi - lo)
            x2 = lo + invphi * (hi - lo)
            f1, f2 = evaluate(x1), evaluate(x2)
            for _ in range(golden_iters):
                if f1 <= f2:
                    hi, x2, f2 = x2, x1, f1
                    x1 = hi - invphi * (hi - lo)
                    f1 = evaluate(x1)
                else:
                    lo, x1, f1 = x1, x2, f2
                    x2 = lo + invphi * (hi - lo)
                    f2 = evaluate(x2)
    best_a = min((a for a in cache if not math.isinf(cache[a][0])),
                 key=lambda a: (cache[a][0], a), default=None)
    if best_a is None:
        raise NoConvergenceError("no mean-reversion candidate calibrated successfully")
    obj, params, rep = cache[best_a]
    report = CalibrationReport(
        iterations=rep.iterations,
        max_abs_iv_error_bp=rep.max_abs_iv_error_bp,
        per_quote_errors_bp=rep.per_quote_errors_bp,
        converged=rep.converged,
        error_history_bp=rep.error_history_bp,
        a_path=sorted(a_path),
    )
    return float(best_a), params, report
