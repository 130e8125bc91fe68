"""Swing contract terms, reachability bounds and the consumption lattice.

The per-date lattice starts from the bang-bang points (iterated clamped
min/max consumption) and, for continuous strategies, is thickened so no gap
exceeds the spacing parameter. Bounds follow the reachability form
U_i = min(C_M - N_m (n_f - i), i N_M), D_i = max(C_m - N_M (n_f - i), i N_m),
which pins (D_nf, U_nf) = (C_m, C_M) for binding global constraints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .market import DeliveryPeriod
from .simulate import SimulationSchedule

LEVEL_TOL = 1e-9


@dataclass(frozen=True)
class FixedStrike:
    strike: float


@dataclass(frozen=True)
class FloatingStrike:
    month_T: float
    month_dp: DeliveryPeriod


@dataclass(frozen=True)
class SwingContract:
    schedule: SimulationSchedule
    N_m: float
    N_M: float
    C_m: float
    C_M: float
    strike: FixedStrike | FloatingStrike
    mode: str = "continuous"  # "continuous" | "bangbang"
    delta: float = 1.0 / 6.0
    pay_lag_days: int = 1

    def __post_init__(self):
        if not 0.0 <= self.N_m < self.N_M:
            raise ValueError("require 0 <= N_m < N_M")
        n_f = self.schedule.n_fixings
        if n_f * self.N_m > self.C_M + LEVEL_TOL:
            raise ValueError("infeasible: forced minimum exceeds C_M")
        if self.C_m > n_f * self.N_M + LEVEL_TOL:
            raise ValueError("infeasible: C_m unreachable at maximum consumption")
        if self.C_m > self.C_M:
            raise ValueError("require C_m <= C_M")
        if self.mode not in ("continuous", "bangbang"):
            raise ValueError("mode must be continuous or bangbang")
        if self.mode == "continuous" and self.delta <= 0.0:
            raise ValueError("continuous mode needs delta > 0")
        if isinstance(self.strike, FloatingStrike) and self.schedule.strike_times is None:
            raise ValueError("floating strike needs a strike window in the schedule")

    @property
    def n_fixings(self) -> int:
        return self.schedule.n_fixings

    def pay_times(self) -> np.ndarray:
        return self.schedule.fixing_times + self.pay_lag_days / 365.0


def global_bounds(contract: SwingContract, i: int) -> tuple[float, float]:
    """Reachable cumulative-consumption interval [D_i, U_i] after date i."""
    n_f = contract.n_fixings
    if not 1 <= i <= n_f:
        raise ValueError(f"date index {i} outside 1..{n_f}")
    U = min(contract.C_M - contract.N_m * (n_f - i), i * contract.N_M)
    D = max(contract.C_m - contract.N_M * (n_f - i), i * contract.N_m)
    return D, U


@dataclass(frozen=True)
class ConsumptionGrid:
    levels: tuple          # levels[i]: sorted np.ndarray, i = 0..n_f (levels[0] = [0])
    bb_mask: tuple         # bb_mask[i]: bool array marking bang-bang points
    D: np.ndarray          # D[i], U[i] for i = 1..n_f (index 0 unused)
    U: np.ndarray

    @property
    def n_dates(self) -> int:
        return len(self.levels) - 1

    def max_nodes(self) -> int:
        return max(lv.size for lv in self.levels)


def _unique_tol(values) -> np.ndarray:
    arr = np.sort(np.asarray(values, dtype=np.float64))
    keep = [arr[0]]
    for v in arr[1:]:
        if v - keep[-1] > LEVEL_TOL:
            keep.append(v)
    return np.asarray(keep)


def build_grid(contract: SwingContract) -> ConsumptionGrid:
    n_f = contract.n_fixings
    D = np.zeros(n_f + 1)
    U = np.zeros(n_f + 1)
    for i in range(1, n_f + 1):
        D[i], U[i] = global_bounds(contract, i)
    levels = [np.array([0.0])]
    bb_levels = [np.array([0.0])]  # pure bang-bang evolution, for the markers
    for i in range(1, n_f + 1):
        bb_pts = []
        for x in bb_levels[i - 1]:
            bb_pts.append(min(U[i], x + contract.N_M))
            bb_pts.append(max(D[i], x + contract.N_m))
        bb_levels.append(_unique_tol(bb_pts))
        pts = []
        for x in levels[i - 1]:
            pts.append(min(U[i], x + contract.N_M))
            pts.append(max(D[i], x + contract.N_m))
        ci = _unique_tol(pts)
        if contract.mode == "continuous":
            filled = list(ci)
            for j in range(ci.size - 1):
                gap = ci[j + 1] - ci[j]
                n_sub = int(math.ceil(gap / contract.delta - 1e-12))
                for q in range(1, n_sub):
                    filled.append(ci[j] + gap * q / n_sub)
            levels.append(_unique_tol(filled))
        else:
            levels.append(ci)
    masks = [np.array([True])]
    for i in range(1, n_f + 1):
        mask = np.zeros(levels[i].size, dtype=bool)
        for v in bb_levels[i]:
            mask[_find_level(levels[i], v)] = True
        masks.append(mask)
    return ConsumptionGrid(tuple(levels), tuple(masks), D, U)


def admissible_actions(contract: SwingContract, grid: ConsumptionGrid, i: int,
                       C_prev: float) -> np.ndarray:
    """Consumption choices from level C_prev at date i, grid-aligned."""
    if not 1 <= i <= grid.n_dates:
        raise ValueError(f"date index {i} outside 1..{grid.n_dates}")
    lv = grid.levels[i]
    bb_lo = max(grid.D[i], C_prev + contract.N_m)
    bb_hi = min(grid.U[i], C_prev + contract.N_M)
    if bb_hi < bb_lo - LEVEL_TOL:
        raise AssertionError(f"infeasible state C={C_prev} at date {i}")
    if contract.mode == "bangbang":
        targets = _unique_tol([bb_lo, bb_hi])
    else:
        lo = np.searchsorted(lv, C_prev + contract.N_m - LEVEL_TOL)
        hi = np.searchsorted(lv, C_prev + contract.N_M + LEVEL_TOL) - 1
        targets = lv[lo:hi + 1]
    actions = targets - C_prev
    if actions.size == 0:
        raise AssertionError(f"empty action set at date {i}, C={C_prev}")
    return actions


def grid_windows(contract: SwingContract, grid: ConsumptionGrid):
    """Per-(date, level) candidate index windows into the next date's grid.

    Returns padded int64 arrays (lo, hi, bb_lo, bb_hi) of shape
    (n_f+1, max_nodes); row i maps level index of grid.levels[i-1] to index
    bounds in grid.levels[i]. bb columns point at the two clamped extremes.
    """
    n_f = grid.n_dates
    width = grid.max_nodes()
    lo = np.zeros((n_f + 1, width), dtype=np.int64)
    hi = np.zeros((n_f + 1, width), dtype=np.int64)
    bb_lo = np.zeros((n_f + 1, width), dtype=np.int64)
    bb_hi = np.zeros((n_f + 1, width), dtype=np.int64)
    for i in range(1, n_f + 1):
        lv = grid.levels[i]
        prev = grid.levels[i - 1]
        for l, C in enumerate(prev):
            j0 = int(np.searchsorted(lv, C + contract.N_m - LEVEL_TOL))
            j1 = int(np.searchsorted(lv, C + contract.N_M + LEVEL_TOL)) - 1
            if j1 < j0:
                raise AssertionError(f"empty window at date {i}, level {C}")
            lo[i, l] = j0
            hi[i, l] = j1
            tgt_lo = max(grid.D[i], C + contract.N_m)
            tgt_hi = min(grid.U[i], C + contract.N_M)
            jb0 = _find_level(lv, tgt_lo)
            jb1 = _find_level(lv, tgt_hi)
            bb_lo[i, l] = jb0
            bb_hi[i, l] = jb1
    return lo, hi, bb_lo, bb_hi


def _find_level(lv: np.ndarray, target: float) -> int:
    j = int(np.searchsorted(lv, target))
    best, bdist = -1, np.inf
    for cand in (j - 1, j, j + 1):
        if 0 <= cand < lv.size and abs(lv[cand] - target) < bdist:
            best, bdist = cand, abs(lv[cand] - target)
    if bdist > LEVEL_TOL:
        raise AssertionError(f"clamped level {target} missing from grid")
    return best
