"""Least-square Monte Carlo swing pricing.

Backward phase: the terminal rule forces the clamped extreme consumption,
then each earlier date regresses next-date values per grid node on the
current fixing (quadratic basis; strike terms join the basis for floating
strikes) and maximizes immediate payoff plus fitted continuation over the
admissible window. Forward phase: a fresh simulation walks the fitted
policy greedily to produce unbiased rewards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels, rng
from .backend import USE_NUMBA
from .contracts import ConsumptionGrid, FixedStrike, FloatingStrike, SwingContract, build_grid, grid_windows
from .lvmodel import ModelParams
from .market import DiscountCurve, InitialCurve, DeliveryPeriod
from .simulate import FixingSet, attach_floating_strikes, day_ahead_fixings, floating_strikes, simulate_spot

COND_LIMIT = 1e12


@dataclass
class RegressionCoeffs:
    """Standardized per-(date, node) polynomial continuation estimates."""

    n_basis: int                       # 3 fixed-strike, 6 floating
    coeffs: np.ndarray                 # (n_f+1, max_nodes, 6); rows 1..n_f-1 used
    muF: np.ndarray
    sgF: np.ndarray
    muK: np.ndarray
    sgK: np.ndarray
    fallback_dates: list = field(default_factory=list)

    def continuation(self, i: int, node: int, F, K=None):
        c = self.coeffs[i, node]
        zf = (np.asarray(F) - self.muF[i]) / self.sgF[i]
        if self.n_basis == 3:
            return c[0] + zf * (c[1] + zf * c[2])
        zk = (np.asarray(K) - self.muK[i]) / self.sgK[i]
        return (c[0] + c[1] * zf + c[2] * zk + c[3] * zf * zf
                + c[4] * zk * zk + c[5] * zf * zk)

    def raw_quadratic(self, i: int, node: int) -> tuple[float, float, float]:
        """(alpha, beta, gamma) in the un-standardized fixing for tests/audit."""
        if self.n_basis != 3:
            raise ValueError("raw quadratic only defined for the fixed-strike basis")
        c0, c1, c2 = self.coeffs[i, node, :3]
        mu, sg = self.muF[i], self.sgF[i]
        gamma = c2 / (sg * sg)
        beta = c1 / sg - 2.0 * c2 * mu / (sg * sg)
        alpha = c0 - c1 * mu / sg + c2 * mu * mu / (sg * sg)
        return float(alpha), float(beta), float(gamma)


@dataclass(frozen=True)
class PricingResult:
    price: float
    std_error: float
    n_paths: int
    mean_consumption: np.ndarray
    bang_bang_fraction: float
    seed: int
    regression_seed_domain: tuple[int, int]
    pricing_seed_domain: tuple[int, int]
    constraint_violations: int = 0


def _strike_vector(fixset: FixingSet, contract: SwingContract, n_paths: int) -> np.ndarray:
    if isinstance(contract.strike, FixedStrike):
        return np.full(n_paths, contract.strike.strike)
    if fixset.strikes is None:
        raise ValueError("floating-strike contract needs per-path strikes")
    return fixset.strikes


def _discounts(contract: SwingContract, dcurve: DiscountCurve):
    n_f = contract.n_fixings
    pay = np.ones(n_f + 1)
    pay[1:] = dcurve.df(contract.pay_times())
    cont = np.ones(n_f + 1)
    for i in range(1, n_f):
        cont[i] = pay[i + 1] / pay[i]
    return pay, cont


def _fit_date(F: np.ndarray, K: np.ndarray, W_next: np.ndarray, n_basis: int):
    """Least squares per node; coefficients always laid out in n_basis slots."""
    n_nodes, P = W_next.shape
    out = np.zeros((n_nodes, 6))
    muF, sgF = float(np.mean(F)), float(np.std(F))
    muK, sgK = float(np.mean(K)), float(np.std(K))
    fallback = False
    strike_flat = n_basis == 6 and sgK < 1e-12 * max(1.0, abs(muK))
    if strike_flat:
        sgK = 1.0
    if sgF < 1e-12 * max(1.0, abs(muF)):
        fallback = True
    if not fallback:
        zf = (F - muF) / sgF
        if n_basis == 3 or strike_flat:
            B = np.column_stack([np.ones_like(zf), zf, zf * zf])
            slots = [0, 1, 2] if n_basis == 3 else [0, 1, 3]
        else:
            zk = (K - muK) / sgK
            B = np.column_stack([np.ones_like(zf), zf, zk, zf * zf, zk * zk, zf * zk])
            slots = [0, 1, 2, 3, 4, 5]
        G = B.T @ B
        if np.linalg.cond(G) > COND_LIMIT:
            fallback = True
        else:
            sol = np.linalg.solve(G, B.T @ W_next.T)  # (cols, n_nodes)
            out[:, slots] = sol.T
    if fallback:
        out[:] = 0.0
        out[:, 0] = W_next.mean(axis=1)
        muF, sgF, muK, sgK = 0.0, 1.0, 0.0, 1.0
    return out, muF, sgF, muK, sgK, fallback


def backward_regression(fixset: FixingSet, grid: ConsumptionGrid,
                        contract: SwingContract, dcurve: DiscountCurve | None = None
                        ) -> RegressionCoeffs:
    """Terminal rule plus per-node quadratic regressions, backward in time."""
    dcurve = dcurve or DiscountCurve()
    n_f = contract.n_fixings
    F = fixset.fixings
    P = F.shape[0]
    K = _strike_vector(fixset, contract, P)
    pay_df, cont_df = _discounts(contract, dcurve)
    lo, hi, bb_lo, bb_hi = grid_windows(contract, grid)
    bang = contract.mode == "bangbang"
    want_basis = 6 if isinstance(contract.strike, FloatingStrike) else 3
    max_nodes = grid.max_nodes()
    all_coeffs = np.zeros((n_f + 1, max_nodes, 6))
    muF = np.zeros(n_f + 1)
    sgF = np.ones(n_f + 1)
    muK = np.zeros(n_f + 1)
    sgK = np.ones(n_f + 1)
    fallback_dates = []

    # terminal values on grid[n_f-1]
    prev_nodes = grid.levels[n_f - 1]
    Fn = F[:, n_f - 1]
    payoff = Fn - K
    up = Fn > K
    W = np.empty((prev_nodes.size, P))
    for l, C in enumerate(prev_nodes):
        n_up = min(grid.U[n_f] - C, contract.N_M)
        n_dn = max(grid.D[n_f] - C, contract.N_m)
        W[l] = np.where(up, n_up, n_dn) * payoff

    for i in range(n_f - 1, 0, -1):
        Fi = F[:, i - 1]
        coeff_i, muF[i], sgF[i], muK[i], sgK[i], fb = _fit_date(Fi, K, W, want_basis)
        all_coeffs[i, : coeff_i.shape[0]] = coeff_i
        if fb:
            fallback_dates.append(i)
        Ci = grid.levels[i]
        Cprev = grid.levels[i - 1]
        backward_max = kernels.lsmc_backward_max_nb if USE_NUMBA else kernels.lsmc_backward_max_np
        W = backward_max(coeff_i, want_basis, muF[i], sgF[i], muK[i], sgK[i],
                         Fi, K, Ci, Cprev, lo[i], hi[i], bb_lo[i], bb_hi[i],
                         bang, cont_df[i])
    return RegressionCoeffs(want_basis, all_coeffs, muF, sgF, muK, sgK, fallback_dates)


def forward_price(coeffs: RegressionCoeffs, fixset: FixingSet, grid: ConsumptionGrid,
                  contract: SwingContract, dcurve: DiscountCurve | None = None,
                  want_profile: bool = True):
    """Greedy forward walk; returns (rewards, consumption, extremes, violations)."""
    dcurve = dcurve or DiscountCurve()
    F = fixset.fixings
    P = F.shape[0]
    K = _strike_vector(fixset, contract, P)
    pay_df, cont_df = _discounts(contract, dcurve)
    lo, hi, bb_lo, bb_hi = grid_windows(contract, grid)
    bang = contract.mode == "bangbang"
    n_f = contract.n_fixings
    width = grid.max_nodes()
    G = np.zeros((n_f + 1, width))
    glen = np.zeros(n_f + 1, dtype=np.int64)
    for i, lv in enumerate(grid.levels):
        G[i, : lv.size] = lv
        glen[i] = lv.size
    tol = 1e-7 * max(1.0, contract.N_M)
    if USE_NUMBA:
        rewards, cons, extreme, viol = kernels.lsmc_forward_nb(
            F, K, G, glen, lo, hi, bb_lo, bb_hi, bang,
            coeffs.coeffs, coeffs.muF, coeffs.sgF, coeffs.muK, coeffs.sgK,
            coeffs.n_basis, cont_df, pay_df, contract.N_m, contract.N_M, tol,
            want_profile)
        violations = int(viol.sum())
    else:
        grids_list = [G[i] for i in range(n_f + 1)]
        rewards, cons, extreme, violations = kernels.lsmc_forward_np(
            F, K, grids_list, glen, lo, hi, bb_lo, bb_hi, bang,
            coeffs.coeffs, coeffs.muF, coeffs.sgF, coeffs.muK, coeffs.sgK,
            coeffs.n_basis, cont_df, pay_df, contract.N_m, contract.N_M, tol,
            want_profile)
    return rewards, cons, extreme, violations


def _make_fixings(contract: SwingContract, params: ModelParams, curve: InitialCurve,
                  n_paths: int, seed: int, path0: int,
                  base_dp: DeliveryPeriod | None) -> FixingSet:
    ps = simulate_spot(params, contract.schedule, n_paths, seed, path0=path0)
    fx = day_ahead_fixings(ps, params, curve, contract.schedule, base_dp)
    if isinstance(contract.strike, FloatingStrike):
        ks = floating_strikes(ps, params, curve, contract.schedule,
                              contract.strike.month_T, contract.strike.month_dp)
        fx = attach_floating_strikes(fx, ks)
    return fx


def price_swing(contract: SwingContract, params: ModelParams, curve: InitialCurve,
                dcurve: DiscountCurve | None = None, n_reg_paths: int = 100_000,
                n_price_paths: int = 1_000_000, seed: int = 0,
                base_dp: DeliveryPeriod | None = None, chunk_size: int = 250_000,
                want_profile: bool = True) -> PricingResult:
    """End-to-end LSMC price: grid, backward regression, forward repricing.

    The two phases draw from disjoint path-id domains of the same seed; the
    repricing simulation is fresh by construction.
    """
    dcurve = dcurve or DiscountCurve()
    grid = build_grid(contract)
    reg_fix = _make_fixings(contract, params, curve, n_reg_paths, seed, 0, base_dp)
    coeffs = backward_regression(reg_fix, grid, contract, dcurve)
    n_f = contract.n_fixings
    total = 0
    sum_r = 0.0
    sum_r2 = 0.0
    cons_sum = np.zeros(n_f)
    extreme_total = 0
    violations = 0
    for c0 in range(0, n_price_paths, chunk_size):
        c1 = min(n_price_paths, c0 + chunk_size)
        fx = _make_fixings(contract, params, curve, c1 - c0, seed,
                           rng.PRICING_PATH_BASE + c0, base_dp)
        rewards, cons, extreme, viol = forward_price(
            coeffs, fx, grid, contract, dcurve, want_profile)
        sum_r += float(np.sum(rewards))
        sum_r2 += float(np.sum(rewards * rewards))
        if want_profile:
            cons_sum += cons.sum(axis=0)
        extreme_total += int(np.sum(extreme))
        violations += int(violations_count(viol))
        total += c1 - c0
    price = sum_r / total
    var = max(sum_r2 / total - price * price, 0.0)
    se = math.sqrt(var / total)
    return PricingResult(
        price=price,
        std_error=se,
        n_paths=total,
        mean_consumption=cons_sum / total if want_profile else np.zeros(0),
        bang_bang_fraction=extreme_total / (total * n_f),
        seed=seed,
        regression_seed_domain=(0, n_reg_paths),
        pricing_seed_domain=(rng.PRICING_PATH_BASE, rng.PRICING_PATH_BASE + n_price_paths),
        constraint_violations=violations,
    )


def violations_count(v) -> int:
    return int(v.sum()) if isinstance(v, np.ndarray) else int(v)
