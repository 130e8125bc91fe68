"""Batch front door: config-driven calibration, smile implication and pricing.

Every artifact embeds the config hash, the seed and the engine version in a
leading comment line, and reruns with the same config are byte-identical.
Exit codes: 0 success, 1 config error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from . import __version__, nets, rng
from .backend import backend_name, set_num_threads
from .calibrate import (CalibrationTarget, CsoTarget, FixedPointConfig, NoConvergenceError,
                        calibrate_local_vol, calibrate_mean_reversion)
from .contracts import FixedStrike, FloatingStrike, SwingContract, build_grid
from .lsmc import price_swing
from .lvmodel import LocalVolSurface, ModelParams, relative_remap
from .market import (DAY, DeliveryPeriod, DiscountCurve, HorizonExceededError,
                     MalformedRowError, load_curve, load_quotes, period_futures, year_fraction)
from .pde import PdeGrid, model_iv_pvo, option_on_futures, solve_dupire, solve_dupire_remapped
from .ppo import SwingEnv, TrainConfig, price_with_policy, train
from .simulate import SimulationSchedule, martingale_report
from .spikes import SpikeParams, h as spike_h, simulate_spike_values, spike_adjusted_spot

EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    pass


_SCHEMA = {
    "market": {"curve": str, "quotes": str},
    "model": {"a": float, "a_grid": list, "quoted_delivery_days": int,
              "surface": str, "pde_k_max": float, "pde_nodes": int,
              "tol_bp": float, "max_iter": int, "initial_vol": float},
    "spike": {"gamma": float, "intensity": float, "zeta": float},
    "contract": {"delivery_start": str, "n_fixings": int, "N_m": float,
                 "N_M": float, "C_m": float, "C_M": float, "strike": str,
                 "strike_level": (str, float), "strike_window_start": str,
                 "strike_window_days": int, "mode": str, "delta": float,
                 "pay_lag_days": int},
    "engine": {"n_reg_paths": int, "n_price_paths": int, "seed": int,
               "chunk_size": int, "diag_paths": int,
               "ppo": {"restarts": int, "total_episodes": int, "beta": float,
                       "batch_episodes": int, "sgd_epochs": int, "minibatch": int,
                       "learn_rate": float, "gae_lambda": float, "clip_eps": float,
                       "optimizer": str, "hidden_layers": int, "hidden_units": int,
                       "shared_log_std": bool}},
    "smile": {"deliveries_days": list, "moneyness": list},
    "output": {"dir": str},
}


def _validate(node, schema, path="") -> None:
    if not isinstance(node, dict):
        raise ConfigError(f"{path or 'config'} must be a table")
    for key, val in node.items():
        if key not in schema:
            raise ConfigError(f"unknown key {path}{key}")
        want = schema[key]
        if isinstance(want, dict):
            _validate(val, want, f"{path}{key}.")
        elif want is float:
            if not isinstance(val, (int, float)) or isinstance(val, bool):
                raise ConfigError(f"{path}{key} must be a number")
        elif isinstance(want, tuple):
            if not isinstance(val, want) or isinstance(val, bool):
                raise ConfigError(f"{path}{key} has wrong type")
        elif not isinstance(val, want) or (want is int and isinstance(val, bool)):
            raise ConfigError(f"{path}{key} must be {want.__name__}")


def load_config(path: str) -> tuple[dict, str]:
    raw = Path(path).read_bytes()
    text = raw.decode("utf-8")
    if path.endswith(".json") or text.lstrip().startswith("{"):
        cfg = json.loads(text)
    else:
        try:
            import tomllib  # py311+
        except ImportError:
            import tomli as tomllib
        cfg = tomllib.loads(text)
    _validate(cfg, _SCHEMA)
    return cfg, hashlib.sha256(raw).hexdigest()[:16]


def _stamp(cfg_hash: str, seed: int) -> str:
    return f"# swingopt={__version__} backend={backend_name()} config_sha256={cfg_hash} seed={seed}"


def _write_csv(path: Path, stamp: str, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(stamp + "\n")
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(row)


def _pde_grid(cfg: dict) -> PdeGrid:
    m = cfg.get("model", {})
    return PdeGrid(k_max=m.get("pde_k_max", 4.0), nodes=m.get("pde_nodes", 801))


def _fp_cfg(cfg: dict, args) -> FixedPointConfig:
    m = cfg.get("model", {})
    return FixedPointConfig(tol_bp=args.tol_bp if args.tol_bp is not None else m.get("tol_bp", 0.1),
                            max_iter=args.max_iter if args.max_iter is not None else m.get("max_iter", 50))


def _quoted_dp(cfg: dict) -> DeliveryPeriod:
    days = cfg.get("model", {}).get("quoted_delivery_days", 30)
    return DeliveryPeriod(0.0, days * DAY, f"{days}d")


def _seed(cfg: dict, args) -> int:
    if args.seed is not None:
        return args.seed
    return cfg.get("engine", {}).get("seed", 0)


def _load_market(cfg: dict):
    mk = cfg.get("market", {})
    if "curve" not in mk:
        raise ConfigError("market.curve is required")
    curve = load_curve(mk["curve"])
    quotes = None
    if "quotes" in mk:
        quotes = load_quotes(mk["quotes"], curve.valuation_date)
    return curve, quotes


def _model_from_config(cfg: dict, curve, args):
    """(params, report_or_None). Either reuse a serialized surface or calibrate."""
    m = cfg.get("model", {})
    if "surface" in m:
        lv = LocalVolSurface.from_csv(m["surface"])
        return ModelParams(a=float(m.get("a", 0.0)), localvol=lv), None
    _, quotes = _load_market(cfg)
    if not quotes:
        raise ConfigError("model.surface or market.quotes required")
    pvo = [q for q in quotes if q.kind == "PVO"]
    mco = [q for q in quotes if q.kind == "MCO"]
    fp = _fp_cfg(cfg, args)
    grid = _pde_grid(cfg)
    if "a_grid" in m and mco:
        target = CalibrationTarget(pvo, mco)
        a, params, report = calibrate_mean_reversion(
            target, curve, grid, fp, a_grid=[float(x) for x in m["a_grid"]])
        return params, report
    a = float(m.get("a", 0.0))
    lv, report = calibrate_local_vol(pvo, a, curve, grid, fp,
                                     initial_guess=m.get("initial_vol", 0.2))
    if not report.converged:
        raise NoConvergenceError(
            f"calibration stalled at {report.max_abs_iv_error_bp:.3f}bp")
    return ModelParams(a=a, localvol=lv), report


def _contract_from_config(cfg: dict, curve) -> SwingContract:
    c = cfg.get("contract", {})
    for key in ("delivery_start", "n_fixings"):
        if key not in c:
            raise ConfigError(f"contract.{key} is required")
    start = date.fromisoformat(c["delivery_start"])
    n_f = c["n_fixings"]
    fixing_times = np.array([year_fraction(curve.valuation_date, start + timedelta(days=i))
                             for i in range(n_f)])
    strike_kind = c.get("strike", "fixed")
    month_dp = DeliveryPeriod(0.0, n_f * DAY, "1m")
    month_T = float(fixing_times[0])
    strike_times = None
    if strike_kind == "floating":
        if "strike_window_start" not in c:
            raise ConfigError("contract.strike_window_start required for floating strikes")
        ws = date.fromisoformat(c["strike_window_start"])
        wd = c.get("strike_window_days", 20)
        strike_times = np.array([year_fraction(curve.valuation_date, ws + timedelta(days=i))
                                 for i in range(wd)])
        strike = FloatingStrike(month_T, month_dp)
    else:
        level = c.get("strike_level", "atm")
        if isinstance(level, str):
            if level != "atm":
                raise ConfigError("strike_level must be 'atm' or a number")
            k = period_futures(curve, month_T, month_dp)
        else:
            k = float(level)
        strike = FixedStrike(k)
    schedule = SimulationSchedule(fixing_times, strike_times)
    return SwingContract(schedule, c.get("N_m", 0.0), c.get("N_M", 1.0),
                         c.get("C_m", 0.0), c.get("C_M", n_f * c.get("N_M", 1.0)),
                         strike, c.get("mode", "continuous"),
                         c.get("delta", 1.0 / 6.0), c.get("pay_lag_days", 1))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_calibrate(cfg, cfg_hash, args, out: Path) -> int:
    curve, _ = _load_market(cfg)
    seed = _seed(cfg, args)
    params, report = _model_from_config(cfg, curve, args)
    stamp = _stamp(cfg_hash, seed)
    params.localvol.to_csv(out / "surface.csv")
    with open(out / "surface.csv") as fh:
        body = fh.read()
    with open(out / "surface.csv", "w") as fh:
        fh.write(stamp + "\n" + body)
    rows = [["a", f"{params.a:.10g}"]]
    if report is not None:
        rows += [["iterations", report.iterations],
                 ["max_abs_iv_error_bp", f"{report.max_abs_iv_error_bp:.6f}"],
                 ["converged", report.converged]]
        rows += [["a_candidate", f"{a:.6g}", f"{obj:.10g}"] for a, obj in report.a_path]
    _write_csv(out / "calibration_report.csv", stamp, ["field", "value", "extra"],
               [r + [""] * (3 - len(r)) for r in rows])
    print(f"calibrated a={params.a} -> {out}")
    return 0


def cmd_imply_smile(cfg, cfg_hash, args, out: Path) -> int:
    curve, quotes = _load_market(cfg)
    seed = _seed(cfg, args)
    params, _ = _model_from_config(cfg, curve, args)
    base_dp = _quoted_dp(cfg)
    sm = cfg.get("smile", {})
    deliveries = sm.get("deliveries_days", [1, 30, 90, 180])
    moneyness = sm.get("moneyness", [round(0.8 + 0.04 * i, 4) for i in range(11)])
    if quotes:
        expiries = sorted({q.option_expiry for q in quotes if q.kind == "PVO"})
    else:
        expiries = [0.25, 0.5, 0.75, 1.0]
    grid = _pde_grid(cfg)
    horizon = max(expiries)
    rows = []
    for days in deliveries:
        dp = DeliveryPeriod(0.0, days * DAY, f"{days}d")
        remap = relative_remap(curve, params, dp, base_dp,
                               t_max=horizon + max(dp.delta1, base_dp.delta1) + 2 * DAY)
        surf = solve_dupire_remapped(params, horizon, remap, grid)
        for T in expiries:
            F0 = period_futures(curve, T, dp)
            for m in moneyness:
                K = m * F0
                price = option_on_futures(surf, params, T, T, K, F0, 1.0, remap)
                from .market import implied_vol
                iv = implied_vol(price, F0, K, T, 1.0)
                rows.append([f"{days}d", f"{T:.8g}", f"{m:.6g}", f"{K:.8g}", f"{iv:.8g}"])
    _write_csv(out / "implied_smiles.csv", _stamp(cfg_hash, seed),
               ["delivery", "expiry", "moneyness", "strike", "iv"], rows)
    print(f"implied smiles for {len(deliveries)} deliveries -> {out}")
    return 0


def _pricing_rows(res) -> list[list]:
    return [["price", f"{res.price:.10g}"],
            ["std_error", f"{res.std_error:.10g}"],
            ["n_paths", res.n_paths],
            ["bang_bang_fraction", f"{res.bang_bang_fraction:.8g}"],
            ["constraint_violations", getattr(res, "constraint_violations", 0)],
            ["seed", res.seed]]


def cmd_price_lsmc(cfg, cfg_hash, args, out: Path) -> int:
    curve, _ = _load_market(cfg)
    seed = _seed(cfg, args)
    params, _ = _model_from_config(cfg, curve, args)
    contract = _contract_from_config(cfg, curve)
    eng = cfg.get("engine", {})
    res = price_swing(contract, params, curve, DiscountCurve(),
                      n_reg_paths=eng.get("n_reg_paths", 100_000),
                      n_price_paths=eng.get("n_price_paths", 1_000_000),
                      seed=seed, base_dp=_quoted_dp(cfg),
                      chunk_size=eng.get("chunk_size", 250_000))
    stamp = _stamp(cfg_hash, seed)
    _write_csv(out / "lsmc_price.csv", stamp, ["field", "value"], _pricing_rows(res))
    _write_csv(out / "lsmc_consumption_profile.csv", stamp, ["date_index", "mean_consumption"],
               [[i + 1, f"{v:.8g}"] for i, v in enumerate(res.mean_consumption)])
    print(f"LSMC price {res.price:.4f} +/- {res.std_error:.4f} -> {out}")
    return 0


def _ppo_config(cfg, args) -> TrainConfig:
    p = cfg.get("engine", {}).get("ppo", {})
    return TrainConfig(
        gae_lambda=p.get("gae_lambda", 0.95),
        clip_eps=p.get("clip_eps", 0.2),
        learn_rate=p.get("learn_rate", 3e-4),
        value_coef=args.beta if args.beta is not None else p.get("beta", 0.01),
        batch_episodes=p.get("batch_episodes", 2048),
        sgd_epochs=p.get("sgd_epochs", 10),
        minibatch=p.get("minibatch", 64),
        restarts=args.restarts if args.restarts is not None else p.get("restarts", 4),
        total_episodes=args.episodes if args.episodes is not None else p.get("total_episodes", 200_000),
        optimizer=p.get("optimizer", "adam"),
        hidden_layers=p.get("hidden_layers", 5),
        hidden_units=p.get("hidden_units", 4),
        shared_log_std=p.get("shared_log_std", False),
    )


def save_policy(path: Path, theta) -> None:
    """Versioned flat binary: two text header lines then float64 payload."""
    flat = nets.flatten(theta.all_params())
    shapes = [list(p.shape) for p in theta.all_params()]
    meta = json.dumps({"mode": theta.mode, "shapes": shapes,
                       "n_action": len(theta.action_net), "n_value": len(theta.value_net)})
    with open(path, "wb") as fh:
        fh.write(b"SWINGOPT-POLICY v1\n")
        fh.write(meta.encode() + b"\n")
        fh.write(flat.astype("<f8").tobytes())


def load_policy(path: Path):
    from .ppo import PolicyParams
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"SWINGOPT-POLICY v1":
            raise MalformedRowError(1, f"bad policy file magic {magic!r}")
        meta = json.loads(fh.readline().decode())
        flat = np.frombuffer(fh.read(), dtype="<f8")
    arrays = []
    pos = 0
    for shape in meta["shapes"]:
        n = int(np.prod(shape)) if shape else 1
        arrays.append(flat[pos:pos + n].reshape(shape).copy())
        pos += n
    na, nv = meta["n_action"], meta["n_value"]
    if meta["mode"] == "continuous":
        return PolicyParams(arrays[:na], arrays[na:na + nv], arrays[-1], meta["mode"])
    return PolicyParams(arrays[:na], arrays[na:na + nv], np.zeros(1), meta["mode"])


def cmd_price_ppo(cfg, cfg_hash, args, out: Path) -> int:
    curve, _ = _load_market(cfg)
    seed = _seed(cfg, args)
    params, _ = _model_from_config(cfg, curve, args)
    contract = _contract_from_config(cfg, curve)
    if args.mode is not None:
        from dataclasses import replace
        contract = replace(contract, mode=args.mode)
    tc = _ppo_config(cfg, args)
    result = train(contract, params, curve, tc, seed, base_dp=_quoted_dp(cfg))
    eng = cfg.get("engine", {})
    res = price_with_policy(result.theta, contract, params, curve,
                            eng.get("n_price_paths", 1_000_000), seed,
                            base_dp=_quoted_dp(cfg),
                            chunk_size=eng.get("chunk_size", 250_000))
    stamp = _stamp(cfg_hash, seed)
    rows = []
    for r, curve_r in enumerate(result.curves):
        for e, m, lo, hi in zip(curve_r.episodes, curve_r.avg_reward,
                                curve_r.ci_low, curve_r.ci_high):
            rows.append([r, e, f"{m:.8g}", f"{lo:.8g}", f"{hi:.8g}"])
    _write_csv(out / "ppo_learning_curve.csv", stamp,
               ["restart", "episode", "avg_reward", "ci_low", "ci_high"], rows)
    _write_csv(out / "ppo_price.csv", stamp, ["field", "value"],
               _pricing_rows(res) + [["best_restart", result.best_restart]])
    save_policy(out / "ppo_policy.bin", result.theta)
    if args.policy_surface is not None:
        env = SwingEnv(contract, params, curve, base_dp=_quoted_dp(cfg))
        i = args.policy_surface
        if not 1 <= i <= contract.n_fixings:
            raise ConfigError("--policy-surface date index out of range")
        ft = contract.schedule.fixing_times
        t = (float(ft[i - 1]) - ft[0]) / (ft[-1] - ft[0]) - 0.5 if ft.size > 1 else 0.0
        srows = []
        for cn in np.linspace(-0.5, 0.5, 21):
            for lm in np.linspace(-0.5, 0.5, 21):
                st = np.array([[t, cn, lm]] if env.state_dim == 3
                              else [[t, cn, lm, 1.0]])
                o, _ = nets.mlp_forward(result.theta.action_net, st)
                if contract.mode == "continuous":
                    act = float(np.clip(o[0, 0], 0.0, 1.0))
                else:
                    act = float(o[0, 1] > o[0, 0])
                srows.append([f"{lm:.4g}", f"{cn:.4g}", f"{act:.8g}"])
        _write_csv(out / "ppo_policy_surface.csv", stamp,
                   ["log_moneyness", "consumption_norm", "action"], srows)
    print(f"PPO price {res.price:.4f} +/- {res.std_error:.4f} -> {out}")
    return 0


def cmd_diagnose(cfg, cfg_hash, args, out: Path) -> int:
    curve, _ = _load_market(cfg)
    seed = _seed(cfg, args)
    params, _ = _model_from_config(cfg, curve, args)
    contract = _contract_from_config(cfg, curve)
    n_diag = cfg.get("engine", {}).get("diag_paths", 100_000)
    rep = martingale_report(params, curve, contract.schedule, n_diag, seed,
                            base_dp=_quoted_dp(cfg))
    grid = build_grid(contract)
    grid_ok = all(
        grid.levels[i][0] >= grid.D[i] - 1e-9 and grid.levels[i][-1] <= grid.U[i] + 1e-9
        for i in range(1, contract.n_fixings + 1))
    bb_ok = all(m.any() for m in grid.bb_mask)
    surf = solve_dupire(params, float(contract.schedule.fixing_times[-1]) + DAY,
                        _pde_grid(cfg))
    rows = [
        ["max_abs_spot_z", f"{rep['max_abs_spot_z']:.4f}"],
        ["max_abs_fixing_z", f"{rep['max_abs_fixing_z']:.4f}"],
        ["grid_within_bounds", grid_ok],
        ["bang_bang_present", bb_ok],
        ["pde_bound_violation", f"{surf.bound_violation():.3e}"],
        ["pde_convexity_violation", f"{surf.convexity_violation():.3e}"],
        ["n_diag_paths", n_diag],
    ]
    sp = cfg.get("spike", {})
    if sp:
        spike = SpikeParams(sp.get("gamma", 10.0), sp.get("intensity", 0.0),
                            sp.get("zeta", 0.0))
        T = float(contract.schedule.fixing_times[-1])
        y = simulate_spike_values(spike, [T], n_diag, seed)[:, 0]
        z = (y.mean() - spike_h(spike, 0.0, T)) / max(y.std(ddof=1) / math.sqrt(n_diag), 1e-300)
        rows.append(["spike_mean_z", f"{z:.4f}"])
        bar0 = spike_adjusted_spot(1.0, 0.0, 0.0, curve, spike)
        rows.append(["spike_t0_exact", abs(bar0 - curve.f0(0.0)) < 1e-12])
    _write_csv(out / "diagnostics.csv", _stamp(cfg_hash, seed), ["check", "value"], rows)
    healthy = (rep["max_abs_spot_z"] <= 4.0 and rep["max_abs_fixing_z"] <= 4.0
               and grid_ok and bb_ok and surf.bound_violation() < 1e-8)
    print(f"diagnostics {'pass' if healthy else 'FAIL'} -> {out}")
    return 0 if healthy else EXIT_NUMERICAL


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="swingopt",
                                 description="commodity smile calibration and swing pricing")
    ap.add_argument("command", choices=["calibrate", "imply-smile", "price-lsmc",
                                        "price-ppo", "diagnose"])
    ap.add_argument("--config", required=True)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--out", default=None)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--tol-bp", dest="tol_bp", type=float, default=None)
    ap.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    ap.add_argument("--restarts", type=int, default=None)
    ap.add_argument("--episodes", type=int, default=None)
    ap.add_argument("--mode", choices=["continuous", "bangbang"], default=None)
    ap.add_argument("--beta", type=float, default=None)
    ap.add_argument("--policy-surface", type=int, default=None,
                    help="dump the action grid at this fixing date index")
    args = ap.parse_args(argv)
    if args.threads is not None:
        set_num_threads(args.threads)
    try:
        cfg, cfg_hash = load_config(args.config)
    except (ConfigError, OSError, ValueError) as exc:  # ValueError covers TOML/JSON decode
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out if args.out is not None else cfg.get("output", {}).get("dir", "out"))
    out.mkdir(parents=True, exist_ok=True)
    handler = {"calibrate": cmd_calibrate, "imply-smile": cmd_imply_smile,
               "price-lsmc": cmd_price_lsmc, "price-ppo": cmd_price_ppo,
               "diagnose": cmd_diagnose}[args.command]
    try:
        return handler(cfg, cfg_hash, args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MalformedRowError, HorizonExceededError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NoConvergenceError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
