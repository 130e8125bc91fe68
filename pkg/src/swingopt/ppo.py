"""Proximal-policy swing pricer: environment, actor-critic, GAE, clipped updates.

The environment replays model-simulated day-ahead fixings; the agent picks a
consumption each date. Raw continuous actions are clipped to [0,1] and
remapped onto the admissible interval, so every episode satisfies the
contract constraints by construction. Learning follows the clipped-surrogate
objective with a squared value loss, updated once per batch of episodes.
All sampling is counter-based: a fixed seed reproduces the learning curve
bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import nets, rng
from .contracts import FixedStrike, FloatingStrike, SwingContract, global_bounds
from .lsmc import PricingResult
from .lvmodel import ModelParams
from .market import DAY, DeliveryPeriod, DiscountCurve, InitialCurve, ONE_DAY, period_futures
from .simulate import attach_floating_strikes, day_ahead_fixings, floating_strikes, simulate_spot

STREAM_POLICY = 0xAC710
STREAM_SHUFFLE = 0x50FF1E
LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class TrainConfig:
    gae_lambda: float = 0.95
    clip_eps: float = 0.2
    learn_rate: float = 3e-4
    value_coef: float = 0.01
    batch_episodes: int = 2048
    sgd_epochs: int = 10
    minibatch: int = 64
    restarts: int = 4
    total_episodes: int = 200_000
    selection_frac: float = 0.1
    hidden_layers: int = 5
    hidden_units: int = 4
    optimizer: str = "adam"  # "adam" | "sgd"
    anneal_lr: bool = True
    shared_log_std: bool = False
    xi_init: float = math.log(0.5)
    normalize_advantages: bool = True

    def __post_init__(self):
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError("gae_lambda must lie in [0, 1]")
        if not 0.0 < self.clip_eps < 1.0:
            raise ValueError("clip_eps must lie in (0, 1)")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError("optimizer must be adam or sgd")


@dataclass
class PolicyParams:
    action_net: list[np.ndarray]
    value_net: list[np.ndarray]
    log_std: np.ndarray  # per-date xi (Continuous mode); size 1 when shared
    mode: str

    def all_params(self) -> list[np.ndarray]:
        if self.mode == "continuous":
            return self.action_net + self.value_net + [self.log_std]
        return self.action_net + self.value_net

    def clone(self) -> "PolicyParams":
        return PolicyParams([p.copy() for p in self.action_net],
                            [p.copy() for p in self.value_net],
                            self.log_std.copy(), self.mode)


@dataclass
class Batch:
    states: np.ndarray     # (B, n_f, d)
    actions: np.ndarray    # (B, n_f) raw actions / class indices
    rewards: np.ndarray    # (B, n_f) undiscounted cash flows
    log_probs: np.ndarray  # (B, n_f) under the collecting policy
    values: np.ndarray     # (B, n_f) V under the collecting policy
    advantages: np.ndarray | None = None
    value_targets: np.ndarray | None = None


class SwingEnv:
    """Vectorized swing environment over a batch of fixing paths."""

    def __init__(self, contract: SwingContract, params: ModelParams,
                 curve: InitialCurve, dcurve: DiscountCurve | None = None,
                 base_dp: DeliveryPeriod | None = None,
                 time_feature: str = "scaled"):
        if time_feature not in ("scaled", "year_fraction"):
            raise ValueError("time_feature must be scaled or year_fraction")
        self.contract = contract
        self.model = params
        self.curve = curve
        self.dcurve = dcurve or DiscountCurve()
        self.base_dp = base_dp
        self.time_feature = time_feature
        n_f = contract.n_fixings
        self.n_f = n_f
        self.D = np.zeros(n_f + 1)
        self.U = np.zeros(n_f + 1)
        for i in range(1, n_f + 1):
            self.D[i], self.U[i] = global_bounds(contract, i)
        self.F_ref = period_futures(curve, float(contract.schedule.fixing_times[0]) + DAY, ONE_DAY)
        self.state_dim = 4 if isinstance(contract.strike, FloatingStrike) else 3
        pay = self.dcurve.df(contract.pay_times())
        self.df_pay = np.concatenate([[1.0], np.atleast_1d(pay)])
        self.df_step = np.ones(n_f + 1)  # D(T_i, T_{i+1}), terminal step unused
        for i in range(1, n_f):
            self.df_step[i] = self.df_pay[i + 1] / self.df_pay[i]

    def sample_fixings(self, n_episodes: int, seed: int, path0: int):
        ps = simulate_spot(self.model, self.contract.schedule, n_episodes, seed,
                           path0=path0)
        fx = day_ahead_fixings(ps, self.model, self.curve, self.contract.schedule,
                               self.base_dp)
        if isinstance(self.contract.strike, FloatingStrike):
            ks = floating_strikes(ps, self.model, self.curve, self.contract.schedule,
                                  self.contract.strike.month_T,
                                  self.contract.strike.month_dp)
            fx = attach_floating_strikes(fx, ks)
            K = ks
        else:
            K = np.full(n_episodes, self.contract.strike.strike)
        return fx.fixings, K

    def state(self, i: int, C: np.ndarray, F_i: np.ndarray, K: np.ndarray) -> np.ndarray:
        """Features at decision date i given consumption-to-date C.

        The decision time enters affinely rescaled onto [-0.5, 0.5] across the
        fixing window by default (neutral for the network class, but the raw
        year fraction's tiny spread starves the gradient at short budgets);
        time_feature="year_fraction" feeds the raw value instead.
        """
        ft = self.contract.schedule.fixing_times
        if self.time_feature == "scaled" and self.n_f > 1:
            t = (float(ft[i - 1]) - ft[0]) / (ft[-1] - ft[0]) - 0.5
        elif self.time_feature == "scaled":
            t = 0.0
        else:
            t = float(ft[i - 1])
        if i == 1:
            cons_norm = np.zeros_like(C)
        else:
            span = self.U[i - 1] - self.D[i - 1]
            cons_norm = np.where(span > 0.0, (C - self.D[i - 1]) / np.maximum(span, 1e-300) - 0.5, 0.0)
        logm = np.log(F_i / self.F_ref)
        cols = [np.full(C.shape, t), cons_norm, logm]
        if self.state_dim == 4:
            cols.append(K / self.F_ref)
        return np.column_stack(cols)

    def action_bounds(self, i: int, C: np.ndarray):
        n_lo = np.maximum(self.contract.N_m, self.D[i] - C)
        n_hi = np.minimum(self.contract.N_M, self.U[i] - C)
        return n_lo, np.maximum(n_hi, n_lo)

    def consumption(self, i: int, C: np.ndarray, raw) -> np.ndarray:
        """Map raw actions to admissible consumption (clip + linear remap)."""
        n_lo, n_hi = self.action_bounds(i, C)
        if self.contract.mode == "continuous":
            frac = np.clip(raw, 0.0, 1.0)
            return n_lo + frac * (n_hi - n_lo)
        return np.where(raw > 0.5, n_hi, n_lo)


def init_policy(contract: SwingContract, env: SwingEnv, cfg: TrainConfig,
                seed: int, restart: int) -> PolicyParams:
    hid = [cfg.hidden_units] * cfg.hidden_layers
    out_dim = 2 if contract.mode == "bangbang" else 1
    sizes_a = [env.state_dim] + hid + [out_dim]
    sizes_v = [env.state_dim] + hid + [1]
    action = nets.init_mlp(sizes_a, seed, 2 * restart)
    value = nets.init_mlp(sizes_v, seed, 2 * restart + 1)
    n_xi = 1 if cfg.shared_log_std else contract.n_fixings
    log_std = np.full(n_xi, cfg.xi_init)
    return PolicyParams(action, value, log_std, contract.mode)


def _xi_index(theta: PolicyParams, i: int) -> int:
    return 0 if theta.log_std.size == 1 else i - 1


def policy_sample(theta: PolicyParams, state: np.ndarray, i: int,
                  z_or_u: np.ndarray):
    """Sample actions for date i from pre-drawn normals/uniforms.

    Continuous: raw ~ Normal(net(state), exp(xi_i)^2); returns (raw, log_prob).
    BangBang: class ~ softmax of the two output units.
    """
    out, _ = nets.mlp_forward(theta.action_net, state)
    if theta.mode == "continuous":
        xi = theta.log_std[_xi_index(theta, i)]
        sd = math.exp(xi)
        raw = out[:, 0] + sd * z_or_u
        logp = -0.5 * ((raw - out[:, 0]) / sd) ** 2 - xi - 0.5 * LOG_2PI
        return raw, logp
    logits = out - out.max(axis=1, keepdims=True)
    p = np.exp(logits)
    p /= p.sum(axis=1, keepdims=True)
    cls = (z_or_u > p[:, 0]).astype(np.float64)  # 0 -> min action, 1 -> max
    logp = np.where(cls > 0.5, np.log(p[:, 1]), np.log(p[:, 0]))
    return cls, logp


def policy_log_prob_terms(theta: PolicyParams, state: np.ndarray, i: int,
                          actions: np.ndarray):
    """(log_prob, cache) for given raw actions; cache feeds the backward pass."""
    out, cache = nets.mlp_forward(theta.action_net, state)
    if theta.mode == "continuous":
        xi = theta.log_std[_xi_index(theta, i)]
        sd = math.exp(xi)
        z = (actions - out[:, 0]) / sd
        logp = -0.5 * z * z - xi - 0.5 * LOG_2PI
        return logp, (cache, out, z, sd)
    logits = out - out.max(axis=1, keepdims=True)
    p = np.exp(logits)
    p /= p.sum(axis=1, keepdims=True)
    sel = actions.astype(np.int64)
    logp = np.log(p[np.arange(p.shape[0]), sel])
    return logp, (cache, out, p, sel)


def compute_gae(rewards: np.ndarray, values: np.ndarray, gae_lambda: float,
                df_step: np.ndarray):
    """Advantages and value targets; terminal value is zero.

    rewards/values: (B, n_f); df_step[i] discounts T_i -> T_{i+1} (1-based).
    """
    B, n_f = rewards.shape
    adv = np.zeros((B, n_f))
    nxt = np.zeros(B)
    for i in range(n_f, 0, -1):
        v_next = values[:, i] if i < n_f else np.zeros(B)
        delta = rewards[:, i - 1] + df_step[i] * v_next - values[:, i - 1]
        adv[:, i - 1] = delta + gae_lambda * df_step[i] * nxt
        nxt = adv[:, i - 1]
    return adv, adv + values


def collect_batch(env: SwingEnv, theta: PolicyParams, n_episodes: int, seed: int,
                  episode0: int) -> Batch:
    """Run n_episodes vectorized episodes under the sampling policy."""
    F, K = env.sample_fixings(n_episodes, seed, rng.TRAIN_PATH_BASE + episode0)
    n_f = env.n_f
    d = env.state_dim
    states = np.empty((n_episodes, n_f, d))
    actions = np.empty((n_episodes, n_f))
    rewards = np.empty((n_episodes, n_f))
    log_probs = np.empty((n_episodes, n_f))
    values = np.empty((n_episodes, n_f))
    noise = rng.normals(seed, STREAM_POLICY, rng.TRAIN_PATH_BASE + episode0,
                        n_episodes, n_f)
    if theta.mode == "bangbang":
        noise = 0.5 * (1.0 + _erf_vec(noise / math.sqrt(2.0)))  # to uniforms
    C = np.zeros(n_episodes)
    for i in range(1, n_f + 1):
        st = env.state(i, C, F[:, i - 1], K)
        states[:, i - 1] = st
        raw, logp = policy_sample(theta, st, i, noise[:, i - 1])
        v, _ = nets.mlp_forward(theta.value_net, st)
        values[:, i - 1] = v[:, 0]
        n_taken = env.consumption(i, C, raw)
        rewards[:, i - 1] = n_taken * (F[:, i - 1] - K)
        actions[:, i - 1] = raw
        log_probs[:, i - 1] = logp
        C = C + n_taken
    tol = 1e-9 * max(1.0, env.contract.N_M)
    assert np.all(C <= env.U[n_f] + tol) and np.all(C >= env.D[n_f] - tol), \
        "episode violated global constraints"
    return Batch(states, actions, rewards, log_probs, values)


def _erf_vec(x):
    from scipy.special import erf
    return erf(x)


def ppo_objective(theta: PolicyParams, theta_old_data: Batch, cfg: TrainConfig,
                  env: SwingEnv, idx: np.ndarray, with_grads: bool = True):
    """Clipped surrogate minus value loss on the transitions in idx.

    idx holds flat transition indices into the (B, n_f) batch. Returns
    (objective_value, grads aligned with theta.all_params()).
    """
    B, n_f, d = theta_old_data.states.shape
    di = idx % n_f
    st = theta_old_data.states.reshape(B * n_f, d)[idx]
    act = theta_old_data.actions.reshape(-1)[idx]
    adv = theta_old_data.advantages.reshape(-1)[idx]
    if cfg.normalize_advantages:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    vtarg = theta_old_data.value_targets.reshape(-1)[idx]
    old_logp = theta_old_data.log_probs.reshape(-1)[idx]
    n = idx.size
    out, cache = nets.mlp_forward(theta.action_net, st)
    if theta.mode == "continuous":
        xi_idx = np.zeros(n, dtype=np.int64) if theta.log_std.size == 1 else di
        xi = theta.log_std[xi_idx]
        sd = np.exp(xi)
        z = (act - out[:, 0]) / sd
        logp = -0.5 * z * z - xi - 0.5 * LOG_2PI
    else:
        logits = out - out.max(axis=1, keepdims=True)
        p = np.exp(logits)
        p /= p.sum(axis=1, keepdims=True)
        selcls = act.astype(np.int64)
        logp = np.log(p[np.arange(n), selcls])
    ratio = np.exp(logp - old_logp)
    unclipped = ratio * adv
    clipped = np.clip(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * adv
    la = np.minimum(unclipped, clipped)
    v, vcache = nets.mlp_forward(theta.value_net, st)
    verr = v[:, 0] - vtarg
    obj = float(np.mean(la) - cfg.value_coef * np.mean(verr * verr))
    if not with_grads:
        return obj, None
    # d obj / d ratio: advantage on the unclipped branch, zero once clipped
    active = unclipped <= clipped + 1e-300
    dlogp = np.where(active, adv, 0.0) * ratio / n
    if theta.mode == "continuous":
        dmean = dlogp * z / sd
        grads_a = nets.mlp_backward(theta.action_net, cache, dmean[:, None])
        grad_xi = np.zeros_like(theta.log_std)
        np.add.at(grad_xi, xi_idx, dlogp * (z * z - 1.0))
    else:
        dlogits = -p * dlogp[:, None]
        dlogits[np.arange(n), selcls] += dlogp
        grads_a = nets.mlp_backward(theta.action_net, cache, dlogits)
    dv = (-cfg.value_coef * 2.0 * verr / n)[:, None]
    grads_v = nets.mlp_backward(theta.value_net, vcache, dv)
    grads = grads_a + grads_v + ([grad_xi] if theta.mode == "continuous" else [])
    return obj, grads


class FusedUpdater:
    """numba-lane epochs/minibatch loop; owns padded parameters + Adam state."""

    PAD = 8

    def __init__(self, theta: PolicyParams, cfg: TrainConfig):
        self.lr = cfg.learn_rate
        self.use_adam = cfg.optimizer == "adam"
        self.sizes_a = self._sizes(theta.action_net)
        self.sizes_v = self._sizes(theta.value_net)
        La, Lv = self.sizes_a.size - 1, self.sizes_v.size - 1
        P = self.PAD
        self.Wa = np.zeros((La, P, P))
        self.ba = np.zeros((La, P))
        self.Wv = np.zeros((Lv, P, P))
        self.bv = np.zeros((Lv, P))
        self.adam = [np.zeros_like(x) for x in
                     (self.Wa, self.Wa, self.ba, self.ba, self.Wv, self.Wv,
                      self.bv, self.bv, theta.log_std, theta.log_std)]
        self.t = 0

    @staticmethod
    def _sizes(net) -> np.ndarray:
        dims = [net[0].shape[0]] + [net[2 * i].shape[1] for i in range(len(net) // 2)]
        return np.asarray(dims, dtype=np.int64)

    def _pack(self, W, b, net, sizes) -> None:
        W[:] = 0.0
        b[:] = 0.0
        for l in range(sizes.size - 1):
            W[l, : sizes[l], : sizes[l + 1]] = net[2 * l]
            b[l, : sizes[l + 1]] = net[2 * l + 1]

    def _unpack(self, W, b, net, sizes) -> None:
        for l in range(sizes.size - 1):
            net[2 * l][:] = W[l, : sizes[l], : sizes[l + 1]]
            net[2 * l + 1][:] = b[l, : sizes[l + 1]]

    def run(self, theta: PolicyParams, batch: Batch, cfg: TrainConfig,
            orders: np.ndarray) -> None:
        from . import kernels

        B, n_f, d = batch.states.shape
        self._pack(self.Wa, self.ba, theta.action_net, self.sizes_a)
        self._pack(self.Wv, self.bv, theta.value_net, self.sizes_v)
        date_idx = np.tile(np.arange(n_f, dtype=np.int64), B)
        self.t = kernels.ppo_epochs_nb(
            self.Wa, self.ba, self.Wv, self.bv, theta.log_std,
            self.sizes_a, self.sizes_v,
            batch.states.reshape(B * n_f, d), batch.actions.reshape(-1),
            batch.log_probs.reshape(-1), batch.advantages.reshape(-1),
            batch.value_targets.reshape(-1), date_idx,
            orders, cfg.minibatch, cfg.clip_eps, cfg.value_coef, self.lr,
            theta.mode == "continuous", theta.log_std.size == 1,
            cfg.normalize_advantages,
            self.adam[0], self.adam[1], self.adam[2], self.adam[3],
            self.adam[4], self.adam[5], self.adam[6], self.adam[7],
            self.adam[8], self.adam[9], self.t, self.use_adam)
        self._unpack(self.Wa, self.ba, theta.action_net, self.sizes_a)
        self._unpack(self.Wv, self.bv, theta.value_net, self.sizes_v)


def _shuffle_orders(cfg: TrainConfig, seed: int, update_index: int,
                    n_trans: int) -> np.ndarray:
    orders = np.empty((cfg.sgd_epochs, n_trans), dtype=np.int64)
    for epoch in range(cfg.sgd_epochs):
        u = rng.uniform_pairs(seed, STREAM_SHUFFLE, update_index * 1024 + epoch,
                              1, (n_trans + 1) // 2).reshape(-1)[:n_trans]
        orders[epoch] = np.argsort(u, kind="stable")
    return orders


def ppo_update(theta: PolicyParams, batch: Batch, cfg: TrainConfig, env: SwingEnv,
               seed: int, update_index: int, optimizer,
               lr_frac: float = 1.0) -> PolicyParams:
    """One collect-phase update: GAE, then sgd_epochs of minibatch ascent.

    lr_frac linearly anneals the step size across the training run (the
    reference PPO implementation's default schedule).
    """
    optimizer.lr = cfg.learn_rate * lr_frac
    adv, vtarg = compute_gae(batch.rewards, batch.values, cfg.gae_lambda, env.df_step)
    batch.advantages = adv
    batch.value_targets = vtarg
    B, n_f = batch.rewards.shape
    n_trans = B * n_f
    orders = _shuffle_orders(cfg, seed, update_index, n_trans)
    if isinstance(optimizer, FusedUpdater):
        optimizer.run(theta, batch, cfg, orders)
        return theta
    params = theta.all_params()
    for epoch in range(cfg.sgd_epochs):
        order = orders[epoch]
        for m0 in range(0, n_trans, cfg.minibatch):
            idx = order[m0:m0 + cfg.minibatch]
            obj, grads = ppo_objective(theta, batch, cfg, env, idx)
            if not all(np.all(np.isfinite(g)) for g in grads):
                continue  # discard the degenerate minibatch, keep going
            optimizer.step(params, grads)
    return theta


@dataclass
class LearningCurve:
    episodes: np.ndarray
    avg_reward: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray


@dataclass
class TrainResult:
    theta: PolicyParams
    curves: list[LearningCurve]
    best_restart: int
    selection_scores: list[float]


def train(contract: SwingContract, params: ModelParams, curve: InitialCurve,
          cfg: TrainConfig, seed: int, dcurve: DiscountCurve | None = None,
          base_dp: DeliveryPeriod | None = None) -> TrainResult:
    """Run cfg.restarts independent optimizations; keep the best by trailing
    in-sample mean reward."""
    env = SwingEnv(contract, params, curve, dcurve, base_dp)
    n_updates = max(1, cfg.total_episodes // cfg.batch_episodes)
    window = max(1, int(cfg.selection_frac * cfg.total_episodes))
    curves: list[LearningCurve] = []
    best: tuple[float, int, PolicyParams] | None = None
    scores: list[float] = []
    from .backend import USE_NUMBA
    for restart in range(cfg.restarts):
        theta = init_policy(contract, env, cfg, seed, restart)
        if USE_NUMBA:
            optimizer = FusedUpdater(theta, cfg)
        else:
            opt_cls = nets.Adam if cfg.optimizer == "adam" else nets.Sgd
            optimizer = opt_cls([p.shape for p in theta.all_params()], cfg.learn_rate)
        ep_counter = restart * cfg.total_episodes
        recent: list[np.ndarray] = []
        eps, avg, lo_ci, hi_ci = [], [], [], []
        for k in range(n_updates):
            batch = collect_batch(env, theta, cfg.batch_episodes, seed, ep_counter)
            ep_rewards = (batch.rewards * env.df_pay[1:][None, :]).sum(axis=1)
            recent.append(ep_rewards)
            keep = max(1, window // cfg.batch_episodes)
            recent = recent[-keep:]
            pool = np.concatenate(recent)
            mu = float(pool.mean())
            half = 2.326 * float(pool.std(ddof=1)) / math.sqrt(pool.size)
            eps.append((k + 1) * cfg.batch_episodes)
            avg.append(mu)
            lo_ci.append(mu - half)
            hi_ci.append(mu + half)
            lr_frac = 1.0 - k / n_updates if cfg.anneal_lr else 1.0
            theta = ppo_update(theta, batch, cfg, env, seed, restart * n_updates + k,
                               optimizer, lr_frac)
            ep_counter += cfg.batch_episodes
        score = avg[-1]
        scores.append(score)
        curves.append(LearningCurve(np.asarray(eps), np.asarray(avg),
                                    np.asarray(lo_ci), np.asarray(hi_ci)))
        if best is None or score > best[0]:
            best = (score, restart, theta.clone())
    return TrainResult(best[2], curves, best[1], scores)


def price_with_policy(theta: PolicyParams, contract: SwingContract,
                      params: ModelParams, curve: InitialCurve, n_paths: int,
                      seed: int, dcurve: DiscountCurve | None = None,
                      base_dp: DeliveryPeriod | None = None,
                      chunk_size: int = 250_000) -> PricingResult:
    """Deterministic-policy repricing on fresh paths (Gaussian mean / argmax)."""
    env = SwingEnv(contract, params, curve, dcurve, base_dp)
    n_f = env.n_f
    total = 0
    sum_r = 0.0
    sum_r2 = 0.0
    cons_sum = np.zeros(n_f)
    extreme = 0
    for c0 in range(0, n_paths, chunk_size):
        c1 = min(n_paths, c0 + chunk_size)
        F, K = env.sample_fixings(c1 - c0, seed, rng.PRICING_PATH_BASE + c0)
        C = np.zeros(c1 - c0)
        rewards = np.zeros(c1 - c0)
        for i in range(1, n_f + 1):
            st = env.state(i, C, F[:, i - 1], K)
            out, _ = nets.mlp_forward(theta.action_net, st)
            if theta.mode == "continuous":
                raw = out[:, 0]
            else:
                raw = (out[:, 1] > out[:, 0]).astype(np.float64)
            n_taken = env.consumption(i, C, raw)
            rewards += n_taken * (F[:, i - 1] - K) * env.df_pay[i]
            cons_sum[i - 1] += float(np.sum(n_taken))
            extreme += int(np.sum((np.abs(n_taken - contract.N_m) <= 1e-2)
                                  | (np.abs(n_taken - contract.N_M) <= 1e-2)))
            C = C + n_taken
        sum_r += float(np.sum(rewards))
        sum_r2 += float(np.sum(rewards * rewards))
        total += c1 - c0
    price = sum_r / total
    var = max(sum_r2 / total - price * price, 0.0)
    return PricingResult(
        price=price,
        std_error=math.sqrt(var / total),
        n_paths=total,
        mean_consumption=cons_sum / total,
        bang_bang_fraction=extreme / (total * n_f),
        seed=seed,
        regression_seed_domain=(rng.TRAIN_PATH_BASE, rng.TRAIN_PATH_BASE),
        pricing_seed_domain=(rng.PRICING_PATH_BASE, rng.PRICING_PATH_BASE + n_paths),
    )
