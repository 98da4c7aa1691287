"""Experiment presets and batch outcome statistics.

Presets mirror the study grid: a baseline with random initial regime, two
initial-regime biases (short-term price move), and two biased generators
(long-term drift). Evaluation aggregates per-step statistics over an
episode batch into plot-ready series.
"""

from dataclasses import dataclass

import numpy as np

from .env import EnvConfig, VecRfqEnv
from .errors import ShapeMismatch, UnknownPreset
from .intensity import (
    BASELINE_GENERATOR,
    NEG_BIAS_GENERATOR,
    POS_BIAS_GENERATOR,
    random_initial_state,
    simulate_ctmc,
    substream,
)
from .market import kappa_implied_price, price_step
from .policy import PolicyParams, forward

QUANTILE_NAMES = ("min", "q25", "q50", "q75", "max")
_QUANTILE_LEVELS = (0.0, 0.25, 0.5, 0.75, 1.0)

PRESET_NAMES = ("baseline", "neg_init", "pos_init", "neg_Q", "pos_Q")


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    env: EnvConfig


def resolve_preset(name: str, **env_overrides) -> ExperimentPreset:
    """Fully populated config for a named experiment."""
    base = EnvConfig()
    if name == "baseline":
        cfg = base
    elif name == "neg_init":
        cfg = base.with_overrides(init_state=1)   # bid high, ask low: price falls first
    elif name == "pos_init":
        cfg = base.with_overrides(init_state=2)   # bid low, ask high: price rises first
    elif name == "neg_Q":
        cfg = base.with_overrides(generator=NEG_BIAS_GENERATOR.copy())
    elif name == "pos_Q":
        cfg = base.with_overrides(generator=POS_BIAS_GENERATOR.copy())
    elif name == "custom":
        cfg = base
    else:
        raise UnknownPreset(name)
    if env_overrides:
        cfg = cfg.with_overrides(**env_overrides)
    return ExperimentPreset(name=name, env=cfg)


@dataclass
class BatchStats:
    """Per-step aggregates over a batch of episodes."""

    n_episodes: int
    steps: np.ndarray               # (T,)
    price_mean: np.ndarray
    price_std: np.ndarray
    inventory_mean: np.ndarray | None = None
    inventory_std: np.ndarray | None = None
    reward_mean: np.ndarray | None = None          # per-step mean reward
    cum_reward_mean: np.ndarray | None = None      # mean cumulative reward
    delta_bid_mean: np.ndarray | None = None
    delta_ask_mean: np.ndarray | None = None
    delta_bid_quantiles: np.ndarray | None = None  # (5, T) min/q25/q50/q75/max
    delta_ask_quantiles: np.ndarray | None = None
    kappa_implied_mean: np.ndarray | None = None
    terminal_inventory: np.ndarray | None = None   # (n_episodes,)
    skew_correlation: float | None = None
    episode_returns: np.ndarray | None = None


def _quantiles(x, axis=0):
    return np.stack([np.quantile(x, q, axis=axis) for q in _QUANTILE_LEVELS])


def evaluate_agent(params: PolicyParams, preset: ExperimentPreset, n_episodes: int,
                   rng_seed: int, policy=None) -> BatchStats:
    """Run a batch of episodes with the deterministic (mean-action) policy.

    `policy`, if given, overrides the network: a callable obs -> actions in
    [-1, 1]^2 (used for constant-quote baselines and stubs).
    """
    if n_episodes < 1:
        raise ValueError("n_episodes must be >= 1")
    cfg = preset.env
    env = VecRfqEnv(cfg, n_episodes, seed=rng_seed, auto_reset=False)
    t_max = cfg.n_days
    price = np.empty((t_max, n_episodes))
    inv = np.empty((t_max, n_episodes))
    rew = np.empty((t_max, n_episodes))
    d_bid = np.empty((t_max, n_episodes))
    d_ask = np.empty((t_max, n_episodes))
    kappa_imp = np.empty((t_max, n_episodes))

    lam_bid = np.empty((t_max, n_episodes))
    lam_ask = np.empty((t_max, n_episodes))

    obs = env.observe()
    for t in range(t_max):
        s_now = env.s.copy()
        if policy is not None:
            actions = np.atleast_2d(policy(obs))
        else:
            dist, _ = forward(params, obs)
            actions = dist.mean
        obs, rewards, _, info = env.step(actions)
        price[t] = info["price"]
        inv[t] = info["inventory"]
        rew[t] = rewards
        d_bid[t] = info["delta_bid"]
        d_ask[t] = info["delta_ask"]
        lam_bid[t] = info["lambda_bid"]
        lam_ask[t] = info["lambda_ask"]
        kappa_imp[t] = kappa_implied_price(
            s_now, info["lambda_bid"], info["lambda_ask"], cfg.price.kappa)

    corr, _ = skew_correlation(lam_bid, lam_ask, d_bid, d_ask)
    cum = rew.cumsum(axis=0)
    return BatchStats(
        n_episodes=n_episodes,
        steps=np.arange(t_max),
        price_mean=price.mean(axis=1),
        price_std=price.std(axis=1),
        inventory_mean=inv.mean(axis=1),
        inventory_std=inv.std(axis=1),
        reward_mean=rew.mean(axis=1),
        cum_reward_mean=cum.mean(axis=1),
        delta_bid_mean=d_bid.mean(axis=1),
        delta_ask_mean=d_ask.mean(axis=1),
        delta_bid_quantiles=_quantiles(d_bid, axis=1),
        delta_ask_quantiles=_quantiles(d_ask, axis=1),
        kappa_implied_mean=kappa_imp.mean(axis=1),
        terminal_inventory=inv[-1].copy(),
        skew_correlation=corr,
        episode_returns=cum[-1].copy(),
    )


def skew_correlation(lambda_bid, lambda_ask, delta_bid, delta_ask):
    """Correlation of sign(lambda_ask - lambda_bid) with sign(delta_ask -
    delta_bid) over steps with a nonzero imbalance, plus its t statistic.

    A positive value means the agent tightens the bid spread (buys) when
    the flow imbalance points to a rising price.
    """
    imb = np.sign(np.asarray(lambda_ask) - np.asarray(lambda_bid)).ravel()
    skew = np.sign(np.asarray(delta_ask) - np.asarray(delta_bid)).ravel()
    mask = imb != 0
    imb, skew = imb[mask], skew[mask]
    n = imb.size
    if n < 3 or imb.std() == 0 or skew.std() == 0:
        return 0.0, 0.0
    r = float(np.corrcoef(imb, skew)[0, 1])
    t = r * np.sqrt((n - 2) / max(1e-12, 1.0 - r ** 2))
    return r, float(t)


def simulate_market_paths(cfg: EnvConfig, n_paths: int, rng_seed: int):
    """Intensity regimes and mid-prices for a batch of episodes, no agent.

    Returns (states, price), both shaped (n_days, n_paths); price[t] is the
    mid after day t's move, states[t] the regime governing that move.
    Substream layout matches VecRfqEnv, so paths are reproducible the same
    way.
    """
    t_max = cfg.n_days
    states = np.empty((t_max, n_paths), dtype=np.int64)
    for i in range(n_paths):
        rng = substream(rng_seed, 1, i, 0)
        init = cfg.init_state if cfg.init_state is not None else random_initial_state(rng)
        states[:, i] = simulate_ctmc(cfg.generator, init, t_max, cfg.price.dt, rng).states
    lam_b = cfg.levels.bid_by_state()[states]
    lam_a = cfg.levels.ask_by_state()[states]
    noise = substream(rng_seed, 0).standard_normal((t_max, n_paths))
    price = np.empty((t_max, n_paths))
    s = np.full(n_paths, cfg.price.s0)
    for t in range(t_max):
        s = price_step(cfg.price, s, lam_b[t], lam_a[t], noise[t])
        price[t] = s
    return states, price


def price_drift_study(preset: ExperimentPreset, n_episodes: int, rng_seed: int) -> BatchStats:
    """Intensity + price paths only (no agent): per-step price mean/std."""
    cfg = preset.env
    states, price = simulate_market_paths(cfg, n_episodes, rng_seed)
    t_max = cfg.n_days
    lam_b = cfg.levels.bid_by_state()[states]
    lam_a = cfg.levels.ask_by_state()[states]
    s_prev = np.vstack([np.full((1, n_episodes), cfg.price.s0), price[:-1]])
    kappa_imp = kappa_implied_price(s_prev, lam_b, lam_a, cfg.price.kappa)
    return BatchStats(
        n_episodes=n_episodes,
        steps=np.arange(t_max),
        price_mean=price.mean(axis=1),
        price_std=price.std(axis=1),
        kappa_implied_mean=kappa_imp.mean(axis=1),
    )


@dataclass
class SymmetryReport:
    """Mirror deviations between two experiment batches."""

    delta_mirror_bid_vs_ask: np.ndarray   # |mean delta_b(A) - mean delta_a(B)| per step
    delta_mirror_ask_vs_bid: np.ndarray
    inventory_mirror: np.ndarray | None   # |mean q_A(t) + mean q_B(t)| per step
    price_mirror: np.ndarray | None       # |(p_A - s0) + (p_B - s0)| per step
    max_delta_deviation: float
    max_inventory_deviation: float | None


def symmetry_report(stats_a: BatchStats, stats_b: BatchStats, s0: float | None = None) -> SymmetryReport:
    if len(stats_a.steps) != len(stats_b.steps):
        raise ShapeMismatch("batches cover different horizons")
    if stats_a.delta_bid_mean is not None and stats_b.delta_ask_mean is not None:
        d_ba = np.abs(stats_a.delta_bid_mean - stats_b.delta_ask_mean)
        d_ab = np.abs(stats_a.delta_ask_mean - stats_b.delta_bid_mean)
    else:
        d_ba = d_ab = np.zeros(len(stats_a.steps))
    inv = None
    if stats_a.inventory_mean is not None and stats_b.inventory_mean is not None:
        inv = np.abs(stats_a.inventory_mean + stats_b.inventory_mean)
    price = None
    if s0 is not None:
        price = np.abs((stats_a.price_mean - s0) + (stats_b.price_mean - s0))
    return SymmetryReport(
        delta_mirror_bid_vs_ask=d_ba,
        delta_mirror_ask_vs_bid=d_ab,
        inventory_mirror=inv,
        price_mirror=price,
        max_delta_deviation=float(max(d_ba.max(), d_ab.max())),
        max_inventory_deviation=float(inv.max()) if inv is not None else None,
    )


def constant_quote_policy(action_value: np.ndarray):
    """Policy stub quoting a fixed [-1, 1]-space action every step."""
    a = np.asarray(action_value, dtype=float)

    def policy(obs):
        return np.tile(a, (obs.shape[0], 1))

    return policy


def action_for_delta(delta: float, cfg: EnvConfig) -> float:
    """Inverse of the min-max de-scaling, for constant-quote baselines."""
    return 2.0 * (delta - cfg.delta_min) / (cfg.delta_max - cfg.delta_min) - 1.0
