"""Finite-horizon RFQ quoting environment.

One step = one trading day: the agent picks a (bid, ask) spread pair in
[-1, 1]^2, the environment de-scales it, draws winning RFQ counts, updates
cash and inventory, advances the mid-price, and pays the variance-penalized
P&L increment as reward.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import StepAfterDone
from .intensity import (
    BASELINE_GENERATOR,
    IntensityLevels,
    random_initial_state,
    simulate_ctmc,
    substream,
    validate_generator,
)
from .market import FillCurve, PriceParams, fill_probability, price_step


@dataclass(frozen=True, eq=False)
class EnvConfig:
    n_days: int = 30
    z: float = 1.0
    q_init: float = 0.0
    phi: float = 0.01           # penalty on squared P&L increments
    delta_min: float = -0.16
    delta_max: float = 0.2
    q_scale: float = 50.0       # inventory normalization for the observation
    inventory_cap: float | None = None
    init_state: int | None = None  # None -> uniform random regime at reset
    exact_arrivals: bool = False
    price: PriceParams = field(default_factory=PriceParams)
    fills: FillCurve = field(default_factory=FillCurve)
    levels: IntensityLevels = field(default_factory=IntensityLevels)
    generator: np.ndarray = field(default_factory=lambda: BASELINE_GENERATOR.copy())

    def __post_init__(self):
        if self.n_days < 1:
            raise ValueError("n_days must be >= 1")
        if self.z <= 0:
            raise ValueError("z must be > 0")
        if not self.delta_min < self.delta_max:
            raise ValueError("need delta_min < delta_max")
        if self.phi < 0:
            raise ValueError("phi must be >= 0")
        validate_generator(self.generator)
        if self.init_state is not None and self.init_state not in range(4):
            raise ValueError("init_state must be in 0..3 or None")

    def with_overrides(self, **kwargs) -> "EnvConfig":
        return replace(self, **kwargs)


@dataclass
class StepRecord:
    """One environment step, enough to recompute the reward."""

    day: int
    observation: np.ndarray
    action: np.ndarray
    delta_bid: float
    delta_ask: float
    n_bid_fills: int
    n_ask_fills: int
    price: float
    inventory: float
    cash: float
    pnl_delta: float
    reward: float


def descale_action(action, cfg: EnvConfig):
    """Map [-1, 1] actions to spreads via min-max scaling (clipping first)."""
    a = np.clip(np.asarray(action, dtype=float), -1.0, 1.0)
    return cfg.delta_min + (a + 1.0) / 2.0 * (cfg.delta_max - cfg.delta_min)


def episode_return(records) -> float:
    """Undiscounted sum of step rewards (the training objective's value)."""
    return float(sum(r.reward for r in records))


class VecRfqEnv:
    """A batch of independent quoting environments stepped in lockstep.

    All per-step randomness is drawn vectorized from one noise stream;
    each episode's intensity path comes from an independent substream keyed
    by (seed, env index, reset count), so runs are reproducible.
    """

    def __init__(self, cfg: EnvConfig, n_envs: int, seed: int, auto_reset: bool = True):
        self.cfg = cfg
        self.n_envs = n_envs
        self.seed = seed
        self.auto_reset = auto_reset
        self._noise = substream(seed, 0)
        self._reset_counts = np.zeros(n_envs, dtype=np.int64)
        self._lam_bid_by_state = cfg.levels.bid_by_state()
        self._lam_ask_by_state = cfg.levels.ask_by_state()
        self.paths = np.empty((n_envs, cfg.n_days), dtype=np.int64)
        self.day = np.zeros(n_envs, dtype=np.int64)
        self.s = np.empty(n_envs)
        self.q = np.empty(n_envs)
        self.x = np.empty(n_envs)
        self.pnl_prev = np.empty(n_envs)
        self.reset()

    def reset(self) -> np.ndarray:
        self._start_episodes(np.arange(self.n_envs))
        return self.observe()

    def _start_episodes(self, idx):
        cfg = self.cfg
        for i in idx:
            rng = substream(self.seed, 1, int(i), int(self._reset_counts[i]))
            init = cfg.init_state if cfg.init_state is not None else random_initial_state(rng)
            self.paths[i] = simulate_ctmc(cfg.generator, init, cfg.n_days, cfg.price.dt, rng).states
            self._reset_counts[i] += 1
        self.day[idx] = 0
        self.s[idx] = cfg.price.s0
        self.q[idx] = cfg.q_init
        self.x[idx] = 0.0
        self.pnl_prev[idx] = cfg.q_init * cfg.price.s0

    def current_states(self) -> np.ndarray:
        return self.paths[np.arange(self.n_envs), np.minimum(self.day, self.cfg.n_days - 1)]

    def observe(self) -> np.ndarray:
        cfg = self.cfg
        states = self.current_states()
        lam_b = self._lam_bid_by_state[states]
        lam_a = self._lam_ask_by_state[states]
        lo, hi = cfg.levels.lambda_low, cfg.levels.lambda_high
        obs = np.empty((self.n_envs, 4))
        obs[:, 0] = (lam_b - lo) / (hi - lo)
        obs[:, 1] = (lam_a - lo) / (hi - lo)
        obs[:, 2] = self.day / cfg.n_days
        obs[:, 3] = self.q / cfg.q_scale
        return obs

    def step(self, actions: np.ndarray):
        """Advance every env one day; returns (obs, rewards, dones, info).

        info holds the pre-reset per-env arrays for the step just taken.
        """
        cfg = self.cfg
        if np.any(self.day >= cfg.n_days):
            raise StepAfterDone("some environments are already done")
        states = self.paths[np.arange(self.n_envs), self.day]
        lam_b = self._lam_bid_by_state[states]
        lam_a = self._lam_ask_by_state[states]

        deltas = descale_action(actions, cfg)
        delta_bid, delta_ask = deltas[:, 0], deltas[:, 1]

        # Fixed draw order (bid fills, ask fills, price noise) keeps runs
        # bit-reproducible for a given seed.
        f_bid = fill_probability(cfg.fills, delta_bid)
        f_ask = fill_probability(cfg.fills, delta_ask)
        if cfg.exact_arrivals:
            arr_b = self._noise.poisson(lam_b)
            arr_a = self._noise.poisson(lam_a)
            n_bid = self._noise.binomial(arr_b, f_bid)
            n_ask = self._noise.binomial(arr_a, f_ask)
        else:
            n_bid = self._noise.poisson(lam_b * f_bid)
            n_ask = self._noise.poisson(lam_a * f_ask)

        if cfg.inventory_cap is not None:
            n_bid, n_ask = self._apply_cap(n_bid, n_ask)

        price_bid = self.s - delta_bid
        price_ask = self.s + delta_ask
        self.x += cfg.z * (price_ask * n_ask - price_bid * n_bid)
        self.q += cfg.z * (n_bid - n_ask)

        draws = self._noise.standard_normal(self.n_envs)
        s_next = price_step(cfg.price, self.s, lam_b, lam_a, draws)
        pnl = self.x + self.q * s_next
        pnl_delta = pnl - self.pnl_prev
        rewards = pnl_delta - 0.5 * cfg.phi * pnl_delta ** 2

        self.s = s_next
        self.pnl_prev = pnl
        self.day += 1
        dones = self.day >= cfg.n_days

        info = {
            "delta_bid": delta_bid,
            "delta_ask": delta_ask,
            "n_bid_fills": n_bid,
            "n_ask_fills": n_ask,
            "price": s_next.copy(),
            "inventory": self.q.copy(),
            "cash": self.x.copy(),
            "pnl_delta": pnl_delta,
            "lambda_bid": lam_b,
            "lambda_ask": lam_a,
        }

        if self.auto_reset and dones.any():
            self._start_episodes(np.flatnonzero(dones))
        return self.observe(), rewards, dones, info

    def _apply_cap(self, n_bid, n_ask):
        cap = self.cfg.inventory_cap
        z = self.cfg.z
        net = self.q + z * (n_bid - n_ask)
        over = np.clip(net - cap, 0, None)
        under = np.clip(-cap - net, 0, None)
        n_bid = n_bid - np.minimum(n_bid, np.ceil(over / z).astype(np.int64))
        n_ask = n_ask - np.minimum(n_ask, np.ceil(under / z).astype(np.int64))
        return n_bid, n_ask


class RfqEnv:
    """Single-environment wrapper producing per-step records."""

    def __init__(self, cfg: EnvConfig, seed: int = 0):
        self.cfg = cfg
        self.seed = seed
        self._episode = 0
        self._vec = None
        self._done = True

    def reset(self) -> np.ndarray:
        self._vec = VecRfqEnv(self.cfg, 1, self._derive_seed(), auto_reset=False)
        self._episode += 1
        self._done = False
        return self._vec.observe()[0]

    def _derive_seed(self):
        # Distinct, reproducible stream per episode of this env instance.
        return int(substream(self.seed, self._episode).integers(2 ** 62))

    def step(self, action):
        if self._done or self._vec is None:
            raise StepAfterDone("call reset() before stepping")
        obs_before = self._vec.observe()[0]
        day = int(self._vec.day[0])
        obs, rewards, dones, info = self._vec.step(np.asarray(action, dtype=float)[None, :])
        self._done = bool(dones[0])
        record = StepRecord(
            day=day,
            observation=obs_before,
            action=np.clip(np.asarray(action, dtype=float), -1.0, 1.0),
            delta_bid=float(info["delta_bid"][0]),
            delta_ask=float(info["delta_ask"][0]),
            n_bid_fills=int(info["n_bid_fills"][0]),
            n_ask_fills=int(info["n_ask_fills"][0]),
            price=float(info["price"][0]),
            inventory=float(info["inventory"][0]),
            cash=float(info["cash"][0]),
            pnl_delta=float(info["pnl_delta"][0]),
            reward=float(rewards[0]),
        )
        return obs[0], float(rewards[0]), self._done, record
