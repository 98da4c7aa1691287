"""Markov-modulated RFQ intensity process.

The joint (bid, ask) intensity regime is a 4-state continuous-time Markov
chain. State indexing, used everywhere downstream (generator matrices,
stationary vectors, observation features):

    0: bid low,  ask low
    1: bid high, ask low   (price drifts down while here)
    2: bid low,  ask high  (price drifts up while here)
    3: bid high, ask high

Generator entries are transition rates per year; episodes sample the chain
at trading-day boundaries (dt years per day).
"""

from dataclasses import dataclass

import numpy as np

from .errors import NegativeOffDiagonal, RowSumViolation, ShapeMismatch, SingularChain

N_STATES = 4
STATE_LABELS = ("bid-low/ask-low", "bid-high/ask-low", "bid-low/ask-high", "bid-high/ask-high")

# Bid intensity is high in states 1 and 3, ask intensity in states 2 and 3.
_BID_HIGH = np.array([False, True, False, True])
_ASK_HIGH = np.array([False, False, True, True])

ROW_SUM_TOL = 1e-9

# Calibrated baseline generator (rates per year).
BASELINE_GENERATOR = np.array([
    [-14.01, 4.37, 4.37, 5.27],
    [19.32, -60.91, 12.54, 29.05],
    [19.32, 12.54, -60.91, 29.05],
    [23.67, 15.00, 15.00, -53.67],
])

# Generator biased toward state 1 (bid high, ask low): long-run downward
# price drift.
NEG_BIAS_GENERATOR = np.array([
    [-20.01, 10.37, 4.37, 5.27],
    [19.32, -60.91, 12.54, 29.05],
    [19.32, 22.54, -70.91, 29.05],
    [23.67, 25.00, 15.00, -63.67],
])

# Exact mirror of NEG_BIAS_GENERATOR under swapping states 1 <-> 2: biased
# toward state 2 (bid low, ask high), long-run upward drift.
_MIRROR = np.array([0, 2, 1, 3])
POS_BIAS_GENERATOR = NEG_BIAS_GENERATOR[np.ix_(_MIRROR, _MIRROR)]


@dataclass(frozen=True)
class IntensityLevels:
    """Low/high RFQ arrival rates, in arrivals per trading day."""

    lambda_low: float = 10.83
    lambda_high: float = 73.03

    def __post_init__(self):
        if not 0 < self.lambda_low < self.lambda_high:
            raise ValueError("need 0 < lambda_low < lambda_high")

    def bid_by_state(self) -> np.ndarray:
        """Bid intensity for each of the four states."""
        return np.where(_BID_HIGH, self.lambda_high, self.lambda_low)

    def ask_by_state(self) -> np.ndarray:
        return np.where(_ASK_HIGH, self.lambda_high, self.lambda_low)


@dataclass(frozen=True)
class IntensityState:
    """One joint (bid, ask) regime of the RFQ flow."""

    index: int

    def __post_init__(self):
        if self.index not in range(N_STATES):
            raise ValueError(f"state index {self.index} not in 0..3")

    def lambda_bid(self, levels: IntensityLevels) -> float:
        return levels.lambda_high if _BID_HIGH[self.index] else levels.lambda_low

    def lambda_ask(self, levels: IntensityLevels) -> float:
        return levels.lambda_high if _ASK_HIGH[self.index] else levels.lambda_low

    @property
    def label(self) -> str:
        return STATE_LABELS[self.index]


@dataclass
class IntensityPath:
    """Day-boundary regime states for one episode."""

    states: np.ndarray  # int array, shape (n_days,)
    seed: int | None = None

    def __len__(self):
        return len(self.states)


def validate_generator(q: np.ndarray) -> np.ndarray:
    """Check CTMC generator invariants; returns q as a float array."""
    q = np.asarray(q, dtype=float)
    if q.shape != (N_STATES, N_STATES):
        raise ShapeMismatch(f"generator must be 4x4, got {q.shape}")
    for i in range(N_STATES):
        row_sum = q[i].sum()
        if abs(row_sum) > ROW_SUM_TOL:
            raise RowSumViolation(i, row_sum)
        for j in range(N_STATES):
            if i != j and q[i, j] < 0:
                raise NegativeOffDiagonal(i, j, q[i, j])
        if q[i, i] > 0:
            raise NegativeOffDiagonal(i, i, q[i, i])
    return q


def stationary_distribution(q: np.ndarray) -> np.ndarray:
    """Long-run occupancy vector pi with pi @ q = 0 and sum(pi) = 1.

    Works for any n-state generator; raises SingularChain unless the null
    space of q^T is one-dimensional (irreducible chain).
    """
    q = np.asarray(q, dtype=float)
    n = q.shape[0]
    _, s, vt = np.linalg.svd(q.T)
    scale = max(s[0], 1.0)
    null_dim = int(np.sum(s < 1e-10 * scale))
    if null_dim != 1:
        raise SingularChain(f"null space dimension {null_dim}, chain not irreducible")
    pi = vt[-1]
    pi = pi / pi.sum()
    if np.any(pi < -1e-12):
        raise SingularChain("stationary vector has negative entries")
    pi = np.clip(pi, 0.0, None)
    pi = pi / pi.sum()
    residual = np.abs(pi @ q).max()
    if residual > 1e-10 * scale:
        raise SingularChain(f"stationary residual {residual:.3g} too large")
    return pi


def simulate_ctmc(q, init: int, n_days: int, dt: float, rng) -> IntensityPath:
    """Exact event-driven CTMC sampled at day boundaries.

    Holding times are exponential with rate -q[i, i]; jumps go to j with
    probability q[i, j] / -q[i, i]. The recorded state for day k is the
    chain's state at time k * dt.
    """
    q = validate_generator(q)
    if n_days < 1:
        raise ValueError("n_days must be >= 1")
    if dt <= 0:
        raise ValueError("dt must be > 0")
    rng = as_generator(rng)
    states = np.empty(n_days, dtype=np.int64)
    state = int(init)
    t = 0.0
    next_jump = t + _holding_time(q, state, rng)
    for day in range(n_days):
        t_day = day * dt
        while next_jump <= t_day:
            state = _next_state(q, state, rng)
            next_jump += _holding_time(q, state, rng)
        states[day] = state
    return IntensityPath(states=states)


def _holding_time(q, state, rng):
    rate = -q[state, state]
    if rate <= 0:
        return np.inf
    return rng.exponential(1.0 / rate)


def _next_state(q, state, rng):
    rate = -q[state, state]
    probs = q[state].copy()
    probs[state] = 0.0
    probs /= rate
    return int(rng.choice(len(probs), p=probs))


def random_initial_state(rng) -> int:
    """Uniform draw over the four regimes."""
    return int(as_generator(rng).integers(N_STATES))


def as_generator(seed) -> np.random.Generator:
    """Accept a Generator, SeedSequence, or integer seed."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def substream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent counter-based substream for (master seed, key...)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(key)))
