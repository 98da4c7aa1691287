"""Clipped-surrogate PPO on the quoting environment.

Rollouts are collected from a vectorized batch of environments, advantages
come from GAE, and updates run several epochs of shuffled minibatches with
an Adam step on hand-derived gradients.
"""

from dataclasses import dataclass, field

import numpy as np

from .env import EnvConfig, VecRfqEnv
from .errors import NonFiniteLoss
from .intensity import substream
from .policy import PolicyParams, backward, entropy, forward, log_prob, sample_actions

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class PpoConfig:
    learning_rate: float = 3e-4
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_epsilon: float = 0.2
    n_envs: int = 512
    rollout_horizon: int = 30
    n_epochs: int = 10
    minibatch_size: int = 2048
    vf_coef: float = 0.5
    ent_coef: float = 0.0
    max_grad_norm: float = 0.5
    total_updates: int = 300
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.gamma <= 1 or not 0 < self.gae_lambda <= 1:
            raise ValueError("gamma and gae_lambda must be in (0, 1]")
        if self.clip_epsilon <= 0:
            raise ValueError("clip_epsilon must be > 0")
        for name in ("n_envs", "rollout_horizon", "n_epochs", "minibatch_size", "total_updates"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass
class RolloutBuffer:
    obs: np.ndarray        # (T, N, 4)
    actions: np.ndarray    # (T, N, 2), unclipped samples
    log_probs: np.ndarray  # (T, N)
    rewards: np.ndarray    # (T, N)
    values: np.ndarray     # (T, N)
    dones: np.ndarray      # (T, N) bool
    last_values: np.ndarray  # (N,) bootstrap values for the state after step T-1
    episode_returns: list = field(default_factory=list)
    advantages: np.ndarray | None = None
    returns: np.ndarray | None = None

    @property
    def size(self):
        return self.rewards.size


@dataclass
class TrainLogEntry:
    update: int
    mean_return: float
    policy_loss: float
    value_loss: float
    entropy: float
    clip_fraction: float
    approx_kl: float


def collect_rollouts(params: PolicyParams, env: VecRfqEnv, cfg: PpoConfig, rng) -> RolloutBuffer:
    t_max, n = cfg.rollout_horizon, env.n_envs
    obs_buf = np.empty((t_max, n, 4))
    act_buf = np.empty((t_max, n, 2))
    logp_buf = np.empty((t_max, n))
    rew_buf = np.empty((t_max, n))
    val_buf = np.empty((t_max, n))
    done_buf = np.empty((t_max, n), dtype=bool)
    ep_returns = []
    ep_acc = np.zeros(n)

    obs = env.observe()
    for t in range(t_max):
        dist, _ = forward(params, obs)
        actions = sample_actions(dist, rng)
        logp = log_prob(dist.mean, dist.log_std, actions)
        next_obs, rewards, dones, _ = env.step(actions)
        obs_buf[t] = obs
        act_buf[t] = actions
        logp_buf[t] = logp
        val_buf[t] = dist.value
        rew_buf[t] = rewards
        done_buf[t] = dones
        ep_acc += rewards
        if dones.any():
            ep_returns.extend(ep_acc[dones].tolist())
            ep_acc[dones] = 0.0
        obs = next_obs

    dist, _ = forward(params, obs)
    return RolloutBuffer(obs=obs_buf, actions=act_buf, log_probs=logp_buf,
                         rewards=rew_buf, values=val_buf, dones=done_buf,
                         last_values=dist.value, episode_returns=ep_returns)


def compute_gae(buffer: RolloutBuffer, gamma: float, gae_lambda: float):
    """Fill buffer.advantages and buffer.returns (advantage + value).

    Episode ends bootstrap with value 0 (true finite-horizon termination).
    """
    t_max, n = buffer.rewards.shape
    adv = np.zeros((t_max, n))
    gae = np.zeros(n)
    next_values = buffer.last_values
    for t in range(t_max - 1, -1, -1):
        not_done = 1.0 - buffer.dones[t]
        delta = buffer.rewards[t] + gamma * next_values * not_done - buffer.values[t]
        gae = delta + gamma * gae_lambda * not_done * gae
        adv[t] = gae
        next_values = buffer.values[t]
    buffer.advantages = adv
    buffer.returns = adv + buffer.values
    return adv, buffer.returns


def loss_and_grads(params: PolicyParams, obs, actions, old_log_probs, advantages,
                   returns, cfg: PpoConfig):
    """PPO-clip loss and its exact gradients on one minibatch.

    Returns (loss, grads, stats) with stats = (policy_loss, value_loss,
    entropy, clip_fraction, approx_kl).
    """
    b = obs.shape[0]
    eps = cfg.clip_epsilon
    dist, cache = forward(params, obs)
    std = np.exp(params.log_std)
    z = (actions - dist.mean) / std
    logp = (-0.5 * z ** 2 - params.log_std - 0.5 * np.log(2 * np.pi)).sum(axis=1)
    ratio = np.exp(logp - old_log_probs)

    surr1 = ratio * advantages
    surr2 = np.clip(ratio, 1 - eps, 1 + eps) * advantages
    policy_loss = -np.minimum(surr1, surr2).mean()

    value_err = dist.value - returns
    value_loss = np.mean(value_err ** 2)
    ent = entropy(params.log_std)
    loss = policy_loss + cfg.vf_coef * value_loss - cfg.ent_coef * ent
    if not np.isfinite(loss):
        raise NonFiniteLoss(f"loss = {loss}")

    # Gradient of the clipped surrogate flows through the ratio only where
    # the unclipped branch is active.
    flow = np.where(advantages >= 0, ratio < 1 + eps, ratio > 1 - eps)
    d_logp = -(ratio * advantages * flow) / b
    d_mean = d_logp[:, None] * z / std                      # dlogp/dmean
    d_log_std = (d_logp[:, None] * (z ** 2 - 1.0)).sum(axis=0)
    d_log_std -= cfg.ent_coef * np.ones(2)                  # entropy bonus
    d_value = cfg.vf_coef * 2.0 * value_err / b

    grads = backward(params, cache, d_mean, d_value, d_log_std)

    clip_fraction = float(np.mean(np.abs(ratio - 1.0) > eps))
    approx_kl = float(np.mean((ratio - 1.0) - np.log(np.maximum(ratio, 1e-12))))
    return loss, grads, (float(policy_loss), float(value_loss), ent, clip_fraction, approx_kl)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n):
        return cls(m=np.zeros(n), v=np.zeros(n))


def adam_step(flat_params, flat_grads, state: AdamState, lr):
    state.t += 1
    state.m = ADAM_BETA1 * state.m + (1 - ADAM_BETA1) * flat_grads
    state.v = ADAM_BETA2 * state.v + (1 - ADAM_BETA2) * flat_grads ** 2
    m_hat = state.m / (1 - ADAM_BETA1 ** state.t)
    v_hat = state.v / (1 - ADAM_BETA2 ** state.t)
    return flat_params - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


def ppo_update(params: PolicyParams, buffer: RolloutBuffer, cfg: PpoConfig,
               opt: AdamState, rng, update_index: int = 0) -> tuple[PolicyParams, TrainLogEntry]:
    if buffer.advantages is None:
        compute_gae(buffer, cfg.gamma, cfg.gae_lambda)
    obs = buffer.obs.reshape(-1, 4)
    actions = buffer.actions.reshape(-1, 2)
    old_logp = buffer.log_probs.ravel()
    adv = buffer.advantages.ravel()
    adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    returns = buffer.returns.ravel()

    n = obs.shape[0]
    flat = params.flatten()
    stats_acc = np.zeros(5)
    n_batches = 0
    for _ in range(cfg.n_epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.minibatch_size):
            idx = order[start:start + cfg.minibatch_size]
            p = PolicyParams.unflatten(flat)
            _, grads, stats = loss_and_grads(
                p, obs[idx], actions[idx], old_logp[idx], adv[idx], returns[idx], cfg)
            g = grads.flatten()
            norm = np.linalg.norm(g)
            if cfg.max_grad_norm and norm > cfg.max_grad_norm:
                g *= cfg.max_grad_norm / norm
            flat = adam_step(flat, g, opt, cfg.learning_rate)
            stats_acc += np.asarray(stats)
            n_batches += 1

    stats_mean = stats_acc / n_batches
    mean_return = float(np.mean(buffer.episode_returns)) if buffer.episode_returns else float("nan")
    entry = TrainLogEntry(update=update_index, mean_return=mean_return,
                          policy_loss=stats_mean[0], value_loss=stats_mean[1],
                          entropy=stats_mean[2], clip_fraction=stats_mean[3],
                          approx_kl=stats_mean[4])
    return PolicyParams.unflatten(flat), entry


def train(env_cfg: EnvConfig, cfg: PpoConfig, start_params: PolicyParams | None = None,
          start_update: int = 0, on_update=None) -> tuple[PolicyParams, list[TrainLogEntry]]:
    """Alternate rollout collection and PPO updates for cfg.total_updates.

    on_update(update_index, params, entry), when given, is called after each
    update (checkpointing, live logging).
    """
    env = VecRfqEnv(env_cfg, cfg.n_envs, seed=int(substream(cfg.seed, 100).integers(2 ** 62)))
    params = start_params.copy() if start_params is not None else PolicyParams.init(substream(cfg.seed, 101))
    opt = AdamState.zeros(params.flatten().size)
    action_rng = substream(cfg.seed, 102)
    shuffle_rng = substream(cfg.seed, 103)
    log: list[TrainLogEntry] = []
    for u in range(start_update, start_update + cfg.total_updates):
        buffer = collect_rollouts(params, env, cfg, action_rng)
        compute_gae(buffer, cfg.gamma, cfg.gae_lambda)
        params, entry = ppo_update(params, buffer, cfg, opt, shuffle_rng, update_index=u)
        log.append(entry)
        if on_update is not None:
            on_update(u, params, entry)
    return params, log
