"""Actor-critic network with hand-derived reverse-mode gradients.

Fixed architecture: separate actor and critic trunks, each 4 -> 64 -> 64
with tanh, a 2-unit linear mean head on the actor, a 1-unit linear value
head on the critic, and a state-independent log-std 2-vector. Gradients
are written out explicitly for this shape and verified against central
finite differences in the test suite.
"""

import hashlib
import json
from dataclasses import dataclass, fields

import numpy as np

from .errors import ChecksumMismatch, ShapeMismatch
from .intensity import as_generator

OBS_DIM = 4
ACT_DIM = 2
HIDDEN = 64
ARCHITECTURE = "actor-critic mlp 4-64-64-(2 mean + diag log-std | 1 value) tanh"

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class PolicyParams:
    """All learnable parameters; also reused as the gradient container."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    log_std: np.ndarray
    v1: np.ndarray
    c1: np.ndarray
    v2: np.ndarray
    c2: np.ndarray
    v3: np.ndarray
    c3: np.ndarray

    def field_arrays(self):
        return [(f.name, getattr(self, f.name)) for f in fields(self)]

    def flatten(self) -> np.ndarray:
        return np.concatenate([a.ravel() for _, a in self.field_arrays()])

    @classmethod
    def shapes(cls):
        return {
            "w1": (OBS_DIM, HIDDEN), "b1": (HIDDEN,),
            "w2": (HIDDEN, HIDDEN), "b2": (HIDDEN,),
            "w3": (HIDDEN, ACT_DIM), "b3": (ACT_DIM,),
            "log_std": (ACT_DIM,),
            "v1": (OBS_DIM, HIDDEN), "c1": (HIDDEN,),
            "v2": (HIDDEN, HIDDEN), "c2": (HIDDEN,),
            "v3": (HIDDEN, 1), "c3": (1,),
        }

    @classmethod
    def unflatten(cls, flat: np.ndarray) -> "PolicyParams":
        shapes = cls.shapes()
        total = sum(int(np.prod(s)) for s in shapes.values())
        if flat.shape != (total,):
            raise ShapeMismatch(f"expected {total} parameters, got {flat.shape}")
        out = {}
        i = 0
        for name, shape in shapes.items():
            n = int(np.prod(shape))
            out[name] = flat[i:i + n].reshape(shape).copy()
            i += n
        return cls(**out)

    @classmethod
    def zeros(cls) -> "PolicyParams":
        return cls(**{k: np.zeros(s) for k, s in cls.shapes().items()})

    @classmethod
    def init(cls, rng) -> "PolicyParams":
        """Orthogonal trunk weights (gain sqrt(2)), small policy head (0.01),
        unit value head, zero biases and log-std."""
        rng = as_generator(rng)
        p = cls.zeros()
        p.w1 = _orthogonal(rng, OBS_DIM, HIDDEN, np.sqrt(2.0))
        p.w2 = _orthogonal(rng, HIDDEN, HIDDEN, np.sqrt(2.0))
        p.w3 = _orthogonal(rng, HIDDEN, ACT_DIM, 0.01)
        p.v1 = _orthogonal(rng, OBS_DIM, HIDDEN, np.sqrt(2.0))
        p.v2 = _orthogonal(rng, HIDDEN, HIDDEN, np.sqrt(2.0))
        p.v3 = _orthogonal(rng, HIDDEN, 1, 1.0)
        return p

    def copy(self) -> "PolicyParams":
        return PolicyParams(**{k: a.copy() for k, a in self.field_arrays()})


def _orthogonal(rng, n_in, n_out, gain):
    a = rng.standard_normal((n_in, n_out))
    q, r = np.linalg.qr(a if n_in >= n_out else a.T)
    q = q * np.sign(np.diag(r))
    if n_in < n_out:
        q = q.T
    return gain * q[:n_in, :n_out]


@dataclass
class DistributionOut:
    mean: np.ndarray      # (batch, 2)
    log_std: np.ndarray   # (2,)
    value: np.ndarray     # (batch,)


@dataclass
class ForwardCache:
    obs: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    g1: np.ndarray
    g2: np.ndarray


def forward(params: PolicyParams, obs: np.ndarray):
    """Batched forward pass; returns (DistributionOut, cache for backward)."""
    obs = np.atleast_2d(np.asarray(obs, dtype=float))
    h1 = np.tanh(obs @ params.w1 + params.b1)
    h2 = np.tanh(h1 @ params.w2 + params.b2)
    mean = h2 @ params.w3 + params.b3
    g1 = np.tanh(obs @ params.v1 + params.c1)
    g2 = np.tanh(g1 @ params.v2 + params.c2)
    value = (g2 @ params.v3 + params.c3)[:, 0]
    dist = DistributionOut(mean=mean, log_std=params.log_std, value=value)
    return dist, ForwardCache(obs=obs, h1=h1, h2=h2, g1=g1, g2=g2)


def log_prob(mean, log_std, actions):
    """Diagonal-Gaussian log-density per sample."""
    std = np.exp(log_std)
    z = (np.atleast_2d(actions) - np.atleast_2d(mean)) / std
    return (-0.5 * z ** 2 - log_std - 0.5 * LOG_2PI).sum(axis=1)


def entropy(log_std) -> float:
    """Entropy of the diagonal Gaussian (state-independent)."""
    return float(np.sum(0.5 * (1.0 + LOG_2PI) + log_std))


def log_prob_and_entropy(dist: DistributionOut, action):
    lp = log_prob(dist.mean, dist.log_std, action)
    return (lp if lp.size > 1 else float(lp[0])), entropy(dist.log_std)


def sample_actions(dist: DistributionOut, rng):
    """Gaussian draw around the mean; clipping happens at the env boundary."""
    rng = as_generator(rng)
    std = np.exp(dist.log_std)
    return dist.mean + std * rng.standard_normal(dist.mean.shape)


def backward(params: PolicyParams, cache: ForwardCache,
             d_mean: np.ndarray, d_value: np.ndarray,
             d_log_std: np.ndarray | None = None) -> PolicyParams:
    """Exact gradients of a scalar loss given its derivatives with respect
    to the network outputs (summed over the batch)."""
    g = PolicyParams.zeros()
    d_mean = np.atleast_2d(d_mean)
    d_value = np.asarray(d_value, dtype=float).reshape(-1, 1)

    # Actor head and trunk.
    g.w3 = cache.h2.T @ d_mean
    g.b3 = d_mean.sum(axis=0)
    dh2 = (d_mean @ params.w3.T) * (1.0 - cache.h2 ** 2)
    g.w2 = cache.h1.T @ dh2
    g.b2 = dh2.sum(axis=0)
    dh1 = (dh2 @ params.w2.T) * (1.0 - cache.h1 ** 2)
    g.w1 = cache.obs.T @ dh1
    g.b1 = dh1.sum(axis=0)

    # Critic head and trunk.
    g.v3 = cache.g2.T @ d_value
    g.c3 = d_value.sum(axis=0)
    dg2 = (d_value @ params.v3.T) * (1.0 - cache.g2 ** 2)
    g.v2 = cache.g1.T @ dg2
    g.c2 = dg2.sum(axis=0)
    dg1 = (dg2 @ params.v2.T) * (1.0 - cache.g1 ** 2)
    g.v1 = cache.obs.T @ dg1
    g.c1 = dg1.sum(axis=0)

    if d_log_std is not None:
        g.log_std = np.asarray(d_log_std, dtype=float).copy()
    return g


def save_checkpoint(params: PolicyParams, path, meta: dict | None = None):
    """Write `<path>.json` (manifest) and `<path>.bin` (flat float64-LE)."""
    import pathlib

    path = pathlib.Path(path)
    flat = params.flatten().astype("<f8")
    raw = flat.tobytes()
    manifest = {
        "architecture": ARCHITECTURE,
        "field_order": [f.name for f in fields(PolicyParams)],
        "shapes": {k: list(v) for k, v in PolicyParams.shapes().items()},
        "dtype": "float64-le",
        "n_params": int(flat.size),
        "sha256": hashlib.sha256(raw).hexdigest(),
    }
    manifest.update(meta or {})
    path.parent.mkdir(parents=True, exist_ok=True)
    path.with_suffix(".bin").write_bytes(raw)
    path.with_suffix(".json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def load_checkpoint(path):
    """Round-trip of save_checkpoint; returns (params, manifest)."""
    import pathlib

    path = pathlib.Path(path)
    manifest = json.loads(path.with_suffix(".json").read_text())
    raw = path.with_suffix(".bin").read_bytes()
    if hashlib.sha256(raw).hexdigest() != manifest.get("sha256"):
        raise ChecksumMismatch(f"checkpoint payload does not match manifest: {path}")
    if manifest.get("architecture") != ARCHITECTURE:
        raise ShapeMismatch(f"unexpected architecture {manifest.get('architecture')!r}")
    flat = np.frombuffer(raw, dtype="<f8")
    return PolicyParams.unflatten(flat), manifest
