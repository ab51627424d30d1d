"""From-scratch MLP actor-critic: forward, manual backward, Adam, obs norm.

Parameters live in float32 (checkpoints store raw float32 blocks, so
save/load round-trips are bitwise). Pass dtype=np.float64 when building
small networks for finite-difference gradient checks.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import ContractViolationError

LOG_2PI = math.log(2.0 * math.pi)


def orthogonal_init(rng: np.random.Generator, n_in: int, n_out: int,
                    gain: float, dtype=np.float32) -> np.ndarray:
    a = rng.standard_normal((max(n_in, n_out), min(n_in, n_out)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if n_in < n_out:
        q = q.T
    return (gain * q[:n_in, :n_out]).astype(dtype)


class Mlp:
    """Fully connected ReLU network with a linear head and manual backward."""

    def __init__(self, sizes, rng: np.random.Generator, head_gain: float = 1.0,
                 hidden_gain: float = math.sqrt(2.0), dtype=np.float32):
        self.sizes = list(sizes)
        self.dtype = dtype
        self.weights = []
        self.biases = []
        n_layers = len(sizes) - 1
        for i in range(n_layers):
            gain = head_gain if i == n_layers - 1 else hidden_gain
            self.weights.append(orthogonal_init(rng, sizes[i], sizes[i + 1], gain, dtype))
            self.biases.append(np.zeros(sizes[i + 1], dtype=dtype))

    def forward(self, x: np.ndarray, need_cache: bool = False):
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[1] != self.sizes[0]:
            raise ContractViolationError(
                f"expected input dim {self.sizes[0]}, got {x.shape[1]}")
        cache = [x] if need_cache else None
        h = x
        for i in range(len(self.weights) - 1):
            z = h @ self.weights[i] + self.biases[i]
            h = np.maximum(z, 0.0)
            if need_cache:
                cache.append(h)
        out = h @ self.weights[-1] + self.biases[-1]
        if need_cache:
            return out, cache
        return out

    def backward(self, cache, dout: np.ndarray):
        """Gradients of all weights/biases given d(loss)/d(output)."""
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.biases)
        delta = np.asarray(dout, dtype=self.dtype)
        for i in range(len(self.weights) - 1, -1, -1):
            h_in = cache[i]
            grads_w[i] = h_in.T @ delta
            grads_b[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (h_in > 0.0)
        return grads_w, grads_b

    def param_dict(self, prefix: str) -> dict:
        out = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"{prefix}/w{i}"] = w
            out[f"{prefix}/b{i}"] = b
        return out


class ActorCritic:
    """Gaussian policy and value function with shared hyperparameters.

    The actor outputs the action mean; exploration noise comes from a
    state-independent learnable log-std vector. The critic is a separate
    trunk of the same shape with a scalar head.
    """

    def __init__(self, obs_dim: int, action_dim: int, hidden: int = 256,
                 layers: int = 2, rng: np.random.Generator | None = None,
                 log_std_init: float = math.log(0.3), dtype=np.float32):
        rng = rng if rng is not None else np.random.default_rng(0)
        trunk = [obs_dim] + [hidden] * layers
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        self.hidden = hidden
        self.layers = layers
        self.dtype = dtype
        self.actor = Mlp(trunk + [action_dim], rng, head_gain=0.01, dtype=dtype)
        self.critic = Mlp(trunk + [1], rng, head_gain=1.0, dtype=dtype)
        self.log_std = np.full(action_dim, log_std_init, dtype=dtype)

    def params(self) -> dict:
        out = self.actor.param_dict("actor")
        out.update(self.critic.param_dict("critic"))
        out["log_std"] = self.log_std
        return out

    def forward(self, obs: np.ndarray):
        """(action_mean, value) for a batch of observations."""
        mean = self.actor.forward(obs)
        value = self.critic.forward(obs)[:, 0]
        return mean, value


def mlp_forward(ac: ActorCritic, obs: np.ndarray):
    """Deterministic forward pass of the actor-critic pair."""
    return ac.forward(obs)


def gaussian_log_prob(actions: np.ndarray, mean: np.ndarray,
                      log_std: np.ndarray) -> np.ndarray:
    """Diagonal-Gaussian log density, one value per row."""
    z = (actions - mean) / np.exp(log_std)
    return (-0.5 * (z * z).sum(axis=-1) - log_std.sum()
            - 0.5 * actions.shape[-1] * LOG_2PI)


def gaussian_entropy(log_std: np.ndarray) -> float:
    d = log_std.shape[0]
    return float(log_std.sum() + 0.5 * d * (1.0 + LOG_2PI))


def sample_action(action_mean: np.ndarray, log_std: np.ndarray,
                  rng: np.random.Generator):
    """Draw actions and their log probability from the Gaussian policy."""
    noise = rng.standard_normal(action_mean.shape)
    actions = action_mean + np.exp(log_std) * noise
    return actions, gaussian_log_prob(actions, action_mean, log_std)


class Adam:
    """Adam over a named parameter dict; updates happen in place."""

    def __init__(self, params: dict, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.params = params
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, grads: dict, lr: float) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for key, p in self.params.items():
            g = grads[key]
            m = self.m[key]
            v = self.v[key]
            m += (1.0 - self.beta1) * (g - m)
            v += (1.0 - self.beta2) * (g * g - v)
            p -= (lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)).astype(p.dtype)


class ObsNormalizer:
    """Running mean/variance scaling, frozen at evaluation.

    Accumulation uses float64 Welford updates; normalization always applies
    float32-cast statistics so checkpointed stats reproduce outputs exactly.
    """

    def __init__(self, dim: int, clip: float = 10.0):
        self.mean = np.zeros(dim, dtype=np.float64)
        self.var = np.ones(dim, dtype=np.float64)
        self.count = 1e-4
        self.clip = clip
        self.frozen = False

    def update(self, batch: np.ndarray) -> None:
        if self.frozen:
            return
        batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
        b_count = batch.shape[0]
        b_mean = batch.mean(axis=0)
        b_var = batch.var(axis=0)
        delta = b_mean - self.mean
        total = self.count + b_count
        self.mean += delta * (b_count / total)
        m_a = self.var * self.count
        m_b = b_var * b_count
        self.var = (m_a + m_b + delta * delta * self.count * b_count / total) / total
        self.count = total

    def normalize(self, obs: np.ndarray) -> np.ndarray:
        mean32 = self.mean.astype(np.float32)
        std32 = np.sqrt(self.var + 1e-8).astype(np.float32)
        scaled = (np.asarray(obs, dtype=np.float32) - mean32) / std32
        return np.clip(scaled, -self.clip, self.clip)
