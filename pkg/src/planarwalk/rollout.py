"""On-policy rollout collection across a set of independent environments."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nets import ActorCritic, ObsNormalizer, gaussian_log_prob, sample_action
from .ppo import gae


@dataclass
class RolloutBuffer:
    """Flat transition storage plus GAE results.

    ``rewards`` holds the raw environment rewards; the value bootstrap
    applied on timeouts is kept separately in ``timeout_bonus`` so reward
    bounds stay inspectable.
    """

    obs: np.ndarray        # (T*N, obs_dim) float32, as consumed by the policy
    actions: np.ndarray    # (T*N, act_dim) float32
    logp: np.ndarray       # (T*N,)
    rewards: np.ndarray    # (T*N,)
    values: np.ndarray     # (T*N,)
    dones: np.ndarray      # (T*N,)
    timeout_bonus: np.ndarray  # (T*N,)
    horizon: int
    n_envs: int
    advantages: np.ndarray | None = None
    returns: np.ndarray | None = None

    def finalize(self, gamma: float, lam: float, bootstrap_value: np.ndarray) -> None:
        """Compute advantages/returns and normalize advantages in place."""
        shape = (self.horizon, self.n_envs)
        adv, ret = gae(
            (self.rewards + self.timeout_bonus).reshape(shape),
            self.values.reshape(shape),
            self.dones.reshape(shape),
            gamma, lam, bootstrap_value)
        adv = adv.reshape(-1)
        self.returns = ret.reshape(-1).astype(np.float32)
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
        self.advantages = adv.astype(np.float32)


@dataclass
class CollectorState:
    """Per-env episode accumulators persisting across collection calls."""

    last_obs: np.ndarray  # (N, obs_dim) raw observations
    ep_reward: np.ndarray
    ep_len: np.ndarray
    completed: list = field(default_factory=list)  # (length, reward, reason)


def collect_rollouts(envs, ac: ActorCritic, horizon: int,
                     normalizer: ObsNormalizer, rng: np.random.Generator,
                     gamma: float, state: CollectorState | None = None):
    """Gather exactly len(envs) * horizon transitions, auto-resetting on done.

    Episodes ending by timeout get a value bootstrap on their final reward
    (timeouts are schedule cutoffs, not failures); real terminations do not.
    Returns (buffer, state); drain state.completed for episode statistics.
    """
    n_envs = len(envs)
    if state is None:
        state = CollectorState(
            last_obs=np.stack([env.reset() for env in envs]),
            ep_reward=np.zeros(n_envs),
            ep_len=np.zeros(n_envs, dtype=np.int64),
        )
    obs_dim = state.last_obs.shape[1]
    act_dim = ac.action_dim
    obs_buf = np.empty((horizon, n_envs, obs_dim), dtype=np.float32)
    act_buf = np.empty((horizon, n_envs, act_dim), dtype=np.float32)
    logp_buf = np.empty((horizon, n_envs), dtype=np.float32)
    rew_buf = np.zeros((horizon, n_envs), dtype=np.float32)
    val_buf = np.empty((horizon, n_envs), dtype=np.float32)
    done_buf = np.zeros((horizon, n_envs), dtype=np.float32)
    bonus_buf = np.zeros((horizon, n_envs), dtype=np.float32)

    for t in range(horizon):
        normalizer.update(state.last_obs)
        nobs = normalizer.normalize(state.last_obs)
        mean, value = ac.forward(nobs)
        actions, _ = sample_action(mean.astype(np.float64), ac.log_std.astype(np.float64), rng)
        actions32 = actions.astype(np.float32)
        logp32 = gaussian_log_prob(actions32, mean, ac.log_std)

        obs_buf[t] = nobs
        act_buf[t] = actions32
        logp_buf[t] = logp32
        val_buf[t] = value

        for i, env in enumerate(envs):
            obs2, reward, done, info = env.step(actions32[i].astype(np.float64))
            rew_buf[t, i] = reward
            state.ep_reward[i] += reward
            state.ep_len[i] += 1
            if done:
                done_buf[t, i] = 1.0
                if info["timeout"]:
                    term_v = ac.critic.forward(normalizer.normalize(obs2)[None, :])[0, 0]
                    bonus_buf[t, i] = gamma * float(term_v)
                state.completed.append(
                    (int(state.ep_len[i]), float(state.ep_reward[i]), info["termination"]))
                state.ep_reward[i] = 0.0
                state.ep_len[i] = 0
                state.last_obs[i] = env.reset()
            else:
                state.last_obs[i] = obs2

    _, bootstrap = ac.forward(normalizer.normalize(state.last_obs))
    buffer = RolloutBuffer(
        obs=obs_buf.reshape(horizon * n_envs, obs_dim),
        actions=act_buf.reshape(horizon * n_envs, act_dim),
        logp=logp_buf.reshape(-1),
        rewards=rew_buf.reshape(-1),
        values=val_buf.reshape(-1),
        dones=done_buf.reshape(-1),
        timeout_bonus=bonus_buf.reshape(-1),
        horizon=horizon,
        n_envs=n_envs,
    )
    return buffer, state
