"""Clipped-surrogate PPO with GAE, on manual-gradient networks."""
from __future__ import annotations

import numpy as np

from .config import PpoConfig
from .nets import ActorCritic, Adam, gaussian_entropy, gaussian_log_prob


def gae(rewards, values, dones, gamma: float, lam: float, bootstrap_value):
    """Generalized advantage estimation by backward recursion.

    Works on (T,) or (T, N) arrays; `dones` cuts the recursion, and
    `bootstrap_value` stands in for the value after the final step.
    Returns (advantages, returns) with returns = advantages + values.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    if not (rewards.shape == values.shape == dones.shape):
        raise ValueError("rewards, values, dones must share a shape")
    horizon = rewards.shape[0]
    advantages = np.zeros_like(rewards)
    next_value = np.asarray(bootstrap_value, dtype=np.float64)
    next_adv = np.zeros_like(next_value)
    for t in range(horizon - 1, -1, -1):
        live = 1.0 - dones[t]
        delta = rewards[t] + gamma * live * next_value - values[t]
        next_adv = delta + gamma * lam * live * next_adv
        advantages[t] = next_adv
        next_value = values[t]
    return advantages, advantages + values


def ppo_loss_and_grads(ac: ActorCritic, obs, actions, logp_old, advantages,
                       returns, clip: float, value_coef: float,
                       entropy_coef: float):
    """Combined PPO loss, its gradients, and diagnostics for one minibatch."""
    batch = obs.shape[0]
    mean, cache_a = ac.actor.forward(obs, need_cache=True)
    value_out, cache_c = ac.critic.forward(obs, need_cache=True)
    value = value_out[:, 0]

    std = np.exp(ac.log_std)
    z = (actions - mean) / std
    logp = gaussian_log_prob(actions, mean, ac.log_std)
    ratio = np.exp(logp - logp_old)
    unclipped = ratio * advantages
    clipped = np.clip(ratio, 1.0 - clip, 1.0 + clip) * advantages
    per_sample_obj = np.minimum(unclipped, clipped)
    pi_loss = -per_sample_obj.mean()
    v_err = value - returns
    v_loss = 0.5 * float(np.mean(v_err * v_err))
    entropy = gaussian_entropy(ac.log_std)
    total = pi_loss + value_coef * v_loss - entropy_coef * entropy

    # d(total)/d(logp): gradient flows only where the unclipped branch wins
    flow = (unclipped <= clipped).astype(ac.dtype)
    dlogp = -(flow * ratio * advantages) / batch
    dmean = dlogp[:, None] * (z / std)
    dlog_std = (dlogp[:, None] * (z * z - 1.0)).sum(axis=0)
    dlog_std -= entropy_coef  # entropy bonus: dH/dlog_std = 1 per dim
    gw_a, gb_a = ac.actor.backward(cache_a, dmean.astype(ac.dtype))
    dvalue = (value_coef * v_err / batch).astype(ac.dtype)
    gw_c, gb_c = ac.critic.backward(cache_c, dvalue[:, None])

    grads = {}
    for i in range(len(gw_a)):
        grads[f"actor/w{i}"] = gw_a[i]
        grads[f"actor/b{i}"] = gb_a[i]
    for i in range(len(gw_c)):
        grads[f"critic/w{i}"] = gw_c[i]
        grads[f"critic/b{i}"] = gb_c[i]
    grads["log_std"] = dlog_std.astype(ac.dtype)

    stats = {
        "loss": float(total),
        "pi_loss": float(pi_loss),
        "v_loss": v_loss,
        "entropy": entropy,
        "approx_kl": float(np.mean(logp_old - logp)),
        "clip_frac": float(np.mean(np.abs(ratio - 1.0) > clip)),
        "per_sample_obj": per_sample_obj,
        "ratio": ratio,
    }
    return stats, grads


def _clip_grads(grads: dict, max_norm: float) -> float:
    total = 0.0
    for g in grads.values():
        total += float((g.astype(np.float64) ** 2).sum())
    norm = np.sqrt(total)
    if max_norm > 0.0 and norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        for g in grads.values():
            g *= scale
    return norm


def ppo_update(ac: ActorCritic, optimizer: Adam, buffer, cfg: PpoConfig,
               lr: float, rng: np.random.Generator) -> dict:
    """Epochs of minibatch clipped-surrogate ascent over a finalized buffer.

    A non-finite loss aborts the update (remaining minibatches are skipped
    and ``diverged`` is set) rather than stepping on garbage gradients.
    """
    n = buffer.obs.shape[0]
    agg = {"pi_loss": 0.0, "v_loss": 0.0, "entropy": 0.0,
           "approx_kl": 0.0, "clip_frac": 0.0, "grad_norm": 0.0}
    batches = 0
    diverged = False
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.minibatch_size):
            idx = order[start:start + cfg.minibatch_size]
            stats, grads = ppo_loss_and_grads(
                ac, buffer.obs[idx], buffer.actions[idx], buffer.logp[idx],
                buffer.advantages[idx], buffer.returns[idx],
                cfg.clip, cfg.value_coef, cfg.entropy_coef)
            if not np.isfinite(stats["loss"]):
                diverged = True
                break
            agg["grad_norm"] += _clip_grads(grads, cfg.grad_clip)
            optimizer.step(grads, lr)
            for key in ("pi_loss", "v_loss", "entropy", "approx_kl", "clip_frac"):
                agg[key] += stats[key]
            batches += 1
        if diverged:
            break
    if batches > 0:
        for key in agg:
            agg[key] /= batches
    agg["diverged"] = diverged
    agg["lr"] = lr
    return agg
