"""Two-phase curriculum training driver.

Phase 1 pretrains from scratch on a flat rigid floor with random mode
switching only. Phase 2 finetunes from the phase-1 weights with compliance,
terrain, and dynamics randomization enabled (fresh optimizer state).
"""
from __future__ import annotations

import csv
import dataclasses
import time
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import FLAT, RANDOMIZED, Config, config_hash
from .checkpoint import load_checkpoint, save_checkpoint
from .env import OBS_DIM, WalkingEnv
from .errors import ConfigError
from .nets import ActorCritic, Adam, ObsNormalizer
from .ppo import ppo_update
from .rollout import collect_rollouts
from .terrain import generate_heightfield

CSV_FIELDS = ("iteration", "env_steps", "mean_ep_reward", "mean_ep_len",
              "pi_loss", "v_loss", "entropy", "approx_kl", "clip_frac",
              "grad_norm", "lr")


@dataclass
class PhaseResult:
    checkpoint: Path
    reward_csv: Path
    final_mean_reward: float
    final_mean_len: float


def _make_envs(config: Config, curriculum: str, seed: int):
    env_cfg = dataclasses.replace(config.env, curriculum=curriculum)
    cfg = dataclasses.replace(config, env=env_cfg)
    ss = np.random.SeedSequence(seed)
    env_seed_ss, terrain_ss = ss.spawn(2)
    env_seeds = env_seed_ss.generate_state(config.ppo.num_envs)
    field = None
    if env_cfg.resolved().randomize_terrain:
        terrain_rng = np.random.default_rng(terrain_ss)
        field = generate_heightfield(terrain_rng, env_cfg.terrain_peak,
                                     env_cfg.terrain_span, env_cfg.terrain_cell)
    envs = []
    for i in range(config.ppo.num_envs):
        env_field = dataclasses.replace(field) if field is not None else None
        envs.append(WalkingEnv(cfg, seed=int(env_seeds[i]), field=env_field))
    return envs


def train_phase(config: Config, curriculum: str, out_dir, seed: int,
                iterations: int, from_checkpoint=None, tag: str = "phase",
                log_cb=None) -> PhaseResult:
    """Run one PPO training phase; writes checkpoints and a reward CSV."""
    out = Path(out_dir) / tag
    out.mkdir(parents=True, exist_ok=True)
    ppo_cfg = config.ppo

    ss = np.random.SeedSequence(seed + 7919)
    init_ss, action_ss, shuffle_ss = ss.spawn(3)
    if from_checkpoint is not None:
        from_checkpoint = Path(from_checkpoint)
        if not from_checkpoint.exists():
            raise ConfigError(f"initial checkpoint not found: {from_checkpoint}")
        ac, normalizer, _header = load_checkpoint(from_checkpoint)
        expected = 7 if config.env.clock_control else 6
        if ac.action_dim != expected:
            raise ConfigError(
                f"checkpoint action dim {ac.action_dim} does not match "
                f"clock_control={config.env.clock_control}")
    else:
        action_dim = 7 if config.env.clock_control else 6
        ac = ActorCritic(OBS_DIM, action_dim, hidden=ppo_cfg.hidden_size,
                         layers=ppo_cfg.hidden_layers,
                         rng=np.random.default_rng(init_ss),
                         log_std_init=ppo_cfg.log_std_init)
        normalizer = ObsNormalizer(OBS_DIM)
    optimizer = Adam(ac.params())
    action_rng = np.random.default_rng(action_ss)
    shuffle_rng = np.random.default_rng(shuffle_ss)

    envs = _make_envs(config, curriculum, seed)
    chash = config_hash(config)
    csv_path = out / "reward_curve.csv"
    window = deque(maxlen=40)
    state = None
    t_start = time.time()
    final_reward = float("nan")
    final_len = float("nan")

    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_FIELDS)
        for it in range(iterations):
            lr = ppo_cfg.learning_rate
            if ppo_cfg.lr_decay:
                lr *= 1.0 - it / iterations
            buffer, state = collect_rollouts(
                envs, ac, ppo_cfg.horizon, normalizer, action_rng,
                ppo_cfg.discount, state)
            _, bootstrap = ac.forward(normalizer.normalize(state.last_obs))
            buffer.finalize(ppo_cfg.discount, ppo_cfg.gae_lambda, bootstrap)
            stats = ppo_update(ac, optimizer, buffer, ppo_cfg, lr, shuffle_rng)

            window.extend(state.completed)
            state.completed.clear()
            if window:
                final_reward = float(np.mean([w[1] for w in window]))
                final_len = float(np.mean([w[0] for w in window]))
            env_steps = (it + 1) * ppo_cfg.horizon * ppo_cfg.num_envs
            writer.writerow([
                it, env_steps, f"{final_reward:.6f}", f"{final_len:.3f}",
                f"{stats['pi_loss']:.6f}", f"{stats['v_loss']:.6f}",
                f"{stats['entropy']:.6f}", f"{stats['approx_kl']:.6f}",
                f"{stats['clip_frac']:.4f}", f"{stats['grad_norm']:.4f}",
                f"{lr:.8f}"])
            if (it + 1) % config.train.log_every == 0:
                fh.flush()
                if log_cb is not None:
                    rate = env_steps / max(time.time() - t_start, 1e-9)
                    log_cb(f"[{tag}] iter {it + 1}/{iterations} "
                           f"reward {final_reward:.3f} len {final_len:.1f} "
                           f"kl {stats['approx_kl']:.4f} ({rate:.0f} steps/s)")
            if (it + 1) % config.train.checkpoint_every == 0:
                save_checkpoint(out / f"ckpt_{it + 1:06d}.bin", ac, normalizer,
                                chash, {"iteration": it + 1, "phase": tag})

    ckpt = save_checkpoint(out / "final.bin", ac, normalizer, chash,
                           {"iteration": iterations, "phase": tag})
    return PhaseResult(ckpt, csv_path, final_reward, final_len)


def train_curriculum(config: Config, out_dir, log_cb=None) -> dict:
    """Flat pretrain followed by terrain-randomized finetune."""
    out_dir = Path(out_dir)
    seed = config.train.seed
    phase1 = train_phase(config, FLAT, out_dir, seed,
                         config.train.phase1_iterations, tag="phase1",
                         log_cb=log_cb)
    phase2 = train_phase(config, RANDOMIZED, out_dir, seed + 1,
                         config.train.phase2_iterations,
                         from_checkpoint=phase1.checkpoint, tag="phase2",
                         log_cb=log_cb)
    return {"phase1": phase1, "phase2": phase2}
