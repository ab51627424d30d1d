"""Evaluation protocols: episode-length sweeps over unevenness, the
four-policy ablation grid, GRF recording, and phase-trace analysis.

All runs are seed-deterministic: episode seeds derive from the spec's seed
base, and each sweep cell pre-generates its terrain from a fixed seed.
The standard command schedule is 1 s of Standing followed by a fixed mode,
so episodes are comparable across policies.
"""
from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint
from .config import RANDOMIZED, Config
from .env import OBS_DIM, Mode, WalkingEnv
from .errors import ConfigError
from .model import build_planar_biped
from .terrain import generate_heightfield

STANCE_THRESHOLD_FRACTION = 0.05  # of body weight, for stance detection
DEFAULT_FORWARD_SPEED = 0.3
STANDING_LEAD_STEPS = 40  # 1 s of Standing before the commanded mode


@dataclass
class EvalRecord:
    """Per-episode log: outcome plus optional per-step series."""

    length_s: float
    termination: str
    seed: int
    grf: np.ndarray | None = None      # (T, 2) vertical GRF right/left
    phi: np.ndarray | None = None      # (T,)
    a_dphi: np.ndarray | None = None   # (T,)
    root_xdot: np.ndarray | None = None


@dataclass
class SweepSpec:
    """Episode-length sweep over unevenness heights."""

    checkpoints: dict  # policy name -> checkpoint path
    heights: tuple = (0.04, 0.05, 0.06, 0.07)
    episodes_per_cell: int = 100
    randomize_compliance: bool = True
    seed_base: int = 0
    forward_speed: float = DEFAULT_FORWARD_SPEED

    def __post_init__(self):
        if any(h < 0 for h in self.heights):
            raise ConfigError("sweep heights must be non-negative")
        if self.episodes_per_cell < 1:
            raise ConfigError("episodes_per_cell must be >= 1")


class Policy:
    """Deterministic policy (action mean) from a checkpoint."""

    def __init__(self, ac, normalizer):
        self.ac = ac
        self.normalizer = normalizer
        self.action_dim = ac.action_dim

    @classmethod
    def from_checkpoint(cls, path) -> "Policy":
        ac, normalizer, header = load_checkpoint(path)
        if header["obs_dim"] != OBS_DIM:
            raise ConfigError(
                f"checkpoint obs dim {header['obs_dim']} != environment {OBS_DIM}")
        normalizer.frozen = True
        return cls(ac, normalizer)

    def act(self, obs: np.ndarray) -> np.ndarray:
        mean = self.ac.actor.forward(self.normalizer.normalize(obs)[None, :])
        return mean[0].astype(np.float64)


class ZeroPolicy:
    """Holds the nominal posture; useful as a no-op baseline."""

    def __init__(self, action_dim: int = 6):
        self.action_dim = action_dim

    def act(self, obs: np.ndarray) -> np.ndarray:
        return np.zeros(self.action_dim)


class RandomPolicy:
    """Uniform random joint offsets; the untrained reference point."""

    def __init__(self, action_dim: int = 6, seed: int = 0):
        self.action_dim = action_dim
        self.rng = np.random.default_rng(seed)

    def act(self, obs: np.ndarray) -> np.ndarray:
        return self.rng.uniform(-1.0, 1.0, self.action_dim)


def _eval_env_config(config: Config, *, terrain_peak: float,
                     randomize_compliance: bool,
                     fixed_time_constant: float | None = None,
                     clock_control: bool) -> Config:
    """Evaluation variant of the env config: fixed commands, fresh terrain
    offsets per episode but no mid-episode terrain moves, no dynamics
    randomization."""
    env = dataclasses.replace(
        config.env,
        curriculum=RANDOMIZED,
        clock_control=clock_control,
        randomize_modes=False,
        randomize_dynamics=False,
        randomize_terrain=terrain_peak > 0.0,
        randomize_compliance=randomize_compliance,
        terrain_peak=terrain_peak,
        terrain_z_range=(0.0, 0.0),
        terrain_move_interval=1e30,
        contact_time_constant=(fixed_time_constant
                               if fixed_time_constant is not None
                               else config.env.contact_time_constant),
    )
    return dataclasses.replace(config, env=env)


def run_episode(config: Config, policy, seed: int, field=None,
                command=(Mode.FORWARD, DEFAULT_FORWARD_SPEED),
                max_steps: int | None = None, record_series: bool = False,
                ignore_termination: bool = False) -> EvalRecord:
    """One deterministic episode under the standard command schedule."""
    env = WalkingEnv(config, seed=seed, field=field)
    obs = env.reset()
    limit = max_steps if max_steps is not None else config.env.episode_max_steps
    grf, phi, adphi, xdot = [], [], [], []
    reason = "timeout"
    steps = 0
    for step in range(limit):
        if step == STANDING_LEAD_STEPS and command[0] != Mode.STANDING:
            env.set_command(command[0], command[1])
        action = policy.act(obs)
        obs, _reward, done, info = env.step(action)
        steps += 1
        if record_series:
            grf.append((info["grf"][0, 1], info["grf"][1, 1]))
            phi.append(info["phi"])
            adphi.append(info.get("a_dphi", 0.0))
            xdot.append(env.state.vels[0])
        if done:
            reason = info["termination"]
            if not ignore_termination:
                break
            if reason == "diverged":
                obs = env.reset()
    return EvalRecord(
        length_s=steps / config.env.control_rate,
        termination=reason,
        seed=seed,
        grf=np.array(grf) if record_series else None,
        phi=np.array(phi) if record_series else None,
        a_dphi=np.array(adphi) if record_series else None,
        root_xdot=np.array(xdot) if record_series else None,
    )


def _cell_field(config: Config, peak: float, cell_seed: int):
    if peak <= 0.0:
        return None
    rng = np.random.default_rng(cell_seed)
    return generate_heightfield(rng, peak, config.env.terrain_span,
                                config.env.terrain_cell)


def _mean_se(values):
    arr = np.asarray(values, dtype=np.float64)
    se = arr.std(ddof=1) / math.sqrt(len(arr)) if len(arr) > 1 else 0.0
    return float(arr.mean()), float(se)


def eval_episode_lengths(spec: SweepSpec, config: Config,
                         out_csv=None) -> list[dict]:
    """Mean episode length per (policy, height) cell; Forward command."""
    policies = {}
    for name, path in spec.checkpoints.items():
        policies[name] = Policy.from_checkpoint(path)
    rows = []
    for h_idx, height in enumerate(spec.heights):
        cell_seed = spec.seed_base + 90001 + h_idx
        for name, policy in policies.items():
            cfg = _eval_env_config(
                config, terrain_peak=height,
                randomize_compliance=spec.randomize_compliance,
                clock_control=policy.action_dim == 7)
            base_field = _cell_field(cfg, height, cell_seed)
            lengths = []
            for ep in range(spec.episodes_per_cell):
                field = dataclasses.replace(base_field) if base_field else None
                rec = run_episode(cfg, policy, seed=spec.seed_base + ep,
                                  field=field,
                                  command=(Mode.FORWARD, spec.forward_speed))
                lengths.append(rec.length_s)
            mean, se = _mean_se(lengths)
            rows.append({"height": height, "policy": name,
                         "mean_length_s": mean, "stderr_s": se,
                         "episodes": spec.episodes_per_cell})
    if out_csv is not None:
        _write_csv(out_csv, ("height", "policy", "mean_length_s", "stderr_s",
                             "episodes"), rows)
    return rows


ABLATION_VARIANTS = ("flat_only", "uneven_rigid", "fixed_compliance",
                     "terrain_randomized")
ABLATION_CELLS = ("flat_rigid", "uneven_2cm_rigid", "flat_compliant",
                  "uneven_2cm_randomized")


def _ablation_cell_config(config: Config, cell: str, clock_control: bool) -> Config:
    stiff = config.env.compliance_range[0]
    soft = config.env.compliance_range[1]
    if cell == "flat_rigid":
        return _eval_env_config(config, terrain_peak=0.0,
                                randomize_compliance=False,
                                fixed_time_constant=stiff,
                                clock_control=clock_control)
    if cell == "uneven_2cm_rigid":
        return _eval_env_config(config, terrain_peak=0.02,
                                randomize_compliance=False,
                                fixed_time_constant=stiff,
                                clock_control=clock_control)
    if cell == "flat_compliant":
        return _eval_env_config(config, terrain_peak=0.0,
                                randomize_compliance=False,
                                fixed_time_constant=soft,
                                clock_control=clock_control)
    if cell == "uneven_2cm_randomized":
        return _eval_env_config(config, terrain_peak=0.02,
                                randomize_compliance=True,
                                clock_control=clock_control)
    raise ConfigError(f"unknown ablation cell '{cell}'")


def ablation_suite(checkpoints: dict, config: Config, episodes: int = 20,
                   seed_base: int = 0, out_csv=None,
                   heights_extra: dict | None = None) -> list[dict]:
    """Evaluate the four curriculum variants over the four terrain cells.

    ``checkpoints`` maps variant names (see ABLATION_VARIANTS) to paths;
    missing variants produce rows with a null mean (explicit gaps).
    ``heights_extra`` optionally maps extra cell names to peak heights, e.g.
    {"uneven_1cm_rigid": 0.01} for baseline-degradation checks.
    """
    rows = []
    cells = {name: None for name in ABLATION_CELLS}
    for variant in ABLATION_VARIANTS:
        path = checkpoints.get(variant)
        policy = Policy.from_checkpoint(path) if path else None
        cell_names = list(cells)
        if heights_extra:
            cell_names += list(heights_extra)
        for c_idx, cell in enumerate(cell_names):
            if policy is None:
                rows.append({"variant": variant, "cell": cell,
                             "mean_length_s": None, "stderr_s": None,
                             "episodes": 0})
                continue
            if heights_extra and cell in heights_extra:
                cfg = _eval_env_config(config,
                                       terrain_peak=heights_extra[cell],
                                       randomize_compliance=False,
                                       fixed_time_constant=config.env.compliance_range[0],
                                       clock_control=policy.action_dim == 7)
            else:
                cfg = _ablation_cell_config(config, cell,
                                            policy.action_dim == 7)
            base_field = _cell_field(cfg, cfg.env.terrain_peak,
                                     seed_base + 70001 + c_idx)
            lengths = []
            for ep in range(episodes):
                fld = dataclasses.replace(base_field) if base_field else None
                rec = run_episode(cfg, policy, seed=seed_base + ep, field=fld)
                lengths.append(rec.length_s)
            mean, se = _mean_se(lengths)
            rows.append({"variant": variant, "cell": cell,
                         "mean_length_s": mean, "stderr_s": se,
                         "episodes": episodes})
    if out_csv is not None:
        _write_csv(out_csv, ("variant", "cell", "mean_length_s", "stderr_s",
                             "episodes"), rows)
    return rows


def stance_durations(grf_series: np.ndarray, weight: float,
                     control_rate: float = 40.0):
    """Stance/swing durations per foot from vertical GRF.

    Stance is GRF above STANCE_THRESHOLD_FRACTION of body weight. Runs that
    touch the series boundary are dropped as incomplete. Returns a dict with
    pooled stance and swing duration lists (seconds).
    """
    threshold = STANCE_THRESHOLD_FRACTION * weight
    stance_all, swing_all = [], []
    for foot in range(2):
        in_stance = grf_series[:, foot] > threshold
        runs = []
        start = 0
        for t in range(1, len(in_stance) + 1):
            if t == len(in_stance) or in_stance[t] != in_stance[t - 1]:
                runs.append((in_stance[start], start, t))
                start = t
        for flag, s0, s1 in runs[1:-1]:  # interior runs only
            duration = (s1 - s0) / control_rate
            (stance_all if flag else swing_all).append(duration)
    return {"stance": stance_all, "swing": swing_all}


def record_grf(config: Config, policy, duration_s: float = 60.0,
               terrain_peak: float = 0.02, randomize_compliance: bool = True,
               seed: int = 0, out_csv=None,
               command=(Mode.INPLACE, 0.0)) -> dict:
    """Vertical GRF time series over chained termination-disabled episodes.

    Chains 10 s episodes (reset between) until the duration is covered,
    stepping in place by default, and summarizes stance/swing durations via
    the body-weight threshold detector.
    """
    cfg = _eval_env_config(config, terrain_peak=terrain_peak,
                           randomize_compliance=randomize_compliance,
                           clock_control=getattr(policy, "action_dim", 6) == 7)
    base_field = _cell_field(cfg, terrain_peak, seed + 80001)
    chunk_steps = cfg.env.episode_max_steps
    total_steps = int(round(duration_s * cfg.env.control_rate))
    series = []
    ep = 0
    while sum(len(s) for s in series) < total_steps:
        fld = dataclasses.replace(base_field) if base_field else None
        rec = run_episode(cfg, policy, seed=seed + ep, field=fld,
                          command=command, max_steps=chunk_steps,
                          record_series=True, ignore_termination=True)
        series.append(rec.grf)
        ep += 1
    grf = np.concatenate(series)[:total_steps]
    weight = build_planar_biped(config.model).total_mass * config.env.gravity
    durations = stance_durations(grf, weight, cfg.env.control_rate)
    stance = np.array(durations["stance"]) if durations["stance"] else np.zeros(0)
    summary = {
        "steps": int(grf.shape[0]),
        "stance_count": int(stance.size),
        "stance_mean_s": float(stance.mean()) if stance.size else float("nan"),
        "stance_std_s": float(stance.std(ddof=1)) if stance.size > 1 else float("nan"),
        "swing_count": len(durations["swing"]),
    }
    if out_csv is not None:
        rows = [{"step": t, "grf_right_n": f"{grf[t, 0]:.6f}",
                 "grf_left_n": f"{grf[t, 1]:.6f}"} for t in range(grf.shape[0])]
        _write_csv(out_csv, ("step", "grf_right_n", "grf_left_n"), rows)
    return {"grf": grf, "summary": summary, "durations": durations}


def gait_cycle_durations(phi_series: np.ndarray, period: int = 80,
                         control_rate: float = 40.0):
    """Durations between forward phase wraps, in seconds."""
    wraps = []
    for t in range(1, len(phi_series)):
        if phi_series[t] < phi_series[t - 1] - period // 2:
            wraps.append(t)
    return [(b - a) / control_rate for a, b in zip(wraps[:-1], wraps[1:])]


def record_phase_trace(config: Config, policy, mode: Mode,
                       duration_s: float = 20.0, reference: float = 0.4,
                       seed: int = 0, out_csv=None) -> dict:
    """Log phi and the clock offset action on flat rigid ground.

    Only meaningful for clock-control policies; a 6-action checkpoint has no
    phase action and is rejected.
    """
    if getattr(policy, "action_dim", 6) != 7:
        raise ConfigError("phase trace requires a clock-control checkpoint "
                          "(7 actions); this policy has no phase action")
    cfg = _eval_env_config(config, terrain_peak=0.0,
                           randomize_compliance=False,
                           fixed_time_constant=config.env.compliance_range[0],
                           clock_control=True)
    steps = int(round(duration_s * cfg.env.control_rate))
    ref = reference if mode == Mode.FORWARD else 0.0
    rec = run_episode(cfg, policy, seed=seed, command=(mode, ref),
                      max_steps=steps, record_series=True,
                      ignore_termination=True)
    cycles = gait_cycle_durations(rec.phi, cfg.env.clock_period,
                                  cfg.env.control_rate)
    summary = {
        "mean_cycle_s": float(np.mean(cycles)) if cycles else float("nan"),
        "cycles": len(cycles),
        "max_abs_offset": float(np.max(np.abs(rec.a_dphi))) if rec.a_dphi.size else 0.0,
    }
    if out_csv is not None:
        rows = [{"step": t, "phi": int(rec.phi[t]),
                 "a_dphi": f"{rec.a_dphi[t]:.6f}"} for t in range(len(rec.phi))]
        _write_csv(out_csv, ("step", "phi", "a_dphi"), rows)
    return {"phi": rec.phi, "a_dphi": rec.a_dphi, "cycles": cycles,
            "summary": summary}


def rollout_trace(config: Config, policy, seed: int, out_csv=None) -> list[dict]:
    """Single deterministic episode dumped per control step."""
    env = WalkingEnv(config, seed=seed)
    obs = env.reset()
    rows = []
    for step in range(config.env.episode_max_steps):
        action = policy.act(obs)
        phi_before = env.clock.phi
        mode_before = env.command.mode
        ref_before = env.command.reference
        obs, reward, done, info = env.step(action)
        terms = info["reward_terms"]
        term_values = terms.as_tuple() if terms is not None else (float("nan"),) * 7
        s = env.state
        rows.append({
            "step": step,
            "phi": phi_before,
            "mode": int(mode_before),
            "mode_ref": f"{ref_before:.6f}",
            "reward": f"{reward:.9f}",
            "r_foot_force": f"{term_values[0]:.9f}",
            "r_foot_speed": f"{term_values[1]:.9f}",
            "r_forward_velocity": f"{term_values[2]:.9f}",
            "r_root_height": f"{term_values[3]:.9f}",
            "r_upper_body": f"{term_values[4]:.9f}",
            "r_nominal_posture": f"{term_values[5]:.9f}",
            "r_joint_velocities": f"{term_values[6]:.9f}",
            "grf_right_n": f"{info['grf'][0, 1]:.6f}",
            "grf_left_n": f"{info['grf'][1, 1]:.6f}",
            "root_x": f"{s.coords[0]:.9f}",
            "root_z": f"{s.coords[1]:.9f}",
            "root_pitch": f"{s.coords[2]:.9f}",
            "root_xdot": f"{s.vels[0]:.9f}",
            "root_zdot": f"{s.vels[1]:.9f}",
            "root_pitchrate": f"{s.vels[2]:.9f}",
            "done": int(done),
            "termination": info["termination"] or "",
        })
        if done:
            break
    if out_csv is not None:
        _write_csv(out_csv, list(rows[0].keys()), rows)
    return rows


def _write_csv(path, fieldnames, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
