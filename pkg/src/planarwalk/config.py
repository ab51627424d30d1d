"""Configuration dataclasses and TOML loading.

All tunables live here. Config files are TOML with one table per section
([model], [env], [ppo], [train]); unknown keys are rejected so typos fail
loudly instead of silently using defaults.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .errors import ConfigError

FLAT = "flat"
RANDOMIZED = "randomized"


@dataclass
class ModelConfig:
    """Morphology, actuation, and default joint-friction parameters.

    Masses are given as per-link fractions of ``total_mass`` (legs count
    twice), so the built model's mass always sums to the configured total.
    """

    total_mass: float = 25.0
    torso_mass_fraction: float = 0.52
    thigh_mass_fraction: float = 0.12
    shank_mass_fraction: float = 0.07
    foot_mass_fraction: float = 0.05

    thigh_length: float = 0.25
    shank_length: float = 0.25
    ankle_height: float = 0.045
    heel_offset: float = 0.07
    toe_offset: float = 0.11

    torso_com_height: float = 0.16
    torso_inertia: float = 0.20
    foot_com_forward: float = 0.02
    foot_com_drop: float = 0.025
    foot_inertia: float = 0.012

    # per joint type: (kp, kd) in N*m/rad, N*m*s/rad
    hip_kp: float = 200.0
    hip_kd: float = 20.0
    knee_kp: float = 150.0
    knee_kd: float = 15.0
    ankle_kp: float = 80.0
    ankle_kd: float = 8.0

    hip_torque_limit: float = 60.0
    knee_torque_limit: float = 60.0
    ankle_torque_limit: float = 30.0

    hip_limits: tuple[float, float] = (-1.3, 1.3)
    knee_limits: tuple[float, float] = (-2.1, 0.0)
    ankle_limits: tuple[float, float] = (-1.0, 1.0)

    # half-sitting: slight crouch with flat feet (hip + knee + ankle = 0)
    nominal_hip: float = 0.12
    nominal_knee: float = -0.24
    nominal_ankle: float = 0.12

    joint_damping: float = 1.0
    joint_dry_friction: float = 2.0
    slip_scale: float = 0.01  # rad/s, tanh regularization of dry friction

    def validate(self) -> None:
        for name in ("total_mass", "thigh_length", "shank_length", "ankle_height",
                     "torso_inertia", "foot_inertia"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"model.{name} must be positive, got {getattr(self, name)}")
        for name in ("torso_mass_fraction", "thigh_mass_fraction",
                     "shank_mass_fraction", "foot_mass_fraction"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"model.{name} must be positive")
        for name in ("hip_limits", "knee_limits", "ankle_limits"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ConfigError(f"model.{name} lower bound must be below upper bound")
        if self.joint_damping < 0.0 or self.joint_dry_friction < 0.0:
            raise ConfigError("joint friction parameters must be non-negative")


@dataclass
class RewardScales:
    """Gaussian kernel widths for each reward term."""

    force: float = 200.0   # N
    speed: float = 0.5     # m/s
    velocity: float = 0.3  # m/s
    height: float = 0.05   # m
    pitch: float = 0.2     # rad
    posture: float = 0.5   # rad
    qdot: float = 4.0      # rad/s


@dataclass
class EnvConfig:
    """Environment: rates, clock, curriculum switches, randomization ranges."""

    control_rate: float = 40.0
    substeps: int = 25
    substep_dt: float = 0.001
    episode_max_steps: int = 400
    clock_period: int = 80
    clock_control: bool = False
    curriculum: str = FLAT

    action_scale: float = 0.5     # rad around nominal per unit action
    init_noise: float = 0.0       # rad, uniform; off by default
    fall_fraction: float = 0.6    # of nominal root height
    gravity: float = 9.81

    randomize_modes: bool = True
    randomize_compliance: bool = True
    randomize_terrain: bool = True
    randomize_dynamics: bool = True

    mode_switch_interval: float = 5.0     # s, mean
    compliance_interval: float = 0.5      # s, mean
    terrain_move_interval: float = 5.0    # s, mean
    dynamics_interval: float = 0.5        # s, mean
    forward_ref_range: tuple[float, float] = (0.1, 0.4)

    terrain_peak: float = 0.04
    terrain_span: float = 10.0
    terrain_cell: float = 0.04
    terrain_z_range: tuple[float, float] = (-0.04, 0.0)
    terrain_x_range: tuple[float, float] = (-0.5, 0.5)

    contact_time_constant: float = 0.02
    contact_damping_ratio: float = 1.0
    friction_coeff: float = 0.8
    compliance_range: tuple[float, float] = (0.02, 0.4)
    contact_slip_scale: float = 0.02  # m/s

    damping_range: tuple[float, float] = (0.2, 5.0)
    dry_friction_range: tuple[float, float] = (2.0, 8.0)
    mass_scale_range: tuple[float, float] = (0.95, 1.05)
    com_shift_range: tuple[float, float] = (-0.01, 0.01)

    reward_scales: RewardScales = field(default_factory=RewardScales)

    def validate(self) -> None:
        if self.curriculum not in (FLAT, RANDOMIZED):
            raise ConfigError(f"env.curriculum must be '{FLAT}' or '{RANDOMIZED}'")
        if abs(self.control_rate * self.substeps * self.substep_dt - 1.0) > 1e-9:
            raise ConfigError(
                "control_rate * substeps * substep_dt must equal 1 "
                f"(got {self.control_rate} * {self.substeps} * {self.substep_dt})")
        if self.episode_max_steps <= 0 or self.clock_period <= 0:
            raise ConfigError("episode_max_steps and clock_period must be positive")
        lo, hi = self.compliance_range
        if not 0.0 < lo <= hi:
            raise ConfigError("compliance_range must be positive and ordered")
        if self.terrain_peak < 0.0:
            raise ConfigError("terrain_peak must be non-negative")

    def resolved(self) -> "EnvConfig":
        """Copy with randomization switches forced per curriculum phase."""
        cfg = dataclasses.replace(self)
        if cfg.curriculum == FLAT:
            cfg.randomize_terrain = False
            cfg.randomize_compliance = False
            cfg.randomize_dynamics = False
        return cfg


@dataclass
class PpoConfig:
    """PPO hyperparameters (all exposed; standard locomotion settings)."""

    discount: float = 0.99
    gae_lambda: float = 0.95
    clip: float = 0.2
    learning_rate: float = 3e-4
    lr_decay: bool = True
    epochs: int = 4
    minibatch_size: int = 512
    horizon: int = 128
    num_envs: int = 16
    entropy_coef: float = 0.005
    value_coef: float = 0.5
    grad_clip: float = 0.5
    log_std_init: float = math.log(0.3)
    hidden_size: int = 256
    hidden_layers: int = 2

    def validate(self) -> None:
        if not 0.0 < self.discount <= 1.0:
            raise ConfigError("ppo.discount must be in (0, 1]")
        if not 0.0 < self.gae_lambda <= 1.0:
            raise ConfigError("ppo.gae_lambda must be in (0, 1]")
        if self.clip <= 0.0:
            raise ConfigError("ppo.clip must be positive")
        if self.minibatch_size > self.horizon * self.num_envs:
            raise ConfigError("ppo.minibatch_size exceeds rollout size")


@dataclass
class TrainConfig:
    """Curriculum driver: per-phase budgets and output layout."""

    phase1_iterations: int = 2400
    phase2_iterations: int = 1200  # keeps the 2:1 pretrain/finetune proportion
    seed: int = 0
    checkpoint_every: int = 400
    log_every: int = 10

    def validate(self) -> None:
        if self.phase1_iterations <= 0 or self.phase2_iterations <= 0:
            raise ConfigError("iteration counts must be positive")


@dataclass
class Config:
    model: ModelConfig = field(default_factory=ModelConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    ppo: PpoConfig = field(default_factory=PpoConfig)
    train: TrainConfig = field(default_factory=TrainConfig)

    def validate(self) -> "Config":
        self.model.validate()
        self.env.validate()
        self.ppo.validate()
        self.train.validate()
        return self


def _fill(cls, data: dict, path: str):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in fields:
            raise ConfigError(f"unknown config key '{path}.{key}'")
        ftype = fields[key].type
        if isinstance(value, dict):
            subcls = {"reward_scales": RewardScales}.get(key)
            if subcls is None:
                raise ConfigError(f"'{path}.{key}' does not accept a table")
            value = _fill(subcls, value, f"{path}.{key}")
        elif isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    return cls(**kwargs)


def load_config(path: str | Path | None = None) -> Config:
    """Build a Config from defaults, optionally overridden by a TOML file."""
    if path is None:
        return Config().validate()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
    cfg = Config()
    for section in data:
        if section == "model":
            cfg.model = _fill(ModelConfig, data[section], "model")
        elif section == "env":
            cfg.env = _fill(EnvConfig, data[section], "env")
        elif section == "ppo":
            cfg.ppo = _fill(PpoConfig, data[section], "ppo")
        elif section == "train":
            cfg.train = _fill(TrainConfig, data[section], "train")
        else:
            raise ConfigError(f"unknown config section '[{section}]'")
    return cfg.validate()


def config_hash(cfg: Config) -> str:
    """Stable 16-hex-digit digest of every config field."""
    blob = json.dumps(dataclasses.asdict(cfg), sort_keys=True, default=float)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
