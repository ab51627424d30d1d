"""The walking environment: 40 Hz policy steps over 1 kHz dynamics substeps,
clock-driven rewards, mode commands, curriculum-scheduled randomization,
and termination handling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from . import _kernels
from .clock import GaitClock, advance_phase, clock_signal, phase_coefficients
from .config import Config, EnvConfig
from .contact import sample_compliance
from .dynamics import forward_kinematics, pack_model
from .errors import ContractViolationError
from .model import NUM_JOINTS, RobotModel, RobotState, build_planar_biped
from .rewards import RewardBreakdown, compute_reward
from .terrain import TerrainField, flat_field, generate_heightfield, randomize_terrain

OBS_DIM = 26

FALL = "fall"
DIVERGED = "diverged"
SELF_COLLISION = "self_collision"
TIMEOUT = "timeout"

# legs crossed this far while the feet overlap reads as a self-collision
_CROSSED_HIP_ANGLE = 1.0


class Mode(IntEnum):
    FORWARD = 0
    INPLACE = 1
    STANDING = 2


@dataclass
class ModeCommand:
    """Commanded walking mode plus its scalar reference (forward m/s)."""

    mode: Mode = Mode.STANDING
    reference: float = 0.0

    def one_hot(self) -> np.ndarray:
        enc = np.zeros(3)
        enc[int(self.mode)] = 1.0
        return enc


def propose_mode(rng: np.random.Generator,
                 forward_range=(0.1, 0.4)) -> ModeCommand:
    """Uniform mode proposal with a freshly sampled reference."""
    mode = Mode(int(rng.integers(0, 3)))
    ref = float(rng.uniform(*forward_range)) if mode == Mode.FORWARD else 0.0
    return ModeCommand(mode, ref)


def apply_mode_proposal(current: ModeCommand, proposal: ModeCommand,
                        in_double_support: bool):
    """Apply a proposal unless it moves into/out of Standing outside double
    support; a gated proposal stays pending. Returns (command, pending)."""
    gated = (current.mode == Mode.STANDING) != (proposal.mode == Mode.STANDING)
    if gated and not in_double_support:
        return current, proposal
    return proposal, None


def switch_mode(rng: np.random.Generator, clock: GaitClock, current: ModeCommand,
                pending: ModeCommand | None = None, probability: float = 1.0 / 200.0,
                forward_range=(0.1, 0.4)):
    """Random mode switching with double-support gating for Standing.

    Returns (command, pending). The Bernoulli draw is consumed every call so
    the stream stays aligned regardless of outcomes.
    """
    if rng.random() < probability:
        pending = propose_mode(rng, forward_range)
    if pending is not None:
        _, _, ds = phase_coefficients(clock)
        current, pending = apply_mode_proposal(current, pending, ds)
    return current, pending


def randomize_dynamics(model: RobotModel, rng: np.random.Generator,
                       cfg: EnvConfig | None = None) -> RobotModel:
    """Resample joint friction, link masses, and CoM offsets from defaults.

    `model` must be the pristine default; scales and shifts never compound.
    """
    cfg = cfg or EnvConfig()
    out = model.copy()
    out.friction.viscous_damping[:] = rng.uniform(
        cfg.damping_range[0], cfg.damping_range[1], NUM_JOINTS)
    out.friction.dry_friction[:] = rng.uniform(
        cfg.dry_friction_range[0], cfg.dry_friction_range[1], NUM_JOINTS)
    n_links = model.link_mass.shape[0]
    out.link_mass[:] = model.link_mass * rng.uniform(
        cfg.mass_scale_range[0], cfg.mass_scale_range[1], n_links)
    out.link_com[:] = model.link_com + rng.uniform(
        cfg.com_shift_range[0], cfg.com_shift_range[1], (n_links, 2))
    return out


def check_termination(state: RobotState, model: RobotModel,
                      fall_fraction: float = 0.6) -> str | None:
    """Fall / divergence / self-collision check; None while healthy."""
    if not state.is_finite():
        return DIVERGED
    fk = forward_kinematics(model, state)
    root_z = state.coords[1]
    lowest = float(fk.foot_points[:, 1].min())
    if root_z - lowest < fall_fraction * model.nominal_root_height:
        return FALL
    r_lo = min(fk.foot_points[0, 0], fk.foot_points[1, 0])
    r_hi = max(fk.foot_points[0, 0], fk.foot_points[1, 0])
    l_lo = min(fk.foot_points[2, 0], fk.foot_points[3, 0])
    l_hi = max(fk.foot_points[2, 0], fk.foot_points[3, 0])
    overlap = r_lo <= l_hi and l_lo <= r_hi
    crossed = abs(state.q[0] - state.q[3]) > _CROSSED_HIP_ANGLE
    below_root = fk.ankles[0, 1] < root_z and fk.ankles[1, 1] < root_z
    if overlap and crossed and below_root:
        return SELF_COLLISION
    return None


class WalkingEnv:
    """One independent environment instance (single-threaded)."""

    def __init__(self, config: Config, seed: int = 0,
                 field: TerrainField | None = None):
        self.cfg = config.env.resolved()
        self.model_cfg = config.model
        self.default_model = build_planar_biped(config.model)
        self.model = self.default_model.copy()
        self.arrs = pack_model(self.model)
        self.rng = np.random.default_rng(seed)
        self.seed = seed

        if field is not None:
            self.field = field
        elif self.cfg.randomize_terrain:
            self.field = generate_heightfield(
                np.random.default_rng(seed ^ 0x7E11A1), self.cfg.terrain_peak,
                self.cfg.terrain_span, self.cfg.terrain_cell)
        else:
            self.field = flat_field()

        rate = self.cfg.control_rate
        self._p_mode = 1.0 / (self.cfg.mode_switch_interval * rate)
        self._p_compliance = 1.0 / (self.cfg.compliance_interval * rate)
        self._p_terrain = 1.0 / (self.cfg.terrain_move_interval * rate)
        self._p_dynamics = 1.0 / (self.cfg.dynamics_interval * rate)

        self.action_dim = NUM_JOINTS + (1 if self.cfg.clock_control else 0)
        self.state = RobotState.at_rest(self.default_model)
        self.clock = GaitClock(0, self.cfg.clock_period)
        self.command = ModeCommand()
        self.pending_command: ModeCommand | None = None
        self.tau_c = np.full(2, self.cfg.contact_time_constant)
        self.step_count = 0
        self._last_obs = np.zeros(OBS_DIM, dtype=np.float64)
        self._weight = self.default_model.total_mass * self.cfg.gravity

    # -- observation ---------------------------------------------------

    def _observation(self) -> np.ndarray:
        s = self.state
        sin_c, cos_c = clock_signal(self.clock)
        obs = np.empty(OBS_DIM)
        obs[0] = s.coords[2]
        obs[1] = s.vels[2]
        obs[2:8] = s.coords[3:]
        obs[8:14] = s.vels[3:]
        obs[14:20] = s.applied_torque
        obs[20:23] = self.command.one_hot()
        obs[23] = self.command.reference
        obs[24] = sin_c
        obs[25] = cos_c
        self._last_obs = obs
        return obs

    # -- episode control -------------------------------------------------

    def reset(self) -> np.ndarray:
        self.model = self.default_model.copy()
        self.arrs = pack_model(self.model)
        q = self.default_model.nominal_posture.copy()
        if self.cfg.init_noise > 0.0:
            q += self.rng.uniform(-self.cfg.init_noise, self.cfg.init_noise, NUM_JOINTS)

        if self.cfg.randomize_terrain:
            self.field = randomize_terrain(self.field, self.rng, False,
                                           self.cfg.terrain_x_range,
                                           self.cfg.terrain_z_range)
        if self.cfg.randomize_compliance:
            lo, hi = self.cfg.compliance_range
            self.tau_c[0] = sample_compliance(self.rng, lo, hi)
            self.tau_c[1] = sample_compliance(self.rng, lo, hi)
        else:
            self.tau_c[:] = self.cfg.contact_time_constant

        self.state = RobotState.at_rest(self.default_model, q=q)
        fk = forward_kinematics(self.model, self.state)
        ground = max(self._terrain_height(x) for x in fk.foot_points[:, 0])
        self.state.coords[1] += ground

        self.clock = GaitClock(0, self.cfg.clock_period)
        self.command = ModeCommand(Mode.STANDING, 0.0)
        self.pending_command = None
        self.step_count = 0
        return self._observation()

    def set_command(self, mode: Mode, reference: float = 0.0) -> None:
        """Queue an external command (evaluation); same gating as training."""
        proposal = ModeCommand(mode, reference)
        _, _, ds = phase_coefficients(self.clock)
        self.command, self.pending_command = apply_mode_proposal(
            self.command, proposal, ds)

    def _terrain_height(self, x: float) -> float:
        return float(_kernels.terrain_height_at(
            float(x), self.field.heights, self.field.span, self.field.cell,
            self.field.x_offset, self.field.z_offset, self.field.enabled))

    def _effective_coefficients(self):
        c_r, c_l, ds = phase_coefficients(self.clock)
        if self.command.mode == Mode.STANDING:
            return 1.0, 1.0, True
        return c_r, c_l, ds

    def step(self, action):
        action = np.asarray(action, dtype=np.float64)
        if action.shape != (self.action_dim,):
            raise ContractViolationError(
                f"action must have shape ({self.action_dim},), got {action.shape}")
        if not np.all(np.isfinite(action)):
            raise ContractViolationError("action components must be finite")

        joint_action = np.clip(action[:NUM_JOINTS], -1.0, 1.0) * self.cfg.action_scale
        q_des = np.clip(self.model.nominal_posture + joint_action,
                        self.model.q_lo, self.model.q_hi)

        a = self.arrs
        q, v, tau_mean, grf, foot_speed, ok = _kernels.run_substeps(
            self.state.coords, self.state.vels, q_des, self.cfg.substeps,
            a.link_mass, a.link_com, a.link_inertia, a.geom,
            a.kp, a.kd, a.tau_lim, a.q_lo, a.q_hi, a.visc, a.dry, a.slip,
            self.field.heights, self.field.span, self.field.cell,
            self.field.x_offset, self.field.z_offset, self.field.enabled,
            self.tau_c, self.cfg.contact_damping_ratio, self.cfg.friction_coeff,
            self.cfg.contact_slip_scale, self.cfg.gravity, self.cfg.substep_dt)

        self.step_count += 1
        info = {
            "phi": self.clock.phi,
            "mode": self.command.mode,
            "mode_ref": self.command.reference,
            "grf": grf,
            "foot_speed": foot_speed,
            "timeout": False,
            "termination": None,
        }

        if not ok:
            info["termination"] = DIVERGED
            info["reward_terms"] = None
            return self._last_obs.copy(), 0.0, True, info

        self.state = RobotState(q, v, tau_mean)

        c_r, c_l, _ = self._effective_coefficients()
        grf_norms = (float(np.hypot(grf[0, 0], grf[0, 1])),
                     float(np.hypot(grf[1, 0], grf[1, 1])))
        ref = self.command.reference if self.command.mode == Mode.FORWARD else 0.0
        reward, terms = compute_reward(
            root_xdot=v[0], root_z=q[1], root_pitch=q[2],
            q=q[3:], qdot=v[3:], nominal_q=self.model.nominal_posture,
            nominal_root_height=self.model.nominal_root_height,
            stance_right=c_r, stance_left=c_l,
            grf_norms=grf_norms, foot_speeds=foot_speed,
            velocity_ref=ref, scales=self.cfg.reward_scales)
        info["reward_terms"] = terms

        a_dphi = 0.0
        if self.cfg.clock_control:
            a_dphi = 5.0 * math.tanh(action[NUM_JOINTS])
        info["a_dphi"] = a_dphi
        self.clock = advance_phase(self.clock, a_dphi, self.cfg.clock_control)

        self._run_scheduled_events()

        reason = check_termination(self.state, self.model, self.cfg.fall_fraction)
        done = reason is not None
        if not done and self.step_count >= self.cfg.episode_max_steps:
            done = True
            reason = TIMEOUT
            info["timeout"] = True
        info["termination"] = reason
        return self._observation(), reward, done, info

    def _run_scheduled_events(self) -> None:
        """Bernoulli-per-step randomization; fixed draw order for determinism."""
        cfg = self.cfg
        if cfg.randomize_modes:
            self.command, self.pending_command = switch_mode(
                self.rng, self.clock, self.command, self.pending_command,
                self._p_mode, cfg.forward_ref_range)
        elif self.pending_command is not None:
            _, _, ds = phase_coefficients(self.clock)
            self.command, self.pending_command = apply_mode_proposal(
                self.command, self.pending_command, ds)
        if cfg.randomize_compliance and self.rng.random() < self._p_compliance:
            lo, hi = cfg.compliance_range
            self.tau_c[0] = sample_compliance(self.rng, lo, hi)
            self.tau_c[1] = sample_compliance(self.rng, lo, hi)
        if cfg.randomize_terrain and self.rng.random() < self._p_terrain:
            _, _, ds = self._effective_coefficients()
            self.field = randomize_terrain(self.field, self.rng, ds,
                                           cfg.terrain_x_range, cfg.terrain_z_range)
        if cfg.randomize_dynamics and self.rng.random() < self._p_dynamics:
            self.model = randomize_dynamics(self.default_model, self.rng, cfg)
            self.arrs = pack_model(self.model)
