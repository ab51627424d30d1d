"""Planar biped description: links, joints, PD actuation, joint friction.

The robot is a 7-link sagittal-plane mechanism: torso plus thigh/shank/foot
per leg, with a floating 3-DOF root (x, z, pitch) located at the hip. The
six actuated joints are hip, knee, ankle pitch on each leg. Generalized
coordinates are ordered [x, z, pitch, R-hip, R-knee, R-ankle, L-hip,
L-knee, L-ankle].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import ModelConfig
from .errors import ConfigError

LINK_NAMES = ("torso", "r_thigh", "r_shank", "r_foot", "l_thigh", "l_shank", "l_foot")
JOINT_NAMES = ("r_hip", "r_knee", "r_ankle", "l_hip", "l_knee", "l_ankle")
# parent link index per joint (joint connects parent to the next link in chain)
JOINT_PARENTS = (0, 1, 2, 0, 4, 5)
NUM_COORDS = 9
NUM_JOINTS = 6


@dataclass
class PDGains:
    """Proportional/derivative tracking gains per actuated joint."""

    kp: np.ndarray  # (6,) N*m/rad
    kd: np.ndarray  # (6,) N*m*s/rad

    def __post_init__(self):
        self.kp = np.asarray(self.kp, dtype=np.float64)
        self.kd = np.asarray(self.kd, dtype=np.float64)
        if np.any(self.kp <= 0.0) or np.any(self.kd <= 0.0):
            raise ConfigError("PD gains must be positive")


@dataclass
class FrictionParams:
    """Joint friction: viscous damping plus regularized dry friction."""

    viscous_damping: np.ndarray  # (6,) N*m*s/rad
    dry_friction: np.ndarray     # (6,) N*m
    slip_scale: float = 0.01     # rad/s

    def __post_init__(self):
        self.viscous_damping = np.asarray(self.viscous_damping, dtype=np.float64)
        self.dry_friction = np.asarray(self.dry_friction, dtype=np.float64)
        if np.any(self.viscous_damping < 0.0) or np.any(self.dry_friction < 0.0):
            raise ConfigError("friction parameters must be non-negative")
        if self.slip_scale <= 0.0:
            raise ConfigError("slip_scale must be positive")


@dataclass
class RobotModel:
    """Packed morphology arrays plus actuation and friction parameters."""

    link_mass: np.ndarray     # (7,)
    link_com: np.ndarray      # (7, 2) in link frame, from the proximal joint
    link_inertia: np.ndarray  # (7,) about the link CoM
    thigh_length: float
    shank_length: float
    ankle_height: float
    heel_offset: float
    toe_offset: float
    gains: PDGains
    torque_limit: np.ndarray  # (6,)
    q_lo: np.ndarray          # (6,)
    q_hi: np.ndarray          # (6,)
    nominal_posture: np.ndarray  # (6,) rad
    nominal_root_height: float
    friction: FrictionParams
    axis: str = "pitch"  # all joints rotate about the out-of-plane axis

    @property
    def total_mass(self) -> float:
        return float(self.link_mass.sum())

    @property
    def links(self):
        return list(zip(LINK_NAMES, self.link_mass, self.link_com, self.link_inertia))

    @property
    def joints(self):
        return [
            (JOINT_PARENTS[j], self.axis, (self.q_lo[j], self.q_hi[j]),
             self.torque_limit[j], (self.gains.kp[j], self.gains.kd[j]))
            for j in range(NUM_JOINTS)
        ]

    def copy(self) -> "RobotModel":
        return RobotModel(
            link_mass=self.link_mass.copy(),
            link_com=self.link_com.copy(),
            link_inertia=self.link_inertia.copy(),
            thigh_length=self.thigh_length,
            shank_length=self.shank_length,
            ankle_height=self.ankle_height,
            heel_offset=self.heel_offset,
            toe_offset=self.toe_offset,
            gains=PDGains(self.gains.kp.copy(), self.gains.kd.copy()),
            torque_limit=self.torque_limit.copy(),
            q_lo=self.q_lo.copy(),
            q_hi=self.q_hi.copy(),
            nominal_posture=self.nominal_posture.copy(),
            nominal_root_height=self.nominal_root_height,
            friction=FrictionParams(
                self.friction.viscous_damping.copy(),
                self.friction.dry_friction.copy(),
                self.friction.slip_scale,
            ),
        )


@dataclass
class RobotState:
    """Instantaneous configuration in generalized coordinates."""

    coords: np.ndarray  # (9,) [x, z, pitch, 6 joint angles]
    vels: np.ndarray    # (9,)
    applied_torque: np.ndarray = field(
        default_factory=lambda: np.zeros(NUM_JOINTS))  # last substep-averaged PD output

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=np.float64)
        self.vels = np.asarray(self.vels, dtype=np.float64)
        self.applied_torque = np.asarray(self.applied_torque, dtype=np.float64)

    @property
    def root_pose(self) -> np.ndarray:
        return self.coords[:3]

    @property
    def root_vel(self) -> np.ndarray:
        return self.vels[:3]

    @property
    def q(self) -> np.ndarray:
        return self.coords[3:]

    @property
    def qdot(self) -> np.ndarray:
        return self.vels[3:]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.coords)) and np.all(np.isfinite(self.vels)))

    def copy(self) -> "RobotState":
        return RobotState(self.coords.copy(), self.vels.copy(), self.applied_torque.copy())

    @classmethod
    def at_rest(cls, model: RobotModel, root_x: float = 0.0,
                root_z: float | None = None, q: np.ndarray | None = None) -> "RobotState":
        """State with zero velocities at a given posture (default: nominal)."""
        if q is None:
            q = model.nominal_posture
        if root_z is None:
            root_z = model.nominal_root_height
        coords = np.concatenate(([root_x, root_z, 0.0], np.asarray(q, dtype=np.float64)))
        return cls(coords, np.zeros(NUM_COORDS))


def _lowest_foot_point_drop(cfg: ModelConfig) -> float:
    """Depth of the lowest foot contact point below the root at nominal posture."""
    a_thigh = cfg.nominal_hip
    a_shank = a_thigh + cfg.nominal_knee
    a_foot = a_shank + cfg.nominal_ankle
    z_ankle = -cfg.thigh_length * math.cos(a_thigh) - cfg.shank_length * math.cos(a_shank)
    ca, sa = math.cos(a_foot), math.sin(a_foot)
    z_heel = z_ankle - cfg.heel_offset * sa - cfg.ankle_height * ca
    z_toe = z_ankle + cfg.toe_offset * sa - cfg.ankle_height * ca
    return -min(z_heel, z_toe)


def build_planar_biped(cfg: ModelConfig | None = None) -> RobotModel:
    """Construct the 7-link planar biped from a model config.

    Thigh and shank are uniform rods (CoM at mid-length, I = m*l^2/12);
    torso and foot use configured CoM offsets and inertias.
    """
    if cfg is None:
        cfg = ModelConfig()
    cfg.validate()

    m_torso = cfg.total_mass * cfg.torso_mass_fraction
    m_thigh = cfg.total_mass * cfg.thigh_mass_fraction
    m_shank = cfg.total_mass * cfg.shank_mass_fraction
    m_foot = cfg.total_mass * cfg.foot_mass_fraction
    frac_sum = (cfg.torso_mass_fraction + 2 * cfg.thigh_mass_fraction
                + 2 * cfg.shank_mass_fraction + 2 * cfg.foot_mass_fraction)
    if abs(frac_sum - 1.0) > 1e-9:
        raise ConfigError(f"mass fractions must sum to 1 (got {frac_sum})")

    link_mass = np.array([m_torso, m_thigh, m_shank, m_foot,
                          m_thigh, m_shank, m_foot])
    com_thigh = (0.0, -0.5 * cfg.thigh_length)
    com_shank = (0.0, -0.5 * cfg.shank_length)
    com_foot = (cfg.foot_com_forward, -cfg.foot_com_drop)
    link_com = np.array([
        (0.0, cfg.torso_com_height),
        com_thigh, com_shank, com_foot,
        com_thigh, com_shank, com_foot,
    ])
    i_thigh = m_thigh * cfg.thigh_length ** 2 / 12.0
    i_shank = m_shank * cfg.shank_length ** 2 / 12.0
    link_inertia = np.array([cfg.torso_inertia, i_thigh, i_shank, cfg.foot_inertia,
                             i_thigh, i_shank, cfg.foot_inertia])

    gains = PDGains(
        kp=[cfg.hip_kp, cfg.knee_kp, cfg.ankle_kp] * 2,
        kd=[cfg.hip_kd, cfg.knee_kd, cfg.ankle_kd] * 2,
    )
    torque_limit = np.array([cfg.hip_torque_limit, cfg.knee_torque_limit,
                             cfg.ankle_torque_limit] * 2)
    q_lo = np.array([cfg.hip_limits[0], cfg.knee_limits[0], cfg.ankle_limits[0]] * 2)
    q_hi = np.array([cfg.hip_limits[1], cfg.knee_limits[1], cfg.ankle_limits[1]] * 2)
    nominal = np.array([cfg.nominal_hip, cfg.nominal_knee, cfg.nominal_ankle] * 2)
    if np.any(nominal < q_lo) or np.any(nominal > q_hi):
        raise ConfigError("nominal posture violates joint limits")

    friction = FrictionParams(
        viscous_damping=np.full(NUM_JOINTS, cfg.joint_damping),
        dry_friction=np.full(NUM_JOINTS, cfg.joint_dry_friction),
        slip_scale=cfg.slip_scale,
    )
    return RobotModel(
        link_mass=link_mass,
        link_com=link_com,
        link_inertia=link_inertia,
        thigh_length=cfg.thigh_length,
        shank_length=cfg.shank_length,
        ankle_height=cfg.ankle_height,
        heel_offset=cfg.heel_offset,
        toe_offset=cfg.toe_offset,
        gains=gains,
        torque_limit=torque_limit,
        q_lo=q_lo,
        q_hi=q_hi,
        nominal_posture=nominal,
        nominal_root_height=_lowest_foot_point_drop(cfg),
        friction=friction,
    )


def pd_torque(gains: PDGains, q_des, q, qdot, torque_limit=None):
    """PD tracking torque kp*(q_des - q) + kd*(0 - qdot), optionally clamped."""
    tau = gains.kp * (np.asarray(q_des) - np.asarray(q)) + gains.kd * (0.0 - np.asarray(qdot))
    if torque_limit is not None:
        tau = np.clip(tau, -np.asarray(torque_limit), np.asarray(torque_limit))
    return tau


def joint_friction(params: FrictionParams, qdot):
    """Friction torque opposing joint motion (viscous + regularized dry)."""
    qdot = np.asarray(qdot)
    return -(params.viscous_damping * qdot
             + params.dry_friction * np.tanh(qdot / params.slip_scale))
