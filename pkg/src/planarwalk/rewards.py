"""Clock-based locomotion reward.

Each term is a Gaussian kernel exp(-(err/sigma)^2) in [0, 1]; the weighted
total tops out at 0.9 (the turning term has no analog for a sagittal-plane
robot and its weight is intentionally not reallocated).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import RewardScales

WEIGHT_FOOT_FORCE = 0.225
WEIGHT_FOOT_SPEED = 0.225
WEIGHT_FORWARD_VELOCITY = 0.1
WEIGHT_ROOT_HEIGHT = 0.05
WEIGHT_UPPER_BODY = 0.1
WEIGHT_NOMINAL_POSTURE = 0.1
WEIGHT_JOINT_VELOCITIES = 0.1
TOTAL_WEIGHT = (WEIGHT_FOOT_FORCE + WEIGHT_FOOT_SPEED + WEIGHT_FORWARD_VELOCITY
                + WEIGHT_ROOT_HEIGHT + WEIGHT_UPPER_BODY + WEIGHT_NOMINAL_POSTURE
                + WEIGHT_JOINT_VELOCITIES)

TERM_NAMES = ("foot_force", "foot_speed", "forward_velocity", "root_height",
              "upper_body", "nominal_posture", "joint_velocities")


@dataclass
class RewardBreakdown:
    """Unweighted term values (each in [0, 1]) for one control step."""

    foot_force: float
    foot_speed: float
    forward_velocity: float
    root_height: float
    upper_body: float
    nominal_posture: float
    joint_velocities: float

    def total(self) -> float:
        return (WEIGHT_FOOT_FORCE * self.foot_force
                + WEIGHT_FOOT_SPEED * self.foot_speed
                + WEIGHT_FORWARD_VELOCITY * self.forward_velocity
                + WEIGHT_ROOT_HEIGHT * self.root_height
                + WEIGHT_UPPER_BODY * self.upper_body
                + WEIGHT_NOMINAL_POSTURE * self.nominal_posture
                + WEIGHT_JOINT_VELOCITIES * self.joint_velocities)

    def as_tuple(self):
        return (self.foot_force, self.foot_speed, self.forward_velocity,
                self.root_height, self.upper_body, self.nominal_posture,
                self.joint_velocities)


def _kernel(err: float, sigma: float) -> float:
    r = err / sigma
    return math.exp(-r * r)


def compute_reward(root_xdot: float, root_z: float, root_pitch: float,
                   q: np.ndarray, qdot: np.ndarray, nominal_q: np.ndarray,
                   nominal_root_height: float,
                   stance_right: float, stance_left: float,
                   grf_norms, foot_speeds,
                   velocity_ref: float,
                   scales: RewardScales) -> tuple[float, RewardBreakdown]:
    """Weighted clock-based reward.

    grf_norms / foot_speeds are per-foot magnitudes (right, left); the
    stance coefficients decide which foot is penalized for carrying force
    (swing) versus moving (stance). velocity_ref is 0 outside Forward mode.
    """
    err_force = (1.0 - stance_right) * grf_norms[0] + (1.0 - stance_left) * grf_norms[1]
    err_speed = stance_right * foot_speeds[0] + stance_left * foot_speeds[1]
    breakdown = RewardBreakdown(
        foot_force=_kernel(err_force, scales.force),
        foot_speed=_kernel(err_speed, scales.speed),
        forward_velocity=_kernel(root_xdot - velocity_ref, scales.velocity),
        root_height=_kernel(root_z - nominal_root_height, scales.height),
        upper_body=_kernel(root_pitch, scales.pitch),
        nominal_posture=_kernel(float(np.linalg.norm(q - nominal_q)), scales.posture),
        joint_velocities=_kernel(float(np.linalg.norm(qdot)), scales.qdot),
    )
    return breakdown.total(), breakdown
