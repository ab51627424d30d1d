"""Public simulation API over the numba kernels."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ContractViolationError, SimulationDivergedError
from .model import NUM_JOINTS, RobotModel, RobotState

SUBSTEP_DT = 0.001


@dataclass
class ModelArrays:
    """Model parameters packed for the kernels."""

    link_mass: np.ndarray
    link_com: np.ndarray
    link_inertia: np.ndarray
    geom: np.ndarray  # (thigh, shank, ankle_h, heel_off, toe_off)
    kp: np.ndarray
    kd: np.ndarray
    tau_lim: np.ndarray
    q_lo: np.ndarray
    q_hi: np.ndarray
    visc: np.ndarray
    dry: np.ndarray
    slip: float


def pack_model(model: RobotModel) -> ModelArrays:
    return ModelArrays(
        link_mass=np.ascontiguousarray(model.link_mass, dtype=np.float64),
        link_com=np.ascontiguousarray(model.link_com, dtype=np.float64),
        link_inertia=np.ascontiguousarray(model.link_inertia, dtype=np.float64),
        geom=np.array([model.thigh_length, model.shank_length, model.ankle_height,
                       model.heel_offset, model.toe_offset]),
        kp=np.ascontiguousarray(model.gains.kp, dtype=np.float64),
        kd=np.ascontiguousarray(model.gains.kd, dtype=np.float64),
        tau_lim=np.ascontiguousarray(model.torque_limit, dtype=np.float64),
        q_lo=np.ascontiguousarray(model.q_lo, dtype=np.float64),
        q_hi=np.ascontiguousarray(model.q_hi, dtype=np.float64),
        visc=np.ascontiguousarray(model.friction.viscous_damping, dtype=np.float64),
        dry=np.ascontiguousarray(model.friction.dry_friction, dtype=np.float64),
        slip=float(model.friction.slip_scale),
    )


@dataclass
class FKResult:
    """World-frame kinematics: link poses plus foot contact points."""

    link_positions: np.ndarray  # (7, 2) CoM positions
    link_angles: np.ndarray     # (7,)
    foot_points: np.ndarray     # (4, 2): R-heel, R-toe, L-heel, L-toe
    foot_point_vels: np.ndarray  # (4, 2)
    ankles: np.ndarray          # (2, 2): right, left


def forward_kinematics(model: RobotModel, state: RobotState) -> FKResult:
    """Poses of all links and positions/velocities of the foot contact points."""
    arrs = pack_model(model)
    angles, coms, _gam, anchors, points = _kernels.fk_state(
        state.coords, state.vels, arrs.geom, arrs.link_com)
    vels = np.empty((4, 2))
    for p in range(4):
        link = int(_kernels.POINT_LINK[p])
        vx, vz = _kernels.point_velocity(points[p, 0], points[p, 1], link,
                                         anchors, state.vels)
        vels[p, 0] = vx
        vels[p, 1] = vz
    return FKResult(
        link_positions=coms,
        link_angles=angles,
        foot_points=points,
        foot_point_vels=vels,
        ankles=np.array([anchors[5], anchors[8]]),
    )


def step_dynamics(model: RobotModel, state: RobotState, actuator_torques,
                  external_contact_forces=None, dt: float = SUBSTEP_DT,
                  gravity: float = 9.81) -> RobotState:
    """Advance one substep under gravity, actuation, joint friction, and
    externally supplied forces at the four foot contact points.

    external_contact_forces: (4, 2) array of (fx, fz) per point, or None.
    Raises SimulationDivergedError if the state leaves the finite range.
    """
    tau = np.asarray(actuator_torques, dtype=np.float64)
    if tau.shape != (NUM_JOINTS,):
        raise ContractViolationError(f"expected {NUM_JOINTS} actuator torques, got {tau.shape}")
    if external_contact_forces is None:
        forces = np.zeros((4, 2))
    else:
        forces = np.asarray(external_contact_forces, dtype=np.float64)
        if forces.shape != (4, 2):
            raise ContractViolationError("external_contact_forces must have shape (4, 2)")
    arrs = pack_model(model)
    q_new, v_new, ok = _kernels.step_explicit(
        state.coords, state.vels, tau, forces,
        arrs.link_mass, arrs.link_com, arrs.link_inertia, arrs.geom,
        arrs.q_lo, arrs.q_hi, arrs.visc, arrs.dry, arrs.slip, gravity, dt)
    if not ok:
        raise SimulationDivergedError("state became non-finite during step_dynamics")
    return RobotState(q_new, v_new, np.clip(tau, -arrs.tau_lim, arrs.tau_lim))
