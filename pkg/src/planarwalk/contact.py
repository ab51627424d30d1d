"""Penalty-based soft contact parameterized by a time constant.

The normal direction behaves as a mass-spring-damper with stiffness
k = m_eff / tau_c^2 and damping c = 2*zeta*m_eff/tau_c, where m_eff is the
robot mass split over the currently penetrating points. Small time
constants give stiff ground, large ones a deep, spongy response.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

COMPLIANCE_RANGE = (0.02, 0.4)


@dataclass
class ContactParams:
    """Per-foot contact behavior."""

    time_constant: float = 0.02
    damping_ratio: float = 1.0
    friction_coeff: float = 0.8

    def __post_init__(self):
        if self.time_constant <= 0.0:
            raise ConfigError("time_constant must be positive")
        if self.damping_ratio <= 0.0:
            raise ConfigError("damping_ratio must be positive")
        if self.friction_coeff < 0.0:
            raise ConfigError("friction_coeff must be non-negative")


def contact_gains(time_constant: float, damping_ratio: float, m_eff: float):
    """Spring stiffness and damping for a given effective mass."""
    k = m_eff / (time_constant * time_constant)
    c = 2.0 * damping_ratio * m_eff / time_constant
    return k, c


def contact_force(params: ContactParams, penetration: float, normal_vel: float,
                  tangent_vel: float, m_eff: float, slip_scale: float = 0.02):
    """(normal, tangential) force at one contact point.

    Separated points carry no force; the normal force never goes negative.
    Tangential friction is Coulomb with a tanh-regularized slip zone.
    """
    if m_eff <= 0.0:
        raise ConfigError("m_eff must be positive")
    if penetration <= 0.0:
        return 0.0, 0.0
    k, c = contact_gains(params.time_constant, params.damping_ratio, m_eff)
    normal = k * penetration + c * (-normal_vel)
    if normal < 0.0:
        normal = 0.0
    tangential = -params.friction_coeff * normal * math.tanh(tangent_vel / slip_scale)
    return normal, tangential


def sample_compliance(rng: np.random.Generator,
                      lo: float = COMPLIANCE_RANGE[0],
                      hi: float = COMPLIANCE_RANGE[1]) -> float:
    """Draw one foot's contact time constant uniformly."""
    return float(rng.uniform(lo, hi))


def settle_point_mass(params: ContactParams, mass: float,
                      dt: float = 0.001, duration: float = 6.0,
                      drop_height: float = 0.0) -> float:
    """Integrate a point mass on one contact until rest; return penetration.

    Semi-implicit integration of z'' = -g + F_n/m with m_eff = mass (a single
    contact point carries the whole mass). Used to calibrate compliance
    settings against the analytic spring deflection m*g*tau^2/m_eff.
    """
    g = 9.81
    z = drop_height
    vz = 0.0
    steps = int(round(duration / dt))
    for _ in range(steps):
        pen = -z
        fn, _ft = contact_force(params, pen, vz, 0.0, mass)
        vz += dt * (-g + fn / mass)
        z += dt * vz
    return -z
