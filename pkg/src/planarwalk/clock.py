"""Cyclic gait clock: phase variable, policy-facing signal, stance schedule."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_PERIOD = 80
PHASE_OFFSET_LIMIT = 5.0  # timesteps, per-step clip on clock-control actions

# stance schedule (fractions of the cycle): right foot loaded through
# [0.9, 0.5) wrapping, left through [0.4, 1.0); 10% double-support windows
# with linear ramps of width 0.02 centered on each boundary.
_RAMP = 0.02
_RIGHT_KNOTS = ((0.0, 1.0), (0.49, 1.0), (0.51, 0.0), (0.89, 0.0), (0.91, 1.0), (1.0, 1.0))
_LEFT_KNOTS = ((0.0, 0.5), (0.01, 0.0), (0.39, 0.0), (0.41, 1.0), (0.99, 1.0), (1.0, 0.5))
_RX = np.array([k[0] for k in _RIGHT_KNOTS])
_RY = np.array([k[1] for k in _RIGHT_KNOTS])
_LX = np.array([k[0] for k in _LEFT_KNOTS])
_LY = np.array([k[1] for k in _LEFT_KNOTS])
DOUBLE_SUPPORT_THRESHOLD = 0.9


@dataclass
class GaitClock:
    """Integer phase counter in [0, period)."""

    phi: int = 0
    period: int = DEFAULT_PERIOD

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")
        self.phi = int(self.phi) % self.period


def clock_signal(clock: GaitClock) -> tuple[float, float]:
    """(sin, cos) of the cycle fraction, fed to the policy."""
    theta = 2.0 * math.pi * clock.phi / clock.period
    return math.sin(theta), math.cos(theta)


def advance_phase(clock: GaitClock, a_dphi: float = 0.0,
                  clock_control: bool = False) -> GaitClock:
    """Advance the phase by one step, plus a clipped integer offset when the
    policy controls the clock."""
    if clock_control:
        offset = int(round(min(PHASE_OFFSET_LIMIT, max(-PHASE_OFFSET_LIMIT, a_dphi))))
    else:
        offset = 0
    return GaitClock((clock.phi + offset + 1) % clock.period, clock.period)


def phase_coefficients(clock: GaitClock) -> tuple[float, float, bool]:
    """Stance weights (c_right, c_left) and the double-support flag.

    c = 1 means the foot must bear load, c = 0 means it should swing.
    Double support is where both coefficients exceed 0.9.
    """
    s = (clock.phi % clock.period) / clock.period
    c_right = float(np.interp(s, _RX, _RY))
    c_left = float(np.interp(s, _LX, _LY))
    ds = c_right >= DOUBLE_SUPPORT_THRESHOLD and c_left >= DOUBLE_SUPPORT_THRESHOLD
    return c_right, c_left, ds
