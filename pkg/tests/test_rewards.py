import math

import numpy as np
import pytest

from planarwalk.config import RewardScales
from planarwalk.rewards import TOTAL_WEIGHT, RewardBreakdown, compute_reward

NOMINAL_Q = np.array([0.12, -0.24, 0.12] * 2)
SCALES = RewardScales()


def _reward(**overrides):
    kwargs = dict(
        root_xdot=0.0, root_z=0.54, root_pitch=0.0,
        q=NOMINAL_Q.copy(), qdot=np.zeros(6), nominal_q=NOMINAL_Q,
        nominal_root_height=0.54,
        stance_right=1.0, stance_left=1.0,
        grf_norms=(120.0, 120.0), foot_speeds=(0.0, 0.0),
        velocity_ref=0.0, scales=SCALES)
    kwargs.update(overrides)
    return compute_reward(**kwargs)


def test_perfect_stand_scores_total_weight():
    total, terms = _reward()
    assert total == pytest.approx(0.9, abs=1e-12)
    assert TOTAL_WEIGHT == pytest.approx(0.9, abs=1e-12)
    for value in terms.as_tuple():
        assert value == pytest.approx(1.0, abs=1e-12)


def test_swing_foot_force_penalized():
    # 500 N on a swing foot with sigma 200: exp(-(500/200)^2) < 0.05
    _, terms = _reward(stance_right=0.0, grf_norms=(500.0, 0.0))
    assert terms.foot_force < 0.05
    assert terms.foot_force == pytest.approx(math.exp(-6.25), rel=1e-12)


def test_stance_force_not_penalized():
    _, terms = _reward(stance_right=1.0, stance_left=1.0,
                       grf_norms=(500.0, 500.0))
    assert terms.foot_force == pytest.approx(1.0)


def test_forward_velocity_tracking():
    _, terms = _reward(root_xdot=0.3, velocity_ref=0.3)
    assert terms.forward_velocity == pytest.approx(1.0)
    _, terms = _reward(root_xdot=0.0, velocity_ref=0.3)
    assert terms.forward_velocity == pytest.approx(math.exp(-1.0), rel=1e-12)


def test_stance_foot_motion_penalized():
    _, still = _reward(foot_speeds=(0.0, 0.0))
    _, moving = _reward(foot_speeds=(1.0, 1.0))
    assert moving.foot_speed < still.foot_speed
    # swing foot motion is free
    _, swing = _reward(stance_left=0.0, foot_speeds=(0.0, 5.0))
    assert swing.foot_speed == pytest.approx(1.0)


def test_posture_and_qdot_terms_decay():
    _, terms = _reward(q=NOMINAL_Q + 0.5, qdot=np.full(6, 4.0))
    assert terms.nominal_posture < 0.1
    assert terms.joint_velocities < 0.1


def test_reward_bounds_random_inputs():
    rng = np.random.default_rng(0)
    for _ in range(300):
        total, terms = _reward(
            root_xdot=rng.normal(scale=2.0),
            root_z=rng.uniform(0.0, 1.0),
            root_pitch=rng.normal(scale=1.0),
            q=rng.uniform(-1.5, 1.5, 6),
            qdot=rng.normal(scale=5.0, size=6),
            stance_right=rng.uniform(0, 1), stance_left=rng.uniform(0, 1),
            grf_norms=tuple(rng.uniform(0, 600, 2)),
            foot_speeds=tuple(rng.uniform(0, 3, 2)),
            velocity_ref=rng.uniform(0, 0.4))
        assert 0.0 <= total <= 0.9 + 1e-12
        for value in terms.as_tuple():
            assert 0.0 <= value <= 1.0


def test_breakdown_total_matches_weights():
    breakdown = RewardBreakdown(1.0, 0.5, 1.0, 1.0, 0.0, 1.0, 1.0)
    expected = 0.225 + 0.5 * 0.225 + 0.1 + 0.05 + 0.0 + 0.1 + 0.1
    assert breakdown.total() == pytest.approx(expected, abs=1e-12)
