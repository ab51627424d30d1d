import numpy as np
import pytest

from planarwalk.config import ModelConfig
from planarwalk.dynamics import forward_kinematics
from planarwalk.errors import ConfigError
from planarwalk.model import (FrictionParams, PDGains, RobotState,
                              build_planar_biped, joint_friction, pd_torque)


def test_mass_bookkeeping_100kg():
    cfg = ModelConfig(total_mass=100.0)
    model = build_planar_biped(cfg)
    assert abs(model.total_mass - 100.0) < 1e-9


def test_default_mass_matches_config_total():
    cfg = ModelConfig()
    model = build_planar_biped(cfg)
    assert abs(model.total_mass - cfg.total_mass) < 1e-9


def test_zero_thigh_length_rejected():
    with pytest.raises(ConfigError):
        build_planar_biped(ModelConfig(thigh_length=0.0))


def test_negative_mass_rejected():
    with pytest.raises(ConfigError):
        build_planar_biped(ModelConfig(total_mass=-5.0))


def test_nominal_root_height_matches_fk():
    # builder computes the height in closed form; the kernel FK must agree
    model = build_planar_biped()
    state = RobotState.at_rest(model)
    fk = forward_kinematics(model, state)
    assert abs(fk.foot_points[:, 1].min()) < 1e-9
    assert model.nominal_root_height > 0


def test_default_gains_match_table():
    model = build_planar_biped()
    assert list(model.gains.kp[:3]) == [200.0, 150.0, 80.0]
    assert list(model.gains.kd[:3]) == [20.0, 15.0, 8.0]


def test_pd_torque_zero_error():
    gains = PDGains(kp=[200.0] * 6, kd=[20.0] * 6)
    q = np.full(6, 0.3)
    tau = pd_torque(gains, q, q, np.zeros(6))
    assert np.all(tau == 0.0)


def test_pd_torque_hand_case():
    # 150 * 0.1 - 15 * 0.2 = 12.0 exactly
    gains = PDGains(kp=[150.0] * 6, kd=[15.0] * 6)
    tau = pd_torque(gains, np.full(6, 0.1), np.zeros(6), np.full(6, 0.2))
    assert tau == pytest.approx(np.full(6, 12.0), abs=0.0)


def test_pd_torque_saturation():
    gains = PDGains(kp=[80.0] * 6, kd=[8.0] * 6)
    tau = pd_torque(gains, np.full(6, 10.0), np.zeros(6), np.zeros(6),
                    torque_limit=np.full(6, 100.0))
    assert np.all(tau == 100.0)


def test_pd_torque_superposition():
    gains = PDGains(kp=[150.0] * 6, kd=[15.0] * 6)
    rng = np.random.default_rng(0)
    for _ in range(50):
        e1, e2 = rng.normal(size=(2, 6))
        v1, v2 = rng.normal(size=(2, 6))
        combined = pd_torque(gains, e1 + e2, np.zeros(6), v1 + v2)
        separate = pd_torque(gains, e1, np.zeros(6), v1) + pd_torque(
            gains, e2, np.zeros(6), v2)
        np.testing.assert_allclose(combined, separate, atol=1e-12)


def test_joint_friction_zero_velocity():
    params = FrictionParams(np.full(6, 2.0), np.full(6, 5.0))
    assert np.all(joint_friction(params, np.zeros(6)) == 0.0)


def test_joint_friction_saturated_dry():
    params = FrictionParams(np.zeros(6), np.full(6, 5.0))
    tau = joint_friction(params, np.full(6, 1e6))
    np.testing.assert_allclose(tau, -5.0, atol=1e-12)


def test_joint_friction_viscous_case():
    params = FrictionParams(np.full(6, 2.0), np.zeros(6))
    tau = joint_friction(params, np.full(6, 1.5))
    np.testing.assert_allclose(tau, -3.0, atol=1e-12)


def test_joint_friction_dissipative():
    params = FrictionParams(np.full(6, 1.3), np.full(6, 4.0))
    rng = np.random.default_rng(1)
    for _ in range(200):
        qdot = rng.normal(scale=3.0, size=6)
        assert np.all(joint_friction(params, qdot) * qdot <= 0.0)


def test_model_copy_is_independent():
    model = build_planar_biped()
    clone = model.copy()
    clone.link_mass[0] += 1.0
    clone.friction.dry_friction[0] = 99.0
    assert model.link_mass[0] != clone.link_mass[0]
    assert model.friction.dry_friction[0] != 99.0


def test_nominal_posture_within_limits():
    model = build_planar_biped()
    assert np.all(model.nominal_posture >= model.q_lo)
    assert np.all(model.nominal_posture <= model.q_hi)
