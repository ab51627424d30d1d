import dataclasses

import numpy as np
import pytest

from planarwalk.clock import GaitClock
from planarwalk.config import Config
from planarwalk.env import (DIVERGED, FALL, OBS_DIM, SELF_COLLISION, Mode,
                            ModeCommand, WalkingEnv, apply_mode_proposal,
                            check_termination, propose_mode, randomize_dynamics,
                            switch_mode)
from planarwalk.errors import ContractViolationError
from planarwalk.model import RobotState, build_planar_biped


def _flat_config(**env_overrides):
    cfg = Config()
    if env_overrides:
        cfg.env = dataclasses.replace(cfg.env, **env_overrides)
    return cfg


def _randomized_config(**env_overrides):
    return _flat_config(curriculum="randomized", **env_overrides)


def test_reset_observation_layout():
    env = WalkingEnv(_flat_config(), seed=0)
    obs = env.reset()
    assert obs.shape == (OBS_DIM,)
    model = env.default_model
    np.testing.assert_array_equal(obs[2:8], model.nominal_posture)  # noise off
    np.testing.assert_array_equal(obs[8:14], 0.0)
    np.testing.assert_array_equal(obs[14:20], 0.0)
    np.testing.assert_array_equal(obs[20:23], [0.0, 0.0, 1.0])  # Standing
    assert obs[23] == 0.0
    assert obs[24] == pytest.approx(0.0)  # sin at phi=0
    assert obs[25] == pytest.approx(1.0)  # cos at phi=0


def test_init_noise_perturbs_posture():
    env = WalkingEnv(_flat_config(init_noise=0.005), seed=1)
    obs = env.reset()
    q = obs[2:8]
    assert np.any(q != env.default_model.nominal_posture)
    assert np.all(np.abs(q - env.default_model.nominal_posture) <= 0.005)


def test_zero_action_stands_full_episode():
    env = WalkingEnv(_flat_config(), seed=2)
    env.reset()
    done = False
    steps = 0
    while not done:
        obs, reward, done, info = env.step(np.zeros(6))
        steps += 1
        assert 0.0 <= reward <= 0.9 + 1e-12
    assert steps == 400
    assert info["termination"] == "timeout"
    assert info["timeout"]


def test_action_contract_violations():
    env = WalkingEnv(_flat_config(), seed=3)
    env.reset()
    with pytest.raises(ContractViolationError):
        env.step(np.zeros(7))
    with pytest.raises(ContractViolationError):
        env.step(np.full(6, np.nan))


def test_clock_control_env_takes_seven_actions():
    env = WalkingEnv(_flat_config(clock_control=True), seed=4)
    env.reset()
    with pytest.raises(ContractViolationError):
        env.step(np.zeros(6))
    _obs, _r, _d, info = env.step(np.zeros(7))
    assert info["a_dphi"] == 0.0
    # saturated clock action advances by at most +5 extra steps
    _obs, _r, _d, info = env.step(np.concatenate([np.zeros(6), [50.0]]))
    assert abs(info["a_dphi"]) <= 5.0


def test_observation_dim_constant_across_resets():
    env = WalkingEnv(_randomized_config(), seed=5)
    for _ in range(3):
        obs = env.reset()
        assert obs.shape == (OBS_DIM,)
        obs, _, _, _ = env.step(np.zeros(6))
        assert obs.shape == (OBS_DIM,)


def test_q_des_clamped_to_joint_limits():
    env = WalkingEnv(_flat_config(), seed=6)
    env.reset()
    for _ in range(40):
        env.step(np.ones(6))  # pushes the knee toward its upper limit
        q = env.state.q
        assert np.all(q <= env.model.q_hi + 1e-9)
        assert np.all(q >= env.model.q_lo - 1e-9)


def test_fixed_clock_phase_sequence_is_rigid():
    env = WalkingEnv(_flat_config(), seed=7)
    env.reset()
    phis = []
    for t in range(200):
        _, _, done, info = env.step(np.zeros(6))
        phis.append(info["phi"])
        if done:
            break
    assert phis == [t % 80 for t in range(len(phis))]


def test_episode_trace_bitwise_deterministic():
    def run(seed):
        env = WalkingEnv(_randomized_config(), seed=seed)
        obs = env.reset()
        trace = [obs]
        rng = np.random.default_rng(99)
        for _ in range(150):
            obs, r, done, _ = env.step(rng.uniform(-0.2, 0.2, 6))
            trace.append(np.concatenate([obs, [r, float(done)]]))
            if done:
                break
        return np.concatenate(trace)

    a = run(42)
    b = run(42)
    assert np.array_equal(a, b)


def test_flat_curriculum_forces_randomization_off():
    env = WalkingEnv(_flat_config(randomize_terrain=True,
                                  randomize_compliance=True,
                                  randomize_dynamics=True), seed=8)
    assert not env.cfg.randomize_terrain
    assert not env.cfg.randomize_compliance
    assert not env.cfg.randomize_dynamics
    assert env.cfg.randomize_modes
    assert not env.field.enabled


def test_randomized_reset_samples_compliance_per_foot():
    env = WalkingEnv(_randomized_config(), seed=9)
    env.reset()
    assert 0.02 <= env.tau_c[0] <= 0.4
    assert 0.02 <= env.tau_c[1] <= 0.4
    assert env.tau_c[0] != env.tau_c[1]


def test_reset_places_feet_on_terrain():
    env = WalkingEnv(_randomized_config(), seed=10)
    env.reset()
    from planarwalk.dynamics import forward_kinematics
    fk = forward_kinematics(env.model, env.state)
    for x, z in fk.foot_points:
        assert z >= env._terrain_height(x) - 1e-9


# -- mode switching ----------------------------------------------------------


def test_standing_transition_gated_outside_double_support():
    current = ModeCommand(Mode.STANDING, 0.0)
    proposal = ModeCommand(Mode.FORWARD, 0.3)
    cmd, pending = apply_mode_proposal(current, proposal, in_double_support=False)
    assert cmd.mode == Mode.STANDING
    assert pending is proposal
    cmd, pending = apply_mode_proposal(current, proposal, in_double_support=True)
    assert cmd.mode == Mode.FORWARD
    assert pending is None


def test_non_standing_transition_immediate():
    current = ModeCommand(Mode.INPLACE, 0.0)
    proposal = ModeCommand(Mode.FORWARD, 0.2)
    cmd, pending = apply_mode_proposal(current, proposal, in_double_support=False)
    assert cmd.mode == Mode.FORWARD
    assert cmd.reference == 0.2
    assert pending is None


def test_propose_mode_reference_ranges():
    rng = np.random.default_rng(11)
    for _ in range(200):
        cmd = propose_mode(rng)
        if cmd.mode == Mode.FORWARD:
            assert 0.1 <= cmd.reference <= 0.4
        else:
            assert cmd.reference == 0.0


def test_switch_rate_matches_mean_interval():
    # p = 1/200 per step (~2 proposals per 400-step episode); a third of
    # proposals re-draw the current mode, so visible changes ~= 200 * 2/3
    rng = np.random.default_rng(12)
    clock = GaitClock(30, 80)  # single support: Standing gate stays closed
    switches = 0
    current = ModeCommand(Mode.INPLACE, 0.0)
    for _ in range(40_000):
        new, pending = switch_mode(rng, clock, current, None)
        if new.mode != current.mode or pending is not None:
            switches += 1
        current = ModeCommand(Mode.INPLACE, 0.0)
    assert 95 < switches < 175  # ~133 expected


def test_pending_command_applies_at_double_support():
    env = WalkingEnv(_flat_config(randomize_modes=False), seed=13)
    env.reset()
    env.set_command(Mode.FORWARD, 0.3)  # phi=0 is outside double support
    assert env.command.mode == Mode.STANDING
    assert env.pending_command is not None
    for _ in range(80):
        env.step(np.zeros(6))
        if env.command.mode == Mode.FORWARD:
            break
    assert env.command.mode == Mode.FORWARD


# -- dynamics randomization ---------------------------------------------------


def test_randomize_dynamics_ranges():
    model = build_planar_biped()
    rng = np.random.default_rng(14)
    for _ in range(300):
        out = randomize_dynamics(model, rng)
        assert np.all(out.friction.viscous_damping >= 0.2)
        assert np.all(out.friction.viscous_damping <= 5.0)
        assert np.all(out.friction.dry_friction >= 2.0)
        assert np.all(out.friction.dry_friction <= 8.0)
        ratio = out.link_mass / model.link_mass
        assert np.all(ratio >= 0.95) and np.all(ratio <= 1.05)
        shift = np.abs(out.link_com - model.link_com)
        assert np.all(shift <= 0.01)


def test_randomize_dynamics_never_compounds():
    model = build_planar_biped()
    baseline = model.link_mass.copy()
    rng = np.random.default_rng(15)
    for _ in range(50):
        randomize_dynamics(model, rng)
    np.testing.assert_array_equal(model.link_mass, baseline)


def test_compliance_event_rate():
    env = WalkingEnv(_randomized_config(), seed=16)
    env.reset()
    changes = 0
    prev = env.tau_c.copy()
    for _ in range(2000):
        _, _, done, _ = env.step(np.zeros(6))
        if not np.array_equal(env.tau_c, prev):
            changes += 1
            prev = env.tau_c.copy()
        if done:
            prev = env.tau_c.copy()  # reset resamples too; don't count it
            env.reset()
            prev = env.tau_c.copy()
    # p = 1/20 per step: ~100 expected over 2000 steps
    assert 60 < changes < 150


def test_terrain_never_moves_during_double_support():
    env = WalkingEnv(_randomized_config(terrain_move_interval=0.075), seed=17)
    env.reset()
    env.set_command(Mode.INPLACE, 0.0)
    violations = 0
    moves = 0
    for _ in range(1500):
        before = (env.field.x_offset, env.field.z_offset)
        ds_mode_before = env.command.mode
        _, _, done, _ = env.step(np.zeros(6))
        after = (env.field.x_offset, env.field.z_offset)
        if after != before:
            moves += 1
            c_r, c_l, ds = env._effective_coefficients()
            if ds:
                violations += 1
        if done:
            env.reset()
            env.set_command(Mode.INPLACE, 0.0)
    assert moves > 10
    assert violations == 0


# -- termination --------------------------------------------------------------


def test_termination_nominal_stand_is_healthy():
    model = build_planar_biped()
    assert check_termination(RobotState.at_rest(model), model) is None


def test_termination_fall_on_collapsed_posture():
    # legs folded: the lowest foot point comes within 0.6x nominal of the root
    model = build_planar_biped()
    q = np.array([1.3, -2.1, 1.0] * 2)
    state = RobotState.at_rest(model, q=q)
    assert check_termination(state, model) == FALL


def test_termination_diverged_on_nan():
    model = build_planar_biped()
    state = RobotState.at_rest(model)
    state.vels[4] = np.nan
    assert check_termination(state, model) == DIVERGED


def test_termination_self_collision_on_crossed_legs():
    # hips crossed > 1 rad while both feet occupy the same ground interval
    model = build_planar_biped()
    q = np.array([0.8, -1.6, 0.8, -0.3, 0.0, 0.3])
    state = RobotState.at_rest(model, q=q)
    assert check_termination(state, model) == SELF_COLLISION


def test_symmetric_stand_not_self_collision():
    # both feet co-located (virtual side-by-side) is the nominal stance
    model = build_planar_biped()
    assert check_termination(RobotState.at_rest(model), model) is None
