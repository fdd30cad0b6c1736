import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trapwalker.env import EnvConfig, TrapEnv
from trapwalker.geom import quat_from_axis_angle
from trapwalker.observations import (
    C_DIM, G_DIM, OBS_DIM, P_DIM, S_DIM, LatencyBuffer, NoiseModel, ObsScales,
    apply_standstill, compute_goal_command, joystick_to_fake_goal,
    normalize_contacts,
)
from trapwalker.randomization import randomize_dynamics
from trapwalker.robot import build_robot, default_state
from trapwalker.terrain import flat_terrain


class TestContactNormalization:
    def test_zero_maps_to_minus_one(self):
        assert normalize_contacts(np.zeros(17)).tolist() == [-1.0] * 17

    def test_overload_clips_to_plus_one(self):
        out = normalize_contacts(np.full(17, 150.0))
        assert out.tolist() == [1.0] * 17

    def test_midpoint(self):
        assert normalize_contacts(np.full(17, 50.0)).tolist() == [0.0] * 17

    @given(st.lists(st.floats(0, 100), min_size=2, max_size=17))
    def test_monotone(self, mags):
        mags = np.sort(np.asarray(mags))
        out = normalize_contacts(mags)
        assert (np.diff(out) >= -1e-12).all()

    @given(st.floats(0, 100))
    def test_surjective_onto_range(self, m):
        out = float(normalize_contacts(np.array([m]))[0])
        assert -1.0 <= out <= 1.0
        # affine map is invertible on [0, 100]
        assert m == pytest.approx((out + 1.0) * 50.0, abs=1e-9)


class TestGoalCommand:
    def test_at_goal_zeroed(self):
        model = build_robot()
        st_ = default_state(model, base_pos=(2.0, 3.0, 0.32))
        cmd = compute_goal_command(st_, (2.0, 3.0, 0.0), 4.0)
        assert (cmd.delta_g == 0.0).all()

    def test_standstill_threshold(self):
        assert (apply_standstill(np.array([0.15, 0.0, 0.0])) == 0.0).all()
        assert (apply_standstill(np.array([0.21, 0.0, 0.0])) != 0.0).any()

    def test_yawed_frame_rotation(self):
        # Robot yawed +90 deg, goal 1 m along world x: offset is (0, -1) in
        # the body frame (goal sits to the robot's right).
        model = build_robot()
        st_ = default_state(model, base_pos=(0.0, 0.0, 0.32))
        st_.base_quat = quat_from_axis_angle([0, 0, 1], np.pi / 2)
        cmd = compute_goal_command(st_, (1.0, 0.0, 0.0), 5.0)
        np.testing.assert_allclose(cmd.delta_g, [0.0, -1.0, 0.0], atol=1e-12)

    def test_z_always_zero(self):
        model = build_robot()
        st_ = default_state(model, base_pos=(0.0, 0.0, 0.32))
        cmd = compute_goal_command(st_, (3.0, -2.0, 5.0), 5.0)
        assert cmd.delta_g[2] == 0.0

    def test_remaining_time(self):
        model = build_robot()
        st_ = default_state(model)
        cmd = compute_goal_command(st_, (5.0, 0.0, 0.0), 6.5)
        assert cmd.delta_t == 6.5


class TestJoystick:
    def test_translation_mode_just_above_threshold(self):
        cmd = joystick_to_fake_goal((0.0, 1.0), 0.25, 4.0)
        np.testing.assert_allclose(cmd.delta_g, [0.0, 0.25, 0.0])
        assert cmd.delta_t == 4.0 and cmd.fake

    def test_full_left_turn_command(self):
        cmd = joystick_to_fake_goal((0.0, 1.0), 1.0, 4.0)
        np.testing.assert_allclose(cmd.delta_g, [0.0, 1.0, 0.0])

    def test_zero_distance_standstill(self):
        cmd = joystick_to_fake_goal((1.0, 0.0), 0.0, 3.0)
        assert (cmd.delta_g == 0.0).all()

    def test_below_threshold_standstill(self):
        cmd = joystick_to_fake_goal((1.0, 0.0), 0.15, 3.0)
        assert (cmd.delta_g == 0.0).all()

    def test_direction_normalized(self):
        cmd = joystick_to_fake_goal((0.5, 0.5), 2.0, 3.0)
        assert np.linalg.norm(cmd.delta_g) == pytest.approx(2.0)

    def test_invalid_inputs_rejected(self):
        with pytest.raises(ValueError):
            joystick_to_fake_goal((2.0, 0.0), 1.0, 3.0)
        with pytest.raises(ValueError):
            joystick_to_fake_goal((0.5, 0.0), -1.0, 3.0)


class TestObservationShapes:
    def test_group_dims(self):
        assert (P_DIM, S_DIM, C_DIM, G_DIM) == (42, 4, 17, 4)
        assert OBS_DIM == 67

    def test_env_observation(self):
        env = TrapEnv(build_robot(), flat_terrain(), EnvConfig(), seed=0)
        obs = env.reset()
        assert obs.proprio.shape == (42,)
        assert obs.privileged.shape == (4,)
        assert obs.contacts.shape == (17,)
        assert obs.goal.shape == (4,)
        assert obs.concat().shape == (67,)
        assert (np.abs(obs.contacts) <= 1.0).all()
        assert obs.goal[2] == 0.0  # z component of the offset

    def test_delta_g_z_zero_over_episode(self):
        env = TrapEnv(build_robot(), flat_terrain(), EnvConfig(), seed=1)
        env.reset()
        for _ in range(50):
            obs, _, term, _ = env.step(np.zeros(12))
            assert obs.goal[2] == 0.0


class TestLatency:
    def test_step_signal_delay(self):
        # With latency L the proprio equals the noiseless proprio from t - L.
        cfg = EnvConfig()
        env = TrapEnv(build_robot(), flat_terrain(), cfg, seed=0)
        env.reset()
        delay_steps = 10
        env.latency = LatencyBuffer(delay_steps)
        history = []
        for k in range(30):
            action = np.full(12, 0.5) if k >= 5 else np.zeros(12)
            obs, _, _, _ = env.step(action)
            from trapwalker.observations import build_proprio
            raw_now = build_proprio(env.state, env.model, env.state.last_action, cfg.scales)
            history.append(raw_now)
            expect = history[max(0, len(history) - 1 - delay_steps)]
            np.testing.assert_array_equal(obs.proprio, expect)

    def test_zero_delay_passthrough(self):
        buf = LatencyBuffer(0)
        for i in range(5):
            out = buf.push(np.array([float(i)]))
            assert out[0] == float(i)


class TestNoise:
    def test_zero_amplitudes_identity(self):
        cfg = EnvConfig(noise=NoiseModel(enabled=False))
        env = TrapEnv(build_robot(), flat_terrain(), cfg, seed=0)
        obs1 = env.reset()
        env2 = TrapEnv(build_robot(), flat_terrain(), cfg, seed=0)
        obs2 = env2.reset()
        np.testing.assert_array_equal(obs1.proprio, obs2.proprio)

    def test_sigma_vector_placement(self):
        sig = NoiseModel (enabled=True).proprio_sigma(ObsScales())
        assert sig[0] == 0.05               # gravity
        assert sig[3] == pytest.approx(0.2 * 0.25)   # ang vel, scaled
        assert sig[6] == 0.01               # joint position
        assert sig[18] == pytest.approx(1.5 * 0.05)  # joint velocity, scaled
        assert (sig[30:] == 0).all()        # last action noise free

    def test_empirical_std_matches_sigma(self):
        # 1e5 draws of the joint-position channel within 5% of sigma = 0.01.
        rng = np.random.default_rng(0)
        sig = NoiseModel(enabled=True).proprio_sigma(ObsScales())
        samples = sig[6] * rng.standard_normal(100_000)
        assert np.std(samples) == pytest.approx(0.01, rel=0.05)


class TestRandomization:
    def test_ranges(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            d = randomize_dynamics(rng, enabled=True)
            assert 0.0 <= d.added_mass <= 3.0
            assert -0.2 <= d.com_offset[0] <= 0.2
            assert -0.1 <= d.com_offset[1] <= 0.1
            assert -0.05 <= d.com_offset[2] <= 0.05
            assert 0.0 <= d.friction <= 2.0
            assert (0.5 <= d.init_joint_scale).all() and (d.init_joint_scale <= 1.5).all()
            assert (np.abs(d.init_base_vel) <= 1.0).all()
            assert (0.9 <= d.motor_strength).all() and (d.motor_strength <= 1.1).all()
            assert 0.2 <= d.latency_s <= 0.4

    def test_disabled_nominal(self):
        d = randomize_dynamics(np.random.default_rng(0), enabled=False, nominal_friction=1.0)
        assert d.added_mass == 0.0
        assert d.friction == 1.0
        assert (d.motor_strength == 1.0).all()
        assert d.latency_s == 0.0


class TestGoalSampling:
    def test_annulus_distribution(self):
        from trapwalker.env import sample_goal
        rng = np.random.default_rng(0)
        cfg = EnvConfig()
        terrain = flat_terrain(40.0, 40.0)
        spawn = np.array([20.0, 20.0])
        dists = []
        for _ in range(1000):
            goal = sample_goal(rng, terrain, None, spawn, cfg)
            dists.append(np.linalg.norm(goal[:2] - spawn))
        dists = np.asarray(dists)
        assert (dists >= 1.5 - 1e-9).all() and (dists <= 5.0 + 1e-9).all()
        # area-uniform: CDF of r^2 is linear; median of r^2 near midpoint
        mid = np.median(dists ** 2)
        assert mid == pytest.approx((1.5 ** 2 + 5.0 ** 2) / 2, rel=0.1)

    def test_same_seed_same_goal(self):
        from trapwalker.env import sample_goal
        cfg = EnvConfig()
        terrain = flat_terrain(40.0, 40.0)
        g1 = sample_goal(np.random.default_rng(5), terrain, None, (20.0, 20.0), cfg)
        g2 = sample_goal(np.random.default_rng(5), terrain, None, (20.0, 20.0), cfg)
        np.testing.assert_array_equal(g1, g2)
