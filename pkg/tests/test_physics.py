import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trapwalker.geom import quat_from_axis_angle
from trapwalker.physics import (
    Termination, check_termination, contact_resolve, pd_joint_step, physics_step,
)
from trapwalker.robot import FOOT_LINKS, build_robot, default_state
from trapwalker.terrain import flat_terrain


@pytest.fixture(scope="module")
def model():
    return build_robot()


@pytest.fixture(scope="module")
def terrain():
    return flat_terrain()


def settle(model, terrain, height=0.32, steps=150):
    st = default_state(model, base_pos=(10.0, 10.0, height))
    for _ in range(steps):
        st, records = physics_step(st, model.q_default, model, terrain)
    return st, records


class TestBuildRobot:
    def test_default_pd_gains(self, model):
        assert model.kp == 40.0
        assert model.kd == 0.5

    def test_zero_thigh_rejected(self):
        with pytest.raises(ValueError):
            build_robot(thigh_length=0.0)

    def test_negative_dims_rejected(self):
        with pytest.raises(ValueError):
            build_robot(base_dims=(0.4, -0.1, 0.1))

    def test_unit_motor_strength_is_identity(self, model, terrain):
        scaled = build_robot(motor_strength=tuple([1.0] * 12))
        st = default_state(model)
        q1, qd1 = pd_joint_step(st, model.q_default + 0.1, model, 0.005)
        q2, qd2 = pd_joint_step(st, model.q_default + 0.1, scaled, 0.005)
        np.testing.assert_array_equal(q1, q2)
        np.testing.assert_array_equal(qd1, qd2)


class TestPdJointStep:
    def test_equilibrium(self, model):
        st = default_state(model)
        q, qdot = pd_joint_step(st, st.q, model, 0.005)
        np.testing.assert_array_equal(q, st.q)
        np.testing.assert_array_equal(qdot, np.zeros(12))

    def test_hand_evaluated_step(self, model):
        # torque = 40*(1-0) - 0.5*0 = 40; qddot = (40 - 3*0)/0.08 = 500
        # qdot' = 500*0.005 = 2.5; q' = 2.5*0.005 = 0.0125
        st = default_state(model)
        st.q = np.zeros(12)
        st.qdot = np.zeros(12)
        q, qdot = pd_joint_step(st, np.ones(12), model, 0.005)
        np.testing.assert_allclose(qdot, 2.5)
        np.testing.assert_allclose(q, 0.0125)

    def test_hand_evaluated_step_unit_inertia(self):
        # With unit reflected inertia and no transmission damping the classic
        # form holds: qdot' = 0.2, q' = 0.001.
        model = build_robot(joint_inertia=1.0, joint_damping=0.0)
        st = default_state(model)
        st.q = np.zeros(12)
        st.qdot = np.zeros(12)
        q, qdot = pd_joint_step(st, np.ones(12), model, 0.005)
        np.testing.assert_allclose(qdot, 0.2)
        np.testing.assert_allclose(q, 0.001)

    def test_zero_strength_coasts(self):
        # No motor torque: velocity decays under transmission damping only.
        model = build_robot(motor_strength=tuple([0.0] * 12))
        st = default_state(model)
        st.qdot = np.full(12, 2.0)
        q, qdot = pd_joint_step(st, st.q + 10.0, model, 0.005)
        assert (qdot > 0).all() and (qdot < st.qdot).all()
        expected = 2.0 * (1.0 - 0.005 * model.joint_damping / model.joint_inertia)
        np.testing.assert_allclose(qdot, expected)

    def test_bad_dt_rejected(self, model):
        with pytest.raises(ValueError):
            pd_joint_step(default_state(model), np.zeros(12), model, 0.0)


class TestContactResolve:
    def test_airborne_no_contacts(self, model, terrain):
        st = default_state(model, base_pos=(10.0, 10.0, 1.0 + 0.32))
        assert contact_resolve(st, model, terrain) == []

    def test_static_penetration_spring_only(self, model, terrain):
        # Foot resting depth d with zero velocity: magnitude k_p * d.
        from trapwalker.robot import leg_points_local

        st = default_state(model)
        _, feet = leg_points_local(model, model.q_default)
        depth = 0.004
        st.base_pos[2] = -feet[0, 2] + model.foot_radius - depth
        records = contact_resolve(st, model, terrain)
        feet = [r for r in records if r.link_id in FOOT_LINKS]
        assert len(feet) == 4
        for rec in feet:
            assert rec.force[2] == pytest.approx(model.contact_stiffness * depth, rel=1e-6)

    def test_magnitude_equals_norm(self, model, terrain):
        st, records = settle(model, terrain, height=0.4)
        assert records
        for rec in records:
            assert rec.magnitude == pytest.approx(np.linalg.norm(rec.force), abs=1e-9)

    def test_settled_weight_balance(self, model, terrain):
        st, records = settle(model, terrain)
        total_up = sum(r.force[2] for r in records)
        weight = model.total_mass * model.gravity
        assert abs(total_up - weight) / weight < 0.02


class TestPhysicsStep:
    def test_free_body_at_rest_unchanged(self, terrain):
        model = build_robot(gravity=0.0)
        st = default_state(model, base_pos=(10.0, 10.0, 2.0))
        new, records = physics_step(st, model.q_default, model, terrain)
        assert records == []
        np.testing.assert_array_equal(new.base_pos, st.base_pos)
        np.testing.assert_array_equal(new.q, st.q)
        assert new.episode_time == pytest.approx(st.episode_time + 0.02)

    def test_bitwise_determinism(self, model, terrain):
        runs = []
        for _ in range(2):
            st = default_state(model, base_pos=(10.0, 10.0, 0.4))
            action = model.q_default + 0.05
            for _ in range(1000):
                st, _ = physics_step(st, action, model, terrain)
            runs.append(st)
        a, b = runs
        assert (a.base_pos == b.base_pos).all()
        assert (a.base_quat == b.base_quat).all()
        assert (a.base_lin_vel == b.base_lin_vel).all()
        assert (a.q == b.q).all()
        assert (a.qdot == b.qdot).all()

    def test_drop_settles_into_standing_band(self, model, terrain):
        st, _ = settle(model, terrain, height=0.5, steps=150)
        assert 0.25 <= st.base_pos[2] <= 0.35

    def test_quaternion_stays_unit(self, model, terrain):
        st = default_state(model, base_pos=(10.0, 10.0, 0.4))
        st.base_ang_vel = np.array([1.0, -2.0, 0.5])
        for _ in range(200):
            st, _ = physics_step(st, model.q_default, model, terrain)
            assert abs(np.linalg.norm(st.base_quat) - 1.0) < 1e-6

    def test_energy_bounded_over_ten_seconds(self, model, terrain):
        st = default_state(model, base_pos=(10.0, 10.0, 0.45))
        m = model.total_mass
        e0 = m * model.gravity * st.base_pos[2]
        worst = 0.0
        for _ in range(500):
            st, _ = physics_step(st, model.q_default, model, terrain)
            ke = (0.5 * m * st.base_lin_vel @ st.base_lin_vel
                  + 0.5 * st.base_ang_vel @ (model.inertia_diag * st.base_ang_vel))
            worst = max(worst, ke)
        assert worst <= 1.05 * e0

    def test_feet_air_timers(self, model, terrain):
        st = default_state(model, base_pos=(10.0, 10.0, 0.6))
        prev = st.feet_air_time.copy()
        for _ in range(250):
            st, records = physics_step(st, model.q_default, model, terrain)
            contact_links = {r.link_id for r in records}
            for leg in range(4):
                if FOOT_LINKS[leg] in contact_links:
                    assert st.feet_air_time[leg] == 0.0
                else:
                    assert st.feet_air_time[leg] > prev[leg]
            prev = st.feet_air_time.copy()
        assert (st.feet_air_time == 0.0).all()  # standing at the end


class TestTermination:
    def test_running(self, model, terrain):
        st = default_state(model, base_pos=(10.0, 10.0, 0.32))
        assert check_termination(st, terrain) == Termination.Running

    def test_upside_down_fell(self, model, terrain):
        st = default_state(model, base_pos=(10.0, 10.0, 0.32))
        st.base_quat = quat_from_axis_angle([1.0, 0.0, 0.0], np.pi)
        assert check_termination(st, terrain) == Termination.Fell

    def test_timeout_at_episode_length(self, model, terrain):
        st = default_state(model, base_pos=(10.0, 10.0, 0.32))
        st.episode_time = 8.0
        assert check_termination(st, terrain, episode_length=8.0) == Termination.Timeout

    def test_out_of_bounds(self, model, terrain):
        st = default_state(model, base_pos=(100.0, 10.0, 0.32))
        assert check_termination(st, terrain) == Termination.OutOfBounds


@settings(max_examples=25, deadline=None)
@given(
    roll=st.floats(-0.3, 0.3), pitch=st.floats(-0.3, 0.3),
    drop=st.floats(0.33, 0.6),
)
def test_contact_records_consistent_under_random_poses(roll, pitch, drop):
    model = build_robot()
    terrain = flat_terrain()
    s = default_state(model, base_pos=(10.0, 10.0, drop))
    tilt = quat_from_axis_angle([1.0, 0.0, 0.0], roll)
    s.base_quat = quat_from_axis_angle([0.0, 1.0, 0.0], pitch)
    for _ in range(50):
        s, records = physics_step(s, model.q_default, model, terrain)
        for rec in records:
            assert rec.magnitude == pytest.approx(np.linalg.norm(rec.force), abs=1e-9)
            assert rec.magnitude >= 0.0
        assert np.isfinite(s.q).all() and np.isfinite(s.qdot).all()
