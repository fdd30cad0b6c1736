"""Fixed-step penalty-contact dynamics for the reduced-order robot.

Each 0.02 s control step runs n_substeps semi-implicit Euler substeps:
kinematic PD joints first, then contact forces at the new joint pose, then
Newton-Euler integration of the rigid base under the aggregated wrench.

The core kernel is batched over environments; the single-robot entry point
runs it with a batch of one, so both paths share the same arithmetic.
"""

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .geom import projected_gravity, quat_integrate_batch, quat_to_matrix_batch
from .robot import (
    _PTS_PER_LEG,
    FOOT_LINKS,
    NUM_LEGS,
    RobotModel,
    RobotState,
    leg_points_local,
    sample_points_batch,
)
from .terrain import Terrain, TrapKind, pit_contains, trap_penetrations

GROUND_SOURCE = -1


@dataclass
class ContactRecord:
    link_id: int
    force: np.ndarray        # world frame, N
    magnitude: float
    point: np.ndarray        # world frame, m
    source_kind: int         # 0 ground, else TrapKind value
    source_id: int           # trap label_id, -1 for ground


class Termination(IntEnum):
    Running = 0
    Fell = 1
    OutOfBounds = 2
    Timeout = 3


def pd_joint_step(state: RobotState, action_targets, model: RobotModel, dt: float):
    """One semi-implicit Euler step of the kinematic PD joints."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    targets = np.asarray(action_targets, dtype=float)
    if targets.shape != (12,):
        raise ValueError("action_targets must have 12 entries")
    strength = np.asarray(model.motor_strength)
    torque = strength * (model.kp * (targets - state.q) - model.kd * state.qdot)
    qddot = (torque - model.joint_damping * state.qdot) / model.joint_inertia
    qdot = state.qdot + dt * qddot
    q = state.q + dt * qdot
    return q, qdot


class _Batch:
    """Struct-of-arrays view over a set of robot states plus per-env params."""

    def __init__(self, states, models, terrain: Terrain):
        n = len(states)
        self.n = n
        self.terrain = terrain
        self.pos = np.stack([s.base_pos for s in states])
        self.quat = np.stack([s.base_quat for s in states])
        self.lin = np.stack([s.base_lin_vel for s in states])
        self.ang = np.stack([s.base_ang_vel for s in states])
        self.q = np.stack([s.q for s in states])
        self.qd = np.stack([s.qdot for s in states])
        m0 = models[0]
        self.geometry = m0
        self.kp, self.kd = m0.kp, m0.kd
        self.strength = np.stack([np.asarray(m.motor_strength) for m in models])
        self.mass = np.array([m.total_mass for m in models])
        self.inertia = np.stack([m.inertia_diag for m in models])
        self.com = np.stack([m.com_offset_vec for m in models])
        self.friction = np.array([m.friction_coeff for m in models])
        self.radii = m0.point_radii
        self.link_ids = m0.point_link_ids
        self.anchor = np.stack([s.contact_anchor for s in states])
        self.anchor_active = np.stack([s.anchor_active for s in states])
        self.nearby = [
            terrain.nearby_traps(s.base_pos[0], s.base_pos[1], 2.0) for s in states
        ]


def _batch_forces(batch: _Batch, points, vels, model: RobotModel):
    """Penalty forces for all (env, sphere) pairs.

    Returns (forces, contact_points, source_kind, source_id, active), each
    shaped (N, 32, ...). One dominant source per sphere: ground first, then
    the deepest-penetrating trap.
    """
    n, n_pts = points.shape[:2]
    terrain = batch.terrain
    flat_xy = points[..., :2].reshape(n * n_pts, 2)
    if terrain.traps:
        ground = np.empty((n, n_pts))
        for i in range(n):
            ground[i] = terrain.ground_heights(points[i, :, :2], nearby=batch.nearby[i])
    else:
        ground = terrain.base_heights(flat_xy).reshape(n, n_pts)

    best_depth = ground + batch.radii - points[..., 2]
    np.maximum(best_depth, 0.0, out=best_depth)
    normals = np.zeros((n, n_pts, 3))
    normals[..., 2] = best_depth > 0
    source_kind = np.zeros((n, n_pts), dtype=int)
    source_id = np.full((n, n_pts), GROUND_SOURCE, dtype=int)

    for i in range(n):
        for trap in batch.nearby[i]:
            if trap.kind == TrapKind.Pit:
                hit = (best_depth[i] > 0) & pit_contains(trap, points[i, :, :2])
                source_kind[i][hit] = int(TrapKind.Pit)
                source_id[i][hit] = trap.label_id
            depth, normal, active = trap_penetrations(trap, points[i], batch.radii)
            deeper = active & (depth > best_depth[i])
            best_depth[i][deeper] = depth[deeper]
            normals[i][deeper] = normal[deeper]
            source_kind[i][deeper] = int(trap.kind)
            source_id[i][deeper] = trap.label_id

    active = best_depth > 0
    forces = np.zeros((n, n_pts, 3))
    if active.any():
        d = np.minimum(best_depth, model.max_penetration)
        v_n = np.einsum("npk,npk->np", vels, normals)
        f_n = np.maximum(0.0, model.contact_stiffness * d - model.contact_damping * v_n)
        np.minimum(f_n, model.max_contact_force, out=f_n)
        f_n *= active
        limit = np.maximum(batch.friction[:, None] * f_n, 1e-9)
        v_t = vels - v_n[..., None] * normals

        # Ground-like contacts (normal near vertical) get stick-slip friction:
        # an anchor spring resists horizontal motion up to the Coulomb limit,
        # then the anchor drags. Lateral trap contacts use a viscous clamp.
        grounded = active & (normals[..., 2] > 0.7)
        fresh = grounded & ~batch.anchor_active
        batch.anchor[fresh] = points[fresh][:, :2]
        stretch = points[..., :2] - batch.anchor
        f_t2 = -model.tangential_stiffness * stretch - model.tangential_damping * v_t[..., :2]
        ft_mag = np.sqrt(np.einsum("npk,npk->np", f_t2, f_t2))
        over = ft_mag > limit
        scale = np.where(over, limit / np.maximum(ft_mag, 1e-9), 1.0)
        f_t2 = f_t2 * scale[..., None]
        slip = grounded & over
        dragged = points[..., :2] + f_t2 / model.tangential_stiffness
        batch.anchor[slip] = dragged[slip]
        batch.anchor_active = grounded

        lateral = active & ~grounded
        vt_mag = np.sqrt(np.einsum("npk,npk->np", v_t, v_t))
        visc = np.minimum(model.tangential_damping * vt_mag, limit)
        visc_scale = np.where(vt_mag > 1e-9, visc / np.maximum(vt_mag, 1e-9), 0.0)

        forces = f_n[..., None] * normals
        forces[..., 0] += np.where(grounded, f_t2[..., 0], 0.0)
        forces[..., 1] += np.where(grounded, f_t2[..., 1], 0.0)
        forces -= np.where(lateral, visc_scale, 0.0)[..., None] * v_t
    else:
        batch.anchor_active &= False
    contact_pts = points - batch.radii[None, :, None] * normals
    return forces, contact_pts, source_kind, source_id, active


def _aggregate(link_ids, forces, points, source_kind, source_id, active):
    records = []
    groups = {}
    for i in np.nonzero(active)[0]:
        groups.setdefault((int(link_ids[i]), int(source_id[i]), int(source_kind[i])), []).append(i)
    for (link, sid, skind), idxs in sorted(groups.items()):
        f = forces[idxs].sum(axis=0)
        mags = np.linalg.norm(forces[idxs], axis=1)
        w = mags / max(mags.sum(), 1e-12)
        records.append(ContactRecord(
            link_id=link, force=f, magnitude=float(np.linalg.norm(f)),
            point=(w[:, None] * points[idxs]).sum(axis=0),
            source_kind=skind, source_id=sid,
        ))
    return records


def physics_step_batch(states, action_targets, models, terrain: Terrain):
    """Advance a batch of robots one control step, mutating the states.

    Returns (per-env contact records from the final substep, (N, 4, 3) world
    foot positions).
    """
    model = models[0]
    dt_sub = model.dt_control / model.n_substeps
    batch = _Batch(states, models, terrain)
    targets = np.asarray(action_targets, dtype=float).reshape(batch.n, 12)
    gravity = np.array([0.0, 0.0, -model.gravity])

    records_out = None
    inv_j = 1.0 / model.joint_inertia
    for sub in range(model.n_substeps):
        torque = batch.strength * (batch.kp * (targets - batch.q) - batch.kd * batch.qd)
        batch.qd += dt_sub * (torque - model.joint_damping * batch.qd) * inv_j
        batch.q += dt_sub * batch.qd

        rot = quat_to_matrix_batch(batch.quat)
        points, vels = sample_points_batch(
            model, batch.q, batch.qd, batch.pos, rot, batch.lin, batch.ang)
        forces, pts, skind, sid, active = _batch_forces(batch, points, vels, model)

        f_total = np.einsum("npk->nk", forces)
        com_world = batch.pos + np.einsum("nij,nj->ni", rot, batch.com)
        arm = pts - com_world[:, None, :]
        tau_world = np.einsum("npk->nk", np.cross(arm, forces))
        accel = gravity + f_total / batch.mass[:, None]
        tau_body = np.einsum("nji,nj->ni", rot, tau_world)
        iw = batch.inertia * batch.ang
        gyro = np.cross(batch.ang, iw)
        batch.ang = np.clip(batch.ang + dt_sub * (tau_body - gyro) / batch.inertia,
                            -model.max_ang_vel, model.max_ang_vel)
        batch.quat = quat_integrate_batch(batch.quat, batch.ang, dt_sub)
        batch.lin = np.clip(batch.lin + dt_sub * accel,
                            -model.max_lin_vel, model.max_lin_vel)
        batch.pos = batch.pos + dt_sub * batch.lin

        if sub == model.n_substeps - 1:
            records_out = [
                _aggregate(batch.link_ids, forces[i], pts[i], skind[i], sid[i], active[i])
                for i in range(batch.n)
            ]
            foot_world = points[:, 8 + _PTS_PER_LEG - 1::_PTS_PER_LEG].copy()

    foot_positions = foot_world
    for i, s in enumerate(states):
        s.base_pos = batch.pos[i]
        s.base_quat = batch.quat[i]
        s.base_lin_vel = batch.lin[i]
        s.base_ang_vel = batch.ang[i]
        s.q = batch.q[i]
        s.qdot = batch.qd[i]
        s.contact_anchor = batch.anchor[i]
        s.anchor_active = batch.anchor_active[i]
        contact_links = {rec.link_id for rec in records_out[i]}
        for leg in range(NUM_LEGS):
            if FOOT_LINKS[leg] in contact_links:
                s.feet_air_time[leg] = 0.0
            else:
                s.feet_air_time[leg] += model.dt_control
        s.episode_time += model.dt_control
    return records_out, foot_positions


def physics_step(state: RobotState, action_targets, model: RobotModel, terrain: Terrain):
    """Advance one robot one 0.02 s control step.

    Returns (new state, last-substep contact records); the input state is
    left untouched.
    """
    s = state.copy()
    records, _ = physics_step_batch([s], np.asarray(action_targets)[None, :], [model], terrain)
    return s, records[0]


def contact_resolve(state: RobotState, model: RobotModel, terrain: Terrain):
    """Aggregated contact records, one per (link, source) pair."""
    batch = _Batch([state], [model], terrain)
    rot = quat_to_matrix_batch(batch.quat)
    points, vels = sample_points_batch(
        model, batch.q, batch.qd, batch.pos, rot, batch.lin, batch.ang)
    forces, pts, skind, sid, active = _batch_forces(batch, points, vels, model)
    return _aggregate(batch.link_ids, forces[0], pts[0], skind[0], sid[0], active[0])


def foot_positions_world(model: RobotModel, state: RobotState) -> np.ndarray:
    rot = quat_to_matrix_batch(state.base_quat[None, :])[0]
    _, feet = leg_points_local(model, state.q)
    return state.base_pos + feet @ rot.T


def check_termination(state: RobotState, terrain: Terrain, episode_length: float = 8.0) -> Termination:
    """Rolled over, out of the terrain, out of time, or still running."""
    if projected_gravity(state.base_quat)[2] > -0.1:
        return Termination.Fell
    if not terrain.in_bounds(state.base_pos[0], state.base_pos[1]):
        return Termination.OutOfBounds
    if state.episode_time >= episode_length - 1e-9:
        return Termination.Timeout
    return Termination.Running
