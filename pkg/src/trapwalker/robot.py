"""Reduced-order quadruped: rigid base, four massless 3-DOF kinematic legs.

Link set is 17 entries (base + hip/thigh/calf/foot per leg) so contact
observations and ablation masks can address every link individually.
"""

from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np

from .geom import quat_to_matrix

NUM_JOINTS = 12
NUM_LEGS = 4
NUM_LINKS = 17
LEG_NAMES = ("FL", "FR", "RL", "RR")


class LinkKind(IntEnum):
    Base = 0
    Hip = 1
    Thigh = 2
    Calf = 3
    Foot = 4


def link_index(leg: int, kind: LinkKind) -> int:
    """Base is link 0; leg links follow in (hip, thigh, calf, foot) order."""
    if kind == LinkKind.Base:
        return 0
    return 1 + 4 * leg + (kind - 1)


FOOT_LINKS = tuple(link_index(l, LinkKind.Foot) for l in range(NUM_LEGS))

LINK_KINDS = (LinkKind.Base,) + tuple(
    kind for _ in range(NUM_LEGS) for kind in (LinkKind.Hip, LinkKind.Thigh, LinkKind.Calf, LinkKind.Foot)
)


@dataclass
class RobotModel:
    """Geometry, mass and control constants. Defaults are the nominal robot."""

    base_dims: tuple = (0.40, 0.26, 0.12)       # box extents, m
    base_mass: float = 12.0                      # kg
    base_inertia: tuple = ()                     # diagonal, kg m^2; derived from box if empty
    inertia_scale: float = 3.0                   # folds distal leg mass into the base box
    hip_x: float = 0.18                          # hip offsets from base center, m
    hip_y: float = 0.13
    thigh_length: float = 0.21
    calf_length: float = 0.21
    foot_radius: float = 0.02
    calf_radius: float = 0.02
    thigh_radius: float = 0.025
    hip_radius: float = 0.04
    base_pad_radius: float = 0.03                # contact sphere radius at base corners
    kp: float = 40.0                             # PD gains on desired joint positions
    kd: float = 0.5
    joint_inertia: float = 0.08                  # kg m^2, reflected leg/rotor inertia
    joint_damping: float = 3.0                   # N m s/rad, transmission friction
    default_joint_angles: tuple = (0.0, 0.8, -1.6)   # (hip roll, hip pitch, knee) per leg; feet under hips
    friction_coeff: float = 1.0
    contact_stiffness: float = 2.0e4             # N/m, penalty spring
    contact_damping: float = 2.0e2               # N s/m
    tangential_damping: float = 8.0e2            # N s/m before the Coulomb clamp
    tangential_stiffness: float = 8.0e3          # N/m anchor spring (static friction)
    max_penetration: float = 0.08                # m, caps spring force at sharp height steps
    max_contact_force: float = 180.0             # N per sphere; stands in for torque limits
    dt_control: float = 0.02                     # s, 50 Hz policy rate
    n_substeps: int = 4
    gravity: float = 9.81
    max_lin_vel: float = 50.0                    # m/s, integrator safety clamp
    max_ang_vel: float = 25.0                    # rad/s, keeps gyro term Euler-stable

    # Per-episode randomization state (nominal values here).
    motor_strength: tuple = tuple([1.0] * NUM_JOINTS)
    added_mass: float = 0.0
    com_offset: tuple = (0.0, 0.0, 0.0)

    hip_offsets: np.ndarray = field(init=False, repr=False)
    q_default: np.ndarray = field(init=False, repr=False)
    inertia_diag: np.ndarray = field(init=False, repr=False)
    point_link_ids: np.ndarray = field(init=False, repr=False)
    point_radii: np.ndarray = field(init=False, repr=False)
    com_offset_vec: np.ndarray = field(init=False, repr=False)
    base_corner_pts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("base_mass", "thigh_length", "calf_length", "foot_radius",
                     "contact_stiffness", "contact_damping", "dt_control"):
            if getattr(self, name) <= 0:
                raise ValueError(f"RobotModel.{name} must be positive")
        if any(d <= 0 for d in self.base_dims):
            raise ValueError("RobotModel.base_dims must be positive")
        if self.n_substeps < 1:
            raise ValueError("RobotModel.n_substeps must be >= 1")
        sx, sy = self.hip_x, self.hip_y
        self.hip_offsets = np.array([
            [sx, sy, 0.0], [sx, -sy, 0.0], [-sx, sy, 0.0], [-sx, -sy, 0.0],
        ])
        self.q_default = np.tile(np.asarray(self.default_joint_angles, dtype=float), NUM_LEGS)
        if self.base_inertia:
            self.inertia_diag = np.asarray(self.base_inertia, dtype=float)
        else:
            lx, ly, lz = self.base_dims
            m = self.base_mass
            self.inertia_diag = (self.inertia_scale * m / 12.0
                                 * np.array([ly * ly + lz * lz, lx * lx + lz * lz, lx * lx + ly * ly]))
        self.point_link_ids, self.point_radii = sample_point_meta(self)
        self.com_offset_vec = np.asarray(self.com_offset, dtype=float)
        self.base_corner_pts = 0.5 * np.asarray(self.base_dims) * _BASE_CORNER_SIGNS

    @property
    def total_mass(self) -> float:
        return self.base_mass + self.added_mass

    def with_randomization(self, draw) -> "RobotModel":
        return replace(
            self,
            friction_coeff=draw.friction,
            motor_strength=tuple(draw.motor_strength),
            added_mass=draw.added_mass,
            com_offset=tuple(draw.com_offset),
        )


def build_robot(model_config=None, **overrides) -> RobotModel:
    """Construct a validated RobotModel from a config mapping or kwargs."""
    kwargs = dict(model_config or {})
    kwargs.update(overrides)
    return RobotModel(**kwargs)


NUM_SAMPLE_POINTS = 8 + 4 * 6


@dataclass
class RobotState:
    base_pos: np.ndarray
    base_quat: np.ndarray
    base_lin_vel: np.ndarray          # world frame, m/s
    base_ang_vel: np.ndarray          # body frame, rad/s
    q: np.ndarray
    qdot: np.ndarray
    last_action: np.ndarray
    feet_air_time: np.ndarray         # s, per foot (FL, FR, RL, RR)
    episode_time: float = 0.0
    # Static-friction anchors per collision sphere; persists across substeps.
    contact_anchor: np.ndarray = None
    anchor_active: np.ndarray = None

    def __post_init__(self):
        if self.contact_anchor is None:
            self.contact_anchor = np.zeros((NUM_SAMPLE_POINTS, 2))
        if self.anchor_active is None:
            self.anchor_active = np.zeros(NUM_SAMPLE_POINTS, bool)

    def copy(self) -> "RobotState":
        return RobotState(
            base_pos=self.base_pos.copy(),
            base_quat=self.base_quat.copy(),
            base_lin_vel=self.base_lin_vel.copy(),
            base_ang_vel=self.base_ang_vel.copy(),
            q=self.q.copy(),
            qdot=self.qdot.copy(),
            last_action=self.last_action.copy(),
            feet_air_time=self.feet_air_time.copy(),
            episode_time=self.episode_time,
            contact_anchor=self.contact_anchor.copy(),
            anchor_active=self.anchor_active.copy(),
        )


def default_state(model: RobotModel, base_pos=(0.0, 0.0, 0.32)) -> RobotState:
    return RobotState(
        base_pos=np.asarray(base_pos, dtype=float).copy(),
        base_quat=np.array([1.0, 0.0, 0.0, 0.0]),
        base_lin_vel=np.zeros(3),
        base_ang_vel=np.zeros(3),
        q=model.q_default.copy(),
        qdot=np.zeros(NUM_JOINTS),
        last_action=np.zeros(NUM_JOINTS),
        feet_air_time=np.zeros(NUM_LEGS),
    )


def leg_points_local(model: RobotModel, q: np.ndarray):
    """Knee and foot positions of all legs in the base frame. q: (12,)."""
    ql = q.reshape(NUM_LEGS, 3)
    roll, pitch, knee = ql[:, 0], ql[:, 1], ql[:, 2]
    lt, lc = model.thigh_length, model.calf_length
    # Thigh/calf vectors in the leg-pitch plane, then rolled about x.
    tx, tz = -lt * np.sin(pitch), -lt * np.cos(pitch)
    cum = pitch + knee
    cx, cz = -lc * np.sin(cum), -lc * np.cos(cum)
    c0, s0 = np.cos(roll), np.sin(roll)
    knee_pos = np.empty((NUM_LEGS, 3))
    knee_pos[:, 0] = tx
    knee_pos[:, 1] = -s0 * tz
    knee_pos[:, 2] = c0 * tz
    knee_pos += model.hip_offsets
    foot_pos = np.empty((NUM_LEGS, 3))
    foot_pos[:, 0] = cx
    foot_pos[:, 1] = -s0 * cz
    foot_pos[:, 2] = c0 * cz
    foot_pos += knee_pos
    return knee_pos, foot_pos


def leg_points_and_vels(model: RobotModel, q: np.ndarray, qdot: np.ndarray):
    """Knee/foot positions plus their base-frame velocities, all (4, 3)."""
    ql = q.reshape(NUM_LEGS, 3)
    qd = qdot.reshape(NUM_LEGS, 3)
    roll, pitch, knee = ql[:, 0], ql[:, 1], ql[:, 2]
    d0, d1, d12 = qd[:, 0], qd[:, 1], qd[:, 1] + qd[:, 2]
    lt, lc = model.thigh_length, model.calf_length
    s1, c1 = np.sin(pitch), np.cos(pitch)
    cum = pitch + knee
    s12, c12 = np.sin(cum), np.cos(cum)
    c0, s0 = np.cos(roll), np.sin(roll)

    tx, tz = -lt * s1, -lt * c1
    cx, cz = -lc * s12, -lc * c12
    dtx, dtz = -lt * c1 * d1, lt * s1 * d1
    dcx, dcz = -lc * c12 * d12, lc * s12 * d12

    knee_pos = np.empty((NUM_LEGS, 3))
    knee_pos[:, 0] = tx
    knee_pos[:, 1] = -s0 * tz
    knee_pos[:, 2] = c0 * tz
    knee_pos += model.hip_offsets
    foot_pos = np.empty((NUM_LEGS, 3))
    foot_pos[:, 0] = cx
    foot_pos[:, 1] = -s0 * cz
    foot_pos[:, 2] = c0 * cz
    foot_pos += knee_pos

    knee_vel = np.empty((NUM_LEGS, 3))
    knee_vel[:, 0] = dtx
    knee_vel[:, 1] = -c0 * tz * d0 - s0 * dtz
    knee_vel[:, 2] = -s0 * tz * d0 + c0 * dtz
    foot_vel = np.empty((NUM_LEGS, 3))
    foot_vel[:, 0] = dcx
    foot_vel[:, 1] = -c0 * cz * d0 - s0 * dcz
    foot_vel[:, 2] = -s0 * cz * d0 + c0 * dcz
    foot_vel += knee_vel
    return knee_pos, foot_pos, knee_vel, foot_vel


_BASE_CORNER_SIGNS = np.array([
    [sx, sy, sz] for sx in (-1.0, 1.0) for sy in (-1.0, 1.0) for sz in (-1.0, 1.0)
])

# Sample-point table: (link_id, radius) per collision sphere, fixed layout:
# 8 base corners, then per leg: hip, thigh mid, knee, calf mid, calf low, foot.
_PTS_PER_LEG = 6


def sample_point_meta(model: RobotModel):
    link_ids = [0] * 8
    radii = [model.base_pad_radius] * 8
    for leg in range(NUM_LEGS):
        link_ids += [
            link_index(leg, LinkKind.Hip),
            link_index(leg, LinkKind.Thigh),
            link_index(leg, LinkKind.Thigh),
            link_index(leg, LinkKind.Calf),
            link_index(leg, LinkKind.Calf),
            link_index(leg, LinkKind.Foot),
        ]
        radii += [
            model.hip_radius,
            model.thigh_radius, model.thigh_radius,
            model.calf_radius, model.calf_radius,
            model.foot_radius,
        ]
    return np.array(link_ids, dtype=int), np.array(radii)


def sample_points_local(model: RobotModel, q: np.ndarray) -> np.ndarray:
    """All collision-sphere centers in the base frame, shape (32, 3)."""
    knee, foot = leg_points_local(model, q)
    hips = model.hip_offsets
    out = np.empty((8 + NUM_LEGS * _PTS_PER_LEG, 3))
    out[:8] = 0.5 * np.asarray(model.base_dims) * _BASE_CORNER_SIGNS
    legs = out[8:].reshape(NUM_LEGS, _PTS_PER_LEG, 3)
    calf = foot - knee
    legs[:, 0] = hips
    legs[:, 1] = 0.5 * (hips + knee)
    legs[:, 2] = knee
    legs[:, 3] = knee + 0.45 * calf
    legs[:, 4] = knee + 0.9 * calf
    legs[:, 5] = foot
    return out


def sample_points_batch(model: RobotModel, q: np.ndarray, qdot: np.ndarray,
                        base_pos: np.ndarray, rot: np.ndarray,
                        base_lin_vel: np.ndarray, base_ang_vel_body: np.ndarray):
    """Batched collision-sphere positions/velocities: (N, 32, 3) each.

    Geometry is shared across the batch; q, qdot are (N, 12), rot is (N, 3, 3).
    """
    n = len(q)
    ql = q.reshape(n, NUM_LEGS, 3)
    qd = qdot.reshape(n, NUM_LEGS, 3)
    roll, pitch, knee = ql[..., 0], ql[..., 1], ql[..., 2]
    d0, d1, d12 = qd[..., 0], qd[..., 1], qd[..., 1] + qd[..., 2]
    lt, lc = model.thigh_length, model.calf_length
    s1, c1 = np.sin(pitch), np.cos(pitch)
    cum = pitch + knee
    s12, c12 = np.sin(cum), np.cos(cum)
    c0, s0 = np.cos(roll), np.sin(roll)

    tx, tz = -lt * s1, -lt * c1
    cx, cz = -lc * s12, -lc * c12
    dtx, dtz = -lt * c1 * d1, lt * s1 * d1
    dcx, dcz = -lc * c12 * d12, lc * s12 * d12

    knee_pos = np.empty((n, NUM_LEGS, 3))
    knee_pos[..., 0] = tx
    knee_pos[..., 1] = -s0 * tz
    knee_pos[..., 2] = c0 * tz
    knee_pos += model.hip_offsets
    foot_pos = np.empty((n, NUM_LEGS, 3))
    foot_pos[..., 0] = cx
    foot_pos[..., 1] = -s0 * cz
    foot_pos[..., 2] = c0 * cz
    foot_pos += knee_pos

    knee_vel = np.empty((n, NUM_LEGS, 3))
    knee_vel[..., 0] = dtx
    knee_vel[..., 1] = -c0 * tz * d0 - s0 * dtz
    knee_vel[..., 2] = -s0 * tz * d0 + c0 * dtz
    foot_vel = np.empty((n, NUM_LEGS, 3))
    foot_vel[..., 0] = dcx
    foot_vel[..., 1] = -c0 * cz * d0 - s0 * dcz
    foot_vel[..., 2] = -s0 * cz * d0 + c0 * dcz
    foot_vel += knee_vel

    n_pts = 8 + NUM_LEGS * _PTS_PER_LEG
    local = np.empty((n, n_pts, 3))
    local[:, :8] = model.base_corner_pts
    legs = local[:, 8:].reshape(n, NUM_LEGS, _PTS_PER_LEG, 3)
    hips = np.broadcast_to(model.hip_offsets, (n, NUM_LEGS, 3))
    calf = foot_pos - knee_pos
    legs[:, :, 0] = hips
    legs[:, :, 1] = 0.5 * (hips + knee_pos)
    legs[:, :, 2] = knee_pos
    legs[:, :, 3] = knee_pos + 0.45 * calf
    legs[:, :, 4] = knee_pos + 0.9 * calf
    legs[:, :, 5] = foot_pos

    local_vel = np.zeros((n, n_pts, 3))
    lv = local_vel[:, 8:].reshape(n, NUM_LEGS, _PTS_PER_LEG, 3)
    calf_vel = foot_vel - knee_vel
    lv[:, :, 1] = 0.5 * knee_vel
    lv[:, :, 2] = knee_vel
    lv[:, :, 3] = knee_vel + 0.45 * calf_vel
    lv[:, :, 4] = knee_vel + 0.9 * calf_vel
    lv[:, :, 5] = foot_vel

    offsets = np.einsum("nij,npj->npi", rot, local)
    world = base_pos[:, None, :] + offsets
    omega_world = np.einsum("nij,nj->ni", rot, base_ang_vel_body)
    vel = (base_lin_vel[:, None, :]
           + np.cross(omega_world[:, None, :], offsets)
           + np.einsum("nij,npj->npi", rot, local_vel))
    return world, vel


def _cross_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise cross product of a (3,) vector with (N, 3) rows."""
    out = np.empty_like(b)
    out[:, 0] = a[1] * b[:, 2] - a[2] * b[:, 1]
    out[:, 1] = a[2] * b[:, 0] - a[0] * b[:, 2]
    out[:, 2] = a[0] * b[:, 1] - a[1] * b[:, 0]
    return out


def sample_points_world(model: RobotModel, state: RobotState, rot=None):
    """World positions and velocities of all collision spheres, (32, 3) each.

    Leg-point velocities combine base twist with the analytic joint-space
    velocity of the leg kinematics.
    """
    if rot is None:
        rot = quat_to_matrix(state.base_quat)
    knee, foot, knee_vel, foot_vel = leg_points_and_vels(model, state.q, state.qdot)
    hips = model.hip_offsets

    n = 8 + NUM_LEGS * _PTS_PER_LEG
    local = np.empty((n, 3))
    local[:8] = model.base_corner_pts
    legs = local[8:].reshape(NUM_LEGS, _PTS_PER_LEG, 3)
    calf = foot - knee
    legs[:, 0] = hips
    legs[:, 1] = 0.5 * (hips + knee)
    legs[:, 2] = knee
    legs[:, 3] = knee + 0.45 * calf
    legs[:, 4] = knee + 0.9 * calf
    legs[:, 5] = foot

    local_vel = np.zeros((n, 3))
    lv = local_vel[8:].reshape(NUM_LEGS, _PTS_PER_LEG, 3)
    calf_vel = foot_vel - knee_vel
    lv[:, 1] = 0.5 * knee_vel
    lv[:, 2] = knee_vel
    lv[:, 3] = knee_vel + 0.45 * calf_vel
    lv[:, 4] = knee_vel + 0.9 * calf_vel
    lv[:, 5] = foot_vel

    offsets = local @ rot.T
    world = state.base_pos + offsets
    omega_world = rot @ state.base_ang_vel
    vel = state.base_lin_vel + _cross_rows(omega_world, offsets) + local_vel @ rot.T
    return world, vel
