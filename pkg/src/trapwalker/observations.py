"""Observation groups, goal commands, contact normalization, sensor noise.

The policy-facing observation splits into four groups: proprioception (42),
privileged state (4), per-link contact magnitudes (17) and the goal command
(4). The deployment path consumes only proprioception and goal command.
"""

from dataclasses import dataclass, field

import numpy as np

from .geom import projected_gravity, quat_rotate_inverse, quat_yaw, yaw_rotate_inverse
from .robot import NUM_LINKS, RobotModel, RobotState

P_DIM = 42
S_DIM = 4
C_DIM = 17
G_DIM = 4
OBS_DIM = P_DIM + S_DIM + C_DIM + G_DIM

STANDSTILL_THRESHOLD = 0.2
CONTACT_CLIP_N = 100.0


@dataclass
class GoalCommand:
    world_goal: np.ndarray       # m, world frame; zeros for fake commands
    delta_g: np.ndarray          # m, robot yaw frame, z = 0, standstill-gated
    delta_t: float               # s remaining
    deadline: float              # s, absolute episode deadline
    fake: bool = False           # held constant instead of recomputed from pose


@dataclass
class ObsScales:
    """Constant per-channel scaling applied to raw sensor values."""
    ang_vel: float = 0.25
    lin_vel: float = 2.0
    dof_vel: float = 0.05


@dataclass
class NoiseModel:
    """Gaussian sensor noise amplitudes, in raw sensor units."""
    enabled: bool = False
    gravity: float = 0.05
    ang_vel: float = 0.2
    joint_pos: float = 0.01
    joint_vel: float = 1.5
    lin_vel: float = 0.05

    def proprio_sigma(self, scales: ObsScales) -> np.ndarray:
        """Noise vector in scaled proprio units (last action is noise free)."""
        sig = np.zeros(P_DIM)
        if not self.enabled:
            return sig
        sig[0:3] = self.gravity
        sig[3:6] = self.ang_vel * scales.ang_vel
        sig[6:18] = self.joint_pos
        sig[18:30] = self.joint_vel * scales.dof_vel
        return sig


@dataclass
class Observation:
    proprio: np.ndarray          # (42,)
    privileged: np.ndarray       # (4,)
    contacts: np.ndarray         # (17,), normalized to [-1, 1]
    goal: np.ndarray             # (4,)

    def concat(self) -> np.ndarray:
        return np.concatenate([self.proprio, self.privileged, self.contacts, self.goal])


def apply_standstill(delta_g: np.ndarray, threshold: float = STANDSTILL_THRESHOLD) -> np.ndarray:
    if np.linalg.norm(delta_g) < threshold:
        return np.zeros(3)
    return delta_g


def compute_goal_command(state: RobotState, world_goal, remaining_time: float) -> GoalCommand:
    """Goal offset in the robot's current yaw frame; z is always zero."""
    goal = np.asarray(world_goal, dtype=float)
    rel = goal - state.base_pos
    rel[2] = 0.0
    delta_g = yaw_rotate_inverse(quat_yaw(state.base_quat), rel)
    delta_g[2] = 0.0
    return GoalCommand(
        world_goal=goal,
        delta_g=apply_standstill(delta_g),
        delta_t=max(0.0, float(remaining_time)),
        deadline=state.episode_time + max(0.0, float(remaining_time)),
    )


def joystick_to_fake_goal(left_stick, right_stick_dist: float, dt_setting: float) -> GoalCommand:
    """Operator command: left stick sets direction, right control sets distance.

    The resulting offset is held constant in the robot frame, so a lateral
    command keeps turning the robot while a short forward command translates.
    """
    lx, ly = float(left_stick[0]), float(left_stick[1])
    if not (-1.0 <= lx <= 1.0 and -1.0 <= ly <= 1.0):
        raise ValueError("stick components must be in [-1, 1]")
    if right_stick_dist < 0:
        raise ValueError("distance must be >= 0")
    norm = np.hypot(lx, ly)
    if norm < 1e-9 or right_stick_dist == 0.0:
        delta_g = np.zeros(3)
    else:
        delta_g = right_stick_dist * np.array([lx / norm, ly / norm, 0.0])
    return GoalCommand(
        world_goal=np.zeros(3),
        delta_g=apply_standstill(delta_g),
        delta_t=float(dt_setting),
        deadline=float("inf"),
        fake=True,
    )


def normalize_contacts(magnitudes) -> np.ndarray:
    """Clip per-link force magnitudes to [0, 100] N and map onto [-1, 1]."""
    m = np.clip(np.asarray(magnitudes, dtype=float), 0.0, CONTACT_CLIP_N)
    return 2.0 * (m / CONTACT_CLIP_N) - 1.0


def link_contact_magnitudes(records) -> np.ndarray:
    """Per-link magnitude of the summed contact force, length 17."""
    force = np.zeros((NUM_LINKS, 3))
    for rec in records:
        force[rec.link_id] += rec.force
    return np.linalg.norm(force, axis=1)


def build_proprio(state: RobotState, model: RobotModel, last_action, scales: ObsScales) -> np.ndarray:
    p = np.empty(P_DIM)
    p[0:3] = projected_gravity(state.base_quat)
    p[3:6] = state.base_ang_vel * scales.ang_vel
    p[6:18] = state.q - model.q_default
    p[18:30] = state.qdot * scales.dof_vel
    p[30:42] = last_action
    return p


def build_privileged(state: RobotState, model: RobotModel, scales: ObsScales) -> np.ndarray:
    s = np.empty(S_DIM)
    s[0:3] = quat_rotate_inverse(state.base_quat, state.base_lin_vel) * scales.lin_vel
    s[3] = model.friction_coeff
    return s


def goal_obs(command: GoalCommand) -> np.ndarray:
    return np.array([command.delta_g[0], command.delta_g[1], command.delta_g[2], command.delta_t])


class LatencyBuffer:
    """Fixed-delay ring buffer over proprio vectors, quantized to control steps."""

    def __init__(self, delay_steps: int):
        self.delay_steps = max(0, int(delay_steps))
        self._buf = []

    def push(self, p: np.ndarray) -> np.ndarray:
        self._buf.append(p)
        keep = self.delay_steps + 1
        if len(self._buf) > keep:
            del self._buf[: len(self._buf) - keep]
        return self._buf[0]

    def reset(self):
        self._buf.clear()
