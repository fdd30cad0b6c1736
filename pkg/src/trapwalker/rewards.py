"""Reward terms: goal tracking, standstill shaping, regularization, gait style.

Every term is a pure function; the weighted sum and the per-term values are
kept side by side so training logs can attribute reward to its source.
"""

from dataclasses import dataclass, fields

import numpy as np

REWARD_TERMS = (
    "get_goal", "heading", "finish_vel", "finish_pos", "alive",
    "stall", "vel_limit", "joint_vel", "joint_acc", "ang_vel_stability",
    "feet_in_air", "balance", "amp_style",
)

HEADING_EPS = 1e-6


@dataclass
class RewardWeights:
    get_goal: float = 5.0
    heading: float = 3.0
    finish_vel: float = -1.0
    finish_pos: float = -1.0
    alive: float = 3.0
    stall: float = -2.0
    vel_limit: float = 2.0
    joint_vel: float = 0.002
    joint_acc: float = 2e-6
    ang_vel_stability: float = 0.2
    feet_in_air: float = 0.05
    balance: float = -2e-5
    amp_style: float = 0.1

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class RewardLimits:
    omega_limit: float = 2.0      # rad/s, yaw rate cap for the safety bonus
    vel_limit: float = 1.5        # m/s, planar speed cap
    stall_speed: float = 0.1      # m/s
    stall_distance: float = 0.25  # m


@dataclass
class RewardBreakdown:
    get_goal: float = 0.0
    heading: float = 0.0
    finish_vel: float = 0.0
    finish_pos: float = 0.0
    alive: float = 0.0
    stall: float = 0.0
    vel_limit: float = 0.0
    joint_vel: float = 0.0
    joint_acc: float = 0.0
    ang_vel_stability: float = 0.0
    feet_in_air: float = 0.0
    balance: float = 0.0
    amp_style: float = 0.0
    total: float = 0.0

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in REWARD_TERMS}


def reward_goal(delta_g) -> float:
    return 1.0 / (0.4 + float(np.linalg.norm(delta_g)))


def reward_heading(delta_g) -> float:
    dist = float(np.linalg.norm(delta_g))
    if dist == 0.0:
        return 1.0
    return float(delta_g[0]) / (dist + HEADING_EPS)


def reward_finish(delta_g, q, q_default, v, omega):
    """Standstill shaping; active only once the goal offset is gated to zero."""
    if np.any(np.asarray(delta_g) != 0.0):
        return 0.0, 0.0
    finish_pos = float(np.sum(np.abs(np.asarray(q) - np.asarray(q_default))))
    finish_vel = float(np.linalg.norm(v)) + float(np.linalg.norm(omega))
    return finish_pos, finish_vel


def reward_regularization(
    delta_g, lin_vel_world, ang_vel_body, qdot, qddot,
    foot_forces, touchdown_air_times, limits: RewardLimits,
):
    """All regularization terms as named raw values.

    foot_forces: (4, 3) summed contact force per foot in (FL, FR, RL, RR)
    order. touchdown_air_times: air durations of feet that touched down this
    step (empty most steps).
    """
    v_xy = float(np.hypot(lin_vel_world[0], lin_vel_world[1]))
    dist = float(np.linalg.norm(delta_g))
    stall = 1.0 if (v_xy < limits.stall_speed and dist > limits.stall_distance) else 0.0
    vel_limit = 1.0 if (abs(ang_vel_body[2]) < limits.omega_limit and v_xy < limits.vel_limit) else 0.0
    joint_vel = -float(np.linalg.norm(qdot))
    joint_acc = -float(np.linalg.norm(qddot))
    ang_vel_stability = -(abs(float(ang_vel_body[0])) + abs(float(ang_vel_body[1])))
    feet_in_air = float(sum(
        (t - 0.3) + 10.0 * max(0.5 - t, 0.0) for t in touchdown_air_times
    ))
    f = np.asarray(foot_forces)
    balance = float(np.linalg.norm(f[0] + f[2] - f[1] - f[3]))
    return {
        "stall": stall,
        "vel_limit": vel_limit,
        "joint_vel": joint_vel,
        "joint_acc": joint_acc,
        "ang_vel_stability": ang_vel_stability,
        "feet_in_air": feet_in_air,
        "balance": balance,
        "alive": 1.0,
    }


def amp_style_reward(score) -> float:
    return max(0.0, 1.0 - 0.25 * (float(score) - 1.0) ** 2)


def amp_discriminator_loss(d_ref_scores, d_policy_scores, grad_norms, alpha_gp: float = 10.0):
    """Least-squares discriminator objective with an input-gradient penalty.

    Works on plain arrays and on autodiff tensors (anything exposing
    arithmetic and .mean()).
    """
    ref_term = ((d_ref_scores - 1.0) ** 2).mean()
    policy_term = ((d_policy_scores + 1.0) ** 2).mean()
    loss = ref_term + policy_term
    if alpha_gp != 0.0:
        loss = loss + alpha_gp * grad_norms.mean()
    return loss


def total_reward(breakdown: RewardBreakdown, weights: RewardWeights) -> float:
    return float(sum(getattr(breakdown, n) * getattr(weights, n) for n in REWARD_TERMS))


def evaluate_rewards(
    delta_g, state, model, qddot, foot_forces, touchdown_air_times,
    weights: RewardWeights, limits: RewardLimits, style_score=None,
) -> RewardBreakdown:
    """Assemble the full breakdown for one post-step snapshot."""
    bd = RewardBreakdown()
    bd.get_goal = reward_goal(delta_g)
    bd.heading = reward_heading(delta_g)
    bd.finish_pos, bd.finish_vel = reward_finish(
        delta_g, state.q, model.q_default, state.base_lin_vel, state.base_ang_vel)
    reg = reward_regularization(
        delta_g, state.base_lin_vel, state.base_ang_vel, state.qdot, qddot,
        foot_forces, touchdown_air_times, limits)
    for name, value in reg.items():
        setattr(bd, name, value)
    if style_score is not None:
        bd.amp_style = amp_style_reward(style_score)
    bd.total = total_reward(bd, weights)
    return bd
