"""Hand-written gait machinery: the four-beat walk cycle used for reference
data, plus a reflex walker that tracks velocity commands in the simulator.

Stance uses a constant backward sweep synced to the duty factor so planted
feet stay world-fixed; swing lifts with zero-velocity touchdowns.
"""

from dataclasses import dataclass

import numpy as np

from .geom import projected_gravity, quat_rotate_inverse
from .robot import NUM_LEGS, RobotModel, RobotState

# Quarter-phase leg order FL, RR, FR, RL keeps three feet grounded.
WALK_PHASE_OFFSETS = np.array([0.0, 0.5, 0.75, 0.25])


@dataclass
class GaitParams:
    frequency: float = 2.0        # strides per second
    duty: float = 0.7             # grounded fraction of the cycle
    lift_height: float = 0.05
    stance_height: float = 0.30
    ramp_s: float = 1.0           # amplitude ramp-in from standstill
    step_gain: float = 0.0        # optional swing-foot placement toward the tilt


def foot_cycle(phase: float, duty: float):
    """(stride position in [-0.5, 0.5], lift in [0, 1]) at cycle phase [0, 1).

    Swing blends front to back smoothly with zero touchdown velocity; stance
    sweeps backward at constant speed.
    """
    swing = 1.0 - duty
    if phase < swing:
        u = phase / swing
        return -0.5 * np.cos(np.pi * u), 0.5 * (1.0 - np.cos(2.0 * np.pi * u))
    u = (phase - swing) / duty
    return 0.5 - u, 0.0


def leg_ik(model: RobotModel, x: float, y: float, z: float) -> tuple:
    """Joint angles (roll, pitch, knee) reaching a hip-frame foot target."""
    q0 = np.arctan2(y, -z)
    zp = -np.hypot(y, z)
    lt, lc = model.thigh_length, model.calf_length
    d = (x * x + zp * zp - lt * lt - lc * lc) / (2.0 * lt * lc)
    q2 = -np.arccos(np.clip(d, -1.0, 1.0))
    q1 = np.arctan2(-x, -zp) - np.arctan2(lc * np.sin(q2), lt + lc * np.cos(q2))
    return q0, q1, q2


def gait_joint_targets(model: RobotModel, t: float, command, params: GaitParams,
                       tilt=None) -> np.ndarray:
    """Joint targets for a planar velocity command (vx, vy, wz) at time t.

    tilt, when given, is the body-frame gravity direction; swing feet then
    step toward the fall to catch it.
    """
    vx, vy, wz = command
    p = params
    amp = min(1.0, t / p.ramp_s) if p.ramp_s > 0 else 1.0
    q = np.empty(12)
    for leg in range(NUM_LEGS):
        phase = (p.frequency * t + WALK_PHASE_OFFSETS[leg]) % 1.0
        xu, lift = foot_cycle(phase, p.duty)
        vlx = vx - wz * model.hip_offsets[leg, 1]
        vly = vy + wz * model.hip_offsets[leg, 0]
        x = amp * (vlx * p.duty / p.frequency) * xu
        y = amp * (vly * p.duty / p.frequency) * xu
        if lift > 0.0 and tilt is not None:
            x += p.step_gain * tilt[0]
            y += p.step_gain * tilt[1]
        q[3 * leg: 3 * leg + 3] = leg_ik(model, x, y, -p.stance_height + amp * p.lift_height * lift)
    return q


def reflex_walk_targets(model: RobotModel, state: RobotState, t: float, command,
                        params: GaitParams = None) -> np.ndarray:
    """Closed-loop walk: the open-loop cycle plus tilt-reactive foot placement."""
    params = params or GaitParams()
    tilt = projected_gravity(state.base_quat)
    return gait_joint_targets(model, t, command, params, tilt=tilt)
