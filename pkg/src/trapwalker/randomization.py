"""Per-episode dynamics randomization draws."""

from dataclasses import dataclass, field

import numpy as np

from .robot import NUM_JOINTS

# Uniform ranges applied at every episode reset when randomization is on.
ADDED_MASS_RANGE = (0.0, 3.0)          # kg
COM_X_RANGE = (-0.2, 0.2)              # m
COM_Y_RANGE = (-0.1, 0.1)
COM_Z_RANGE = (-0.05, 0.05)
FRICTION_RANGE = (0.0, 2.0)
INIT_JOINT_SCALE_RANGE = (0.5, 1.5)    # x nominal angle
INIT_BASE_VEL_RANGE = (-1.0, 1.0)      # m/s, each axis
MOTOR_STRENGTH_RANGE = (0.9, 1.1)      # x nominal
LATENCY_RANGE = (0.2, 0.4)             # s


@dataclass
class RandomizationDraw:
    added_mass: float = 0.0
    com_offset: tuple = (0.0, 0.0, 0.0)
    friction: float = 1.0
    init_joint_scale: np.ndarray = field(default_factory=lambda: np.ones(NUM_JOINTS))
    init_base_vel: np.ndarray = field(default_factory=lambda: np.zeros(3))
    motor_strength: np.ndarray = field(default_factory=lambda: np.ones(NUM_JOINTS))
    latency_s: float = 0.0


def randomize_dynamics(rng: np.random.Generator, enabled: bool = True,
                       nominal_friction: float = 1.0) -> RandomizationDraw:
    if not enabled:
        return RandomizationDraw(friction=nominal_friction)
    return RandomizationDraw(
        added_mass=float(rng.uniform(*ADDED_MASS_RANGE)),
        com_offset=(
            float(rng.uniform(*COM_X_RANGE)),
            float(rng.uniform(*COM_Y_RANGE)),
            float(rng.uniform(*COM_Z_RANGE)),
        ),
        friction=float(rng.uniform(*FRICTION_RANGE)),
        init_joint_scale=rng.uniform(*INIT_JOINT_SCALE_RANGE, size=NUM_JOINTS),
        init_base_vel=rng.uniform(*INIT_BASE_VEL_RANGE, size=3),
        motor_strength=rng.uniform(*MOTOR_STRENGTH_RANGE, size=NUM_JOINTS),
        latency_s=float(rng.uniform(*LATENCY_RANGE)),
    )
