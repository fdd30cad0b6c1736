"""Reference gait transitions for the adversarial style reward.

A procedural four-beat walk tracks a stream of random planar velocity
commands: 200 commands, two seconds each, at the 50 Hz control rate. Joint
angles come from closed-form two-link IK on the shared gait cycle; states
are the 19-value descriptor (12 joints, base height, body-frame linear and
angular velocity).
"""

from dataclasses import dataclass, field

import numpy as np

from ..env import AMP_DIM
from ..robot import NUM_LEGS, RobotModel
from ..scripted import GaitParams, foot_cycle, leg_ik, WALK_PHASE_OFFSETS

N_COMMANDS = 200
COMMAND_SECONDS = 2.0


@dataclass
class AmpDataset:
    states: np.ndarray               # (T, 19), 0.02 s apart
    meta: dict = field(default_factory=dict)

    @property
    def pairs(self) -> np.ndarray:
        """(T-1, 38) consecutive transition pairs."""
        return np.concatenate([self.states[:-1], self.states[1:]], axis=1)

    def sample_pairs(self, n: int, rng: np.random.Generator) -> np.ndarray:
        idx = rng.integers(0, len(self.states) - 1, size=n)
        return np.concatenate([self.states[idx], self.states[idx + 1]], axis=1)

    def save(self, path):
        np.savez_compressed(path, states=self.states.astype(np.float32))

    @staticmethod
    def load(path) -> "AmpDataset":
        data = np.load(path)
        return AmpDataset(states=data["states"].astype(np.float64), meta={"path": str(path)})


def generate_amp_dataset(seed: int, model: RobotModel = None, config: dict = None) -> AmpDataset:
    cfg = dict(
        gait=GaitParams(ramp_s=0.0),
        bob_amplitude=0.004,
        vx_range=(-0.5, 0.8),
        vy_range=(-0.3, 0.3),
        wz_range=(-0.8, 0.8),
        n_commands=N_COMMANDS,
        command_seconds=COMMAND_SECONDS,
    )
    cfg.update(config or {})
    model = model or RobotModel()
    gait: GaitParams = cfg["gait"]
    rng = np.random.default_rng(seed)
    dt = model.dt_control
    steps_per_cmd = int(round(cfg["command_seconds"] / dt))

    commands = np.stack([
        rng.uniform(*cfg["vx_range"], size=cfg["n_commands"]),
        rng.uniform(*cfg["vy_range"], size=cfg["n_commands"]),
        rng.uniform(*cfg["wz_range"], size=cfg["n_commands"]),
    ], axis=1)

    total = cfg["n_commands"] * steps_per_cmd
    states = np.empty((total, AMP_DIM))
    hips = model.hip_offsets
    for i in range(total):
        vx, vy, wz = commands[i // steps_per_cmd]
        t = i * dt
        q = np.empty(12)
        for leg in range(NUM_LEGS):
            phase = (gait.frequency * t + WALK_PHASE_OFFSETS[leg]) % 1.0
            xu, lift = foot_cycle(phase, gait.duty)
            vlx = vx - wz * hips[leg, 1]
            vly = vy + wz * hips[leg, 0]
            x = (vlx * gait.duty / gait.frequency) * xu
            y = (vly * gait.duty / gait.frequency) * xu
            q[3 * leg: 3 * leg + 3] = leg_ik(
                model, x, y, -gait.stance_height + gait.lift_height * lift)
        states[i, 0:12] = q
        states[i, 12] = gait.stance_height + cfg["bob_amplitude"] * np.sin(
            4.0 * np.pi * gait.frequency * t)
        states[i, 13:16] = (vx, vy, 0.0)
        states[i, 16:19] = (0.0, 0.0, wz)
    return AmpDataset(states=states, meta={
        "n_commands": cfg["n_commands"],
        "command_seconds": cfg["command_seconds"],
        "dt": dt,
        "seed": seed,
    })
