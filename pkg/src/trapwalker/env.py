"""Episode orchestration: resets, goal sampling, stepping, traces.

TrapEnv wraps one robot on one terrain; VectorEnv steps a batch of
independent envs and auto-resets finished episodes.
"""

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .geom import quat_rotate_inverse, quat_yaw
from .observations import (
    C_DIM, G_DIM, P_DIM, S_DIM,
    GoalCommand, LatencyBuffer, NoiseModel, Observation, ObsScales,
    build_privileged, build_proprio, compute_goal_command, goal_obs,
    link_contact_magnitudes, normalize_contacts,
)
from .physics import Termination, check_termination, foot_positions_world, physics_step, physics_step_batch
from .randomization import RandomizationDraw, randomize_dynamics
from .rewards import RewardBreakdown, RewardLimits, RewardWeights, evaluate_rewards
from .robot import FOOT_LINKS, NUM_JOINTS, NUM_LEGS, RobotModel, RobotState, default_state
from .terrain import CATEGORY_BAR, CATEGORY_PIT, Terrain, trap_label_at

AMP_DIM = 19


@dataclass
class EnvConfig:
    episode_length_s: float = 8.0
    action_scale: float = 0.25
    action_clip: float = 4.0
    spawn_height: float = 0.32
    goal_min_dist: float = 1.5
    goal_max_dist: float = 5.0
    randomization: bool = False
    noise: NoiseModel = field(default_factory=NoiseModel)
    scales: ObsScales = field(default_factory=ObsScales)


def amp_state(state: RobotState, ground_height: float) -> np.ndarray:
    """Gait-style descriptor: joints, base height, body-frame twist (19 values)."""
    out = np.empty(AMP_DIM)
    out[0:12] = state.q
    out[12] = state.base_pos[2] - ground_height
    out[13:16] = quat_rotate_inverse(state.base_quat, state.base_lin_vel)
    out[16:19] = state.base_ang_vel
    return out


def sample_goal(rng: np.random.Generator, terrain: Terrain, cell, spawn_xy,
                cfg: EnvConfig) -> np.ndarray:
    """World-frame goal. Ring cells place it on the goal ring outside the trap
    circle; open cells draw area-uniform from an annulus around the spawn."""
    xmin, xmax, ymin, ymax = terrain.extents
    if cell is not None and cell.category in (CATEGORY_BAR, CATEGORY_PIT):
        theta = rng.uniform(0.0, 2.0 * np.pi)
        center = np.asarray(cell.center)
        goal = center + cell.goal_ring_radius * np.array([np.cos(theta), np.sin(theta)])
        return np.array([goal[0], goal[1], 0.0])
    r_lo = cfg.goal_min_dist
    if cell is not None:
        half = 0.5 * float(terrain.meta.get("cell_size_m", 10.0))
        r_hi = min(cfg.goal_max_dist, half - 1.0)
        bounds = (cell.center[0] - half, cell.center[0] + half,
                  cell.center[1] - half, cell.center[1] + half)
    else:
        r_hi = cfg.goal_max_dist
        bounds = (xmin, xmax, ymin, ymax)
    for _ in range(64):
        theta = rng.uniform(0.0, 2.0 * np.pi)
        r = np.sqrt(rng.uniform(r_lo * r_lo, r_hi * r_hi))
        goal = np.asarray(spawn_xy) + r * np.array([np.cos(theta), np.sin(theta)])
        if bounds[0] + 0.3 < goal[0] < bounds[1] - 0.3 and bounds[2] + 0.3 < goal[1] < bounds[3] - 0.3:
            return np.array([goal[0], goal[1], 0.0])
    center = np.array([0.5 * (bounds[0] + bounds[1]), 0.5 * (bounds[2] + bounds[3])])
    return np.array([center[0], center[1], 0.0])


class TrapEnv:
    """One robot, one terrain, 50 Hz control."""

    def __init__(self, model: RobotModel, terrain: Terrain, cfg: EnvConfig = None,
                 seed: int = 0, cell=None, reward_weights: RewardWeights = None,
                 reward_limits: RewardLimits = None):
        self.base_model = model
        self.terrain = terrain
        self.cfg = cfg or EnvConfig()
        self.reward_weights = reward_weights or RewardWeights()
        self.reward_limits = reward_limits or RewardLimits()
        self.rng = np.random.default_rng(seed)
        self.cell = cell
        self.model = model
        self.state = None
        self.command = None
        self.draw = RandomizationDraw(friction=model.friction_coeff)
        self.latency = LatencyBuffer(0)
        self.reached = False
        self.last_records = []
        self.style_scorer = None
        self.record_trace = False
        self.trace = []
        self._external_command = None
        self._qdot_prev = np.zeros(NUM_JOINTS)

    @property
    def dt(self) -> float:
        return self.base_model.dt_control

    def set_fake_command(self, command: GoalCommand):
        """Hold a constant operator command instead of tracking a world goal."""
        self._external_command = command
        self.command = command

    def _spawn_xy(self):
        if self.cell is not None:
            jitter = self.rng.uniform(-1.0, 1.0, size=2)
            jitter *= self.cell.spawn_radius / max(1.0, np.linalg.norm(jitter))
            return np.asarray(self.cell.spawn_point) + jitter
        meta = self.terrain.meta
        if "spawn" in meta:
            return np.asarray(meta["spawn"], dtype=float) + self.rng.uniform(-0.3, 0.3, size=2)
        xmin, xmax, ymin, ymax = self.terrain.extents
        center = np.array([0.5 * (xmin + xmax), 0.5 * (ymin + ymax)])
        return center + self.rng.uniform(-1.0, 1.0, size=2)

    def reset(self, cell=None) -> Observation:
        if cell is not None:
            self.cell = cell
        cfg = self.cfg
        self.draw = randomize_dynamics(self.rng, enabled=cfg.randomization,
                                       nominal_friction=self.base_model.friction_coeff)
        self.model = self.base_model.with_randomization(self.draw)

        spawn = self._spawn_xy()
        ground = float(self.terrain.ground_heights(spawn[None, :])[0])
        self.state = default_state(self.model, base_pos=(spawn[0], spawn[1], ground + cfg.spawn_height))
        self.state.q = self.model.q_default * self.draw.init_joint_scale
        self.state.base_lin_vel = np.asarray(self.draw.init_base_vel, dtype=float).copy()

        if self._external_command is not None:
            self.command = self._external_command
        else:
            goal = sample_goal(self.rng, self.terrain, self.cell, spawn, cfg)
            self.command = compute_goal_command(self.state, goal, cfg.episode_length_s)
        self.reached = False
        self.last_records = []
        self.trace = []
        self._qdot_prev = np.zeros(NUM_JOINTS)
        delay_steps = int(round(self.draw.latency_s / self.dt))
        self.latency = LatencyBuffer(delay_steps)
        return self._observe()

    def _observe(self) -> Observation:
        cfg = self.cfg
        raw_p = build_proprio(self.state, self.model, self.state.last_action, cfg.scales)
        delayed = self.latency.push(raw_p)
        sigma = cfg.noise.proprio_sigma(cfg.scales)
        p = delayed + sigma * self.rng.standard_normal(P_DIM) if cfg.noise.enabled else delayed
        s = build_privileged(self.state, self.model, cfg.scales)
        if cfg.noise.enabled:
            s = s.copy()
            s[0:3] += cfg.noise.lin_vel * cfg.scales.lin_vel * self.rng.standard_normal(3)
        c = normalize_contacts(link_contact_magnitudes(self.last_records))
        return Observation(proprio=p, privileged=s, contacts=c, goal=goal_obs(self.command))

    def begin_step(self, action):
        """Clip the action, capture pre-step quantities, return PD targets."""
        cfg = self.cfg
        action = np.clip(np.asarray(action, dtype=float), -cfg.action_clip, cfg.action_clip)
        targets = self.model.q_default + cfg.action_scale * action
        pre = {
            "action": action,
            "prev_air": self.state.feet_air_time.copy(),
            "qdot_prev": self.state.qdot.copy(),
            "amp_pre": amp_state(self.state, self.terrain.base_height_single(
                self.state.base_pos[0], self.state.base_pos[1])),
        }
        return targets, pre

    def step(self, action):
        targets, pre = self.begin_step(action)
        new_state, records = physics_step(self.state, targets, self.model, self.terrain)
        self.state = new_state
        return self.finish_step(records, pre)

    def finish_step(self, records, pre):
        cfg = self.cfg
        action = pre["action"]
        prev_air = pre["prev_air"]
        self._qdot_prev = pre["qdot_prev"]
        amp_pre = pre["amp_pre"]
        self.state.last_action = action
        self.last_records = records

        touchdowns = [
            prev_air[leg] + self.dt
            for leg in range(NUM_LEGS)
            if prev_air[leg] > 0.0 and self.state.feet_air_time[leg] == 0.0
        ]
        qddot = (self.state.qdot - self._qdot_prev) / self.dt

        if self._external_command is None:
            remaining = cfg.episode_length_s - self.state.episode_time
            self.command = compute_goal_command(self.state, self.command.world_goal, remaining)
            rel = self.command.world_goal[:2] - self.state.base_pos[:2]
            if np.linalg.norm(rel) < 0.2:
                self.reached = True

        termination = check_termination(self.state, self.terrain, cfg.episode_length_s)

        foot_forces = np.zeros((NUM_LEGS, 3))
        for rec in records:
            for leg in range(NUM_LEGS):
                if rec.link_id == FOOT_LINKS[leg]:
                    foot_forces[leg] += rec.force

        ground_post = self.terrain.base_height_single(self.state.base_pos[0], self.state.base_pos[1])
        amp_post = amp_state(self.state, ground_post)
        style = self.style_scorer(amp_pre, amp_post) if self.style_scorer is not None else None

        breakdown = evaluate_rewards(
            self.command.delta_g, self.state, self.model, qddot, foot_forces,
            touchdowns, self.reward_weights, self.reward_limits, style_score=style)

        obs = self._observe()
        mags = link_contact_magnitudes(records)
        feet = pre.get("foot_positions")
        if feet is None:
            feet = foot_positions_world(self.model, self.state)
        label = trap_label_at(self.terrain, records, feet)
        info = {
            "label": label,
            "contact_magnitudes": mags,
            "amp_pre": amp_pre,
            "amp_post": amp_post,
            "reached": self.reached,
            "termination": termination,
            "time_out": termination == Termination.Timeout,
            "foot_positions": feet,
        }
        if self.record_trace:
            self.trace.append(trace_record(self, action, breakdown, label, mags,
                                           foot_forces, touchdowns, style))
        return obs, breakdown, termination, info


def trace_record(env: TrapEnv, action, breakdown: RewardBreakdown, label: int,
                 mags, foot_forces, touchdowns, style_score) -> dict:
    st = env.state
    return {
        "t": round(st.episode_time, 6),
        "base_pos": st.base_pos.tolist(),
        "base_quat": st.base_quat.tolist(),
        "base_lin_vel": st.base_lin_vel.tolist(),
        "base_ang_vel": st.base_ang_vel.tolist(),
        "q": st.q.tolist(),
        "qdot": st.qdot.tolist(),
        "qdot_prev": env._qdot_prev.tolist(),
        "action": np.asarray(action).tolist(),
        "delta_g": env.command.delta_g.tolist(),
        "delta_t": env.command.delta_t,
        "contacts": np.asarray(mags).tolist(),
        "foot_forces": np.asarray(foot_forces).tolist(),
        "touchdowns": [float(t) for t in touchdowns],
        "style_score": None if style_score is None else float(style_score),
        "label": int(label),
        "reward_total": breakdown.total,
        "reward_terms": breakdown.as_dict(),
    }


def replay_rewards(trace_rows, model, weights=None, limits=None):
    """Recompute every step's reward from a recorded trace.

    Returns (recomputed totals, recorded totals); an oracle for the
    reward-evaluation path.
    """
    from .rewards import RewardLimits, RewardWeights

    weights = weights or RewardWeights()
    limits = limits or RewardLimits()
    recomputed, recorded = [], []
    for row in trace_rows:
        state = RobotState(
            base_pos=np.asarray(row["base_pos"]),
            base_quat=np.asarray(row["base_quat"]),
            base_lin_vel=np.asarray(row["base_lin_vel"]),
            base_ang_vel=np.asarray(row["base_ang_vel"]),
            q=np.asarray(row["q"]),
            qdot=np.asarray(row["qdot"]),
            last_action=np.asarray(row["action"]),
            feet_air_time=np.zeros(NUM_LEGS),
            episode_time=row["t"],
        )
        qddot = (state.qdot - np.asarray(row["qdot_prev"])) / model.dt_control
        bd = evaluate_rewards(
            np.asarray(row["delta_g"]), state, model, qddot,
            np.asarray(row["foot_forces"]), row["touchdowns"],
            weights, limits, style_score=row.get("style_score"))
        recomputed.append(bd.total)
        recorded.append(row["reward_total"])
    return np.asarray(recomputed), np.asarray(recorded)


def write_trace(path, trace):
    with open(path, "w") as f:
        for row in trace:
            f.write(json.dumps(row) + "\n")


def read_trace(path):
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]


class VectorEnv:
    """Synchronous batch of independent envs with auto-reset."""

    def __init__(self, envs):
        self.envs = list(envs)
        self.num_envs = len(self.envs)

    def reset_all(self):
        return stack_observations([env.reset() for env in self.envs])

    def step(self, actions):
        targets = np.empty((self.num_envs, 12))
        pres = []
        for i, (env, action) in enumerate(zip(self.envs, actions)):
            targets[i], pre = env.begin_step(action)
            pres.append(pre)
        all_records, foot_pos = physics_step_batch(
            [env.state for env in self.envs], targets,
            [env.model for env in self.envs], self.envs[0].terrain)

        obs_list, rewards, dones, time_outs, infos = [], [], [], [], []
        for i, (env, records, pre) in enumerate(zip(self.envs, all_records, pres)):
            pre["foot_positions"] = foot_pos[i]
            obs, breakdown, termination, info = env.finish_step(records, pre)
            info["reward_terms"] = breakdown.as_dict()
            info["env_index"] = i
            done = termination != Termination.Running
            if done:
                info["episode"] = {
                    "env_index": i,
                    "reached": env.reached,
                    "termination": int(termination),
                    "cell": (env.cell.row, env.cell.column) if env.cell is not None else None,
                }
                obs = env.reset()
            obs_list.append(obs)
            rewards.append(breakdown.total)
            dones.append(done)
            time_outs.append(info["time_out"])
            infos.append(info)
        return (
            stack_observations(obs_list),
            np.asarray(rewards),
            np.asarray(dones, dtype=bool),
            np.asarray(time_outs, dtype=bool),
            infos,
        )


def stack_observations(obs_list) -> dict:
    return {
        "p": np.stack([o.proprio for o in obs_list]).astype(np.float32),
        "s": np.stack([o.privileged for o in obs_list]).astype(np.float32),
        "c": np.stack([o.contacts for o in obs_list]).astype(np.float32),
        "g": np.stack([o.goal for o in obs_list]).astype(np.float32),
    }


def make_envs(model: RobotModel, terrain: Terrain, cfg: EnvConfig, num_envs: int,
              seed: int, cells=None, reward_weights: RewardWeights = None,
              reward_limits: RewardLimits = None) -> VectorEnv:
    seeds = np.random.SeedSequence(seed).spawn(num_envs)
    envs = []
    for i in range(num_envs):
        cell = None
        if cells:
            cell = cells[i % len(cells)]
        envs.append(TrapEnv(model, terrain, cfg, seed=seeds[i], cell=cell,
                            reward_weights=reward_weights, reward_limits=reward_limits))
    return VectorEnv(envs)
