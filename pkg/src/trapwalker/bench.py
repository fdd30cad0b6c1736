"""Runway benchmark, command sweeps, and latent export.

Robots spawn at the left end of a 5 x 60 m runway and are steered by fake
goal commands aimed at a point on the centerline ahead of them. A robot
succeeds when it comes within 0.2 m of the target point inside the time
cap; failures are booked at the full cap time.
"""

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .env import EnvConfig, TrapEnv
from .geom import quat_yaw, yaw_rotate_inverse
from .nn.networks import PolicyBundle
from .observations import GoalCommand, apply_standstill
from .physics import Termination
from .terrain import RUNWAY_LENGTH, gen_benchmark_runway

TIME_LIMIT_S = 300.0
SUCCESS_RADIUS_M = 0.2

OUTCOME_SUCCESS = "success"
OUTCOME_STUCK = "stuck"
OUTCOME_FELL = "fell"
OUTCOME_OFF_RUNWAY = "off_runway"


@dataclass
class RobotRecord:
    outcome: str
    pass_time: float          # s; exactly TIME_LIMIT_S for failures
    travel_distance: float    # m along the runway axis


@dataclass
class BenchmarkResult:
    variant: str
    n_robots: int
    success_rate: float
    avg_pass_time: float
    avg_travel_distance: float
    records: list = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "variant": self.variant,
            "n_robots": self.n_robots,
            "success_rate": self.success_rate,
            "avg_pass_time": self.avg_pass_time,
            "avg_travel_distance": self.avg_travel_distance,
        }


def compute_metrics(records) -> tuple:
    """(success rate, average pass time, average travel distance)."""
    if not records:
        raise ValueError("no robot records")
    n = len(records)
    rate = sum(1 for r in records if r.outcome == OUTCOME_SUCCESS) / n
    avg_time = sum(r.pass_time for r in records) / n
    avg_dist = sum(r.travel_distance for r in records) / n
    return rate, avg_time, avg_dist


def steer_command(state, target, look_ahead: float = 2.0, magnitude: float = 2.0,
                  delta_t: float = 4.0) -> GoalCommand:
    """Fake command toward the centerline, constant magnitude; aims straight
    at the target point once it is close enough."""
    pos = state.base_pos
    to_target = np.array([target[0] - pos[0], target[1] - pos[1], 0.0])
    if np.linalg.norm(to_target[:2]) > look_ahead:
        aim = np.array([pos[0] + look_ahead, target[1], 0.0])
        direction = aim - np.array([pos[0], pos[1], 0.0])
        direction = direction / max(np.linalg.norm(direction), 1e-9)
        offset_world = magnitude * direction
    else:
        offset_world = to_target
    delta_g = yaw_rotate_inverse(quat_yaw(state.base_quat), offset_world)
    delta_g[2] = 0.0
    return GoalCommand(world_goal=np.asarray(target, dtype=float),
                       delta_g=apply_standstill(delta_g),
                       delta_t=delta_t, deadline=float("inf"), fake=True)


def run_benchmark(bundle: PolicyBundle, variant: str, n_robots: int = 1000,
                  seed: int = 0, time_limit: float = TIME_LIMIT_S,
                  batch_size: int = 64, env_cfg: EnvConfig = None,
                  model=None, command_period_s: float = 1.0) -> BenchmarkResult:
    from .robot import RobotModel

    terrain = gen_benchmark_runway(variant, seed)
    target = np.array([*terrain.meta["target"], 0.0])
    model = model or RobotModel()
    env_cfg = env_cfg or EnvConfig(episode_length_s=time_limit)
    env_cfg.episode_length_s = time_limit
    records = []
    seeds = np.random.SeedSequence(seed).spawn(n_robots)
    period_steps = max(1, int(round(command_period_s / model.dt_control)))

    for batch_start in range(0, n_robots, batch_size):
        batch_seeds = seeds[batch_start: batch_start + batch_size]
        envs = [TrapEnv(model, terrain, env_cfg, seed=s) for s in batch_seeds]
        n = len(envs)
        obs_list = []
        for env in envs:
            env.reset()
            env.set_fake_command(steer_command(env.state, target))
            obs_list.append(env._observe())
        alive = np.ones(n, bool)
        hidden = bundle.init_hidden(n)
        results = [None] * n
        from .env import stack_observations
        obs = stack_observations(obs_list)

        max_steps = int(round(time_limit / model.dt_control))
        for step in range(max_steps):
            if not alive.any():
                break
            belief, hidden["estimator"] = bundle.estimate_belief_np(
                obs["p"], obs["g"], hidden["estimator"])
            mean, hidden["actor"] = bundle.actor_step_np(
                obs["p"], belief, obs["g"], hidden["actor"])
            new_obs_list = []
            for i, env in enumerate(envs):
                if not alive[i]:
                    new_obs_list.append(obs_list[i])
                    continue
                if step % period_steps == 0:
                    env.set_fake_command(steer_command(env.state, target))
                o, _, termination, info = env.step(mean[i])
                new_obs_list.append(o)
                obs_list[i] = o
                x = float(env.state.base_pos[0])
                dist_to_target = float(np.linalg.norm(env.state.base_pos[:2] - target[:2]))
                if dist_to_target < SUCCESS_RADIUS_M:
                    results[i] = RobotRecord(OUTCOME_SUCCESS,
                                             round(env.state.episode_time, 4),
                                             RUNWAY_LENGTH)
                    alive[i] = False
                elif termination == Termination.Fell:
                    results[i] = RobotRecord(OUTCOME_FELL, time_limit,
                                             float(np.clip(x, 0.0, RUNWAY_LENGTH)))
                    alive[i] = False
                elif termination == Termination.OutOfBounds:
                    results[i] = RobotRecord(OUTCOME_OFF_RUNWAY, time_limit,
                                             float(np.clip(x, 0.0, RUNWAY_LENGTH)))
                    alive[i] = False
            obs = stack_observations(new_obs_list)

        for i, env in enumerate(envs):
            if results[i] is None:
                x = float(env.state.base_pos[0])
                results[i] = RobotRecord(OUTCOME_STUCK, time_limit,
                                         float(np.clip(x, 0.0, RUNWAY_LENGTH)))
        records.extend(results)

    rate, avg_time, avg_dist = compute_metrics(records)
    return BenchmarkResult(variant=variant, n_robots=n_robots, success_rate=rate,
                           avg_pass_time=avg_time, avg_travel_distance=avg_dist,
                           records=records)


def save_benchmark(result: BenchmarkResult, out_dir: str):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, f"benchmark_{result.variant}.json"), "w") as f:
        json.dump(result.summary(), f, indent=1)
    with open(os.path.join(out_dir, f"benchmark_{result.variant}.csv"), "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["outcome", "pass_time_s", "travel_distance_m"])
        for r in result.records:
            writer.writerow([r.outcome, r.pass_time, r.travel_distance])


def _single_bar_terrain(bar_height: float, seed: int):
    """One bar across a short runway, for command-timing sweeps."""
    from .terrain import Terrain, TrapKind, TrapPrimitive
    t = gen_benchmark_runway("Bar", seed)
    keep = TrapPrimitive(kind=TrapKind.Bar, shape="segment", center=(4.0, 2.5),
                         label_id=0, height=bar_height, width=0.05,
                         axis=(0.0, 1.0), half_length=2.5)
    return Terrain(heightfield=t.heightfield, cell_size=t.cell_size, origin=t.origin,
                   extents=t.extents, traps=[keep],
                   meta={"kind": "single_bar", "spawn": (1.0, 2.5), "target": (8.0, 2.5)})


def sweep_delta_t(bundle: PolicyBundle, dt_values, trials: int = 100, seed: int = 0,
                  bar_height: float = 0.2, time_limit: float = 20.0,
                  env_cfg: EnvConfig = None, model=None):
    """Success rate of crossing one bar per constant goal-deadline setting."""
    from .robot import RobotModel

    model = model or RobotModel()
    terrain = _single_bar_terrain(bar_height, seed)
    target = np.array([*terrain.meta["target"], 0.0])
    env_cfg = env_cfg or EnvConfig()
    env_cfg.episode_length_s = time_limit
    rows = []
    for dt_value in dt_values:
        seeds = np.random.SeedSequence(seed).spawn(trials)
        successes = 0
        for s in seeds:
            env = TrapEnv(model, terrain, env_cfg, seed=s)
            env.reset()
            env.set_fake_command(steer_command(env.state, target, delta_t=dt_value))
            hidden = bundle.init_hidden(1)
            obs = env._observe()
            for step in range(int(time_limit / model.dt_control)):
                if step % 50 == 0:
                    env.set_fake_command(steer_command(env.state, target, delta_t=dt_value))
                    obs = env._observe()
                from .env import stack_observations
                ob = stack_observations([obs])
                belief, hidden["estimator"] = bundle.estimate_belief_np(
                    ob["p"], ob["g"], hidden["estimator"])
                mean, hidden["actor"] = bundle.actor_step_np(
                    ob["p"], belief, ob["g"], hidden["actor"])
                obs, _, termination, _ = env.step(mean[0])
                if np.linalg.norm(env.state.base_pos[:2] - target[:2]) < SUCCESS_RADIUS_M:
                    successes += 1
                    break
                if termination in (Termination.Fell, Termination.OutOfBounds,
                                   Termination.Timeout):
                    break
        rows.append({"delta_t": float(dt_value), "trials": trials,
                     "success_rate": successes / trials})
    return rows


def sweep_delta_g(bundle: PolicyBundle, dis_values, theta_values, seed: int = 0,
                  window_steps: int = 50, env_cfg: EnvConfig = None, model=None):
    """Mean body-frame velocities over one second per constant (dis, theta)."""
    from .robot import RobotModel
    from .terrain import flat_terrain
    from .env import stack_observations
    from .geom import quat_rotate_inverse

    model = model or RobotModel()
    terrain = flat_terrain(40.0, 40.0)
    env_cfg = env_cfg or EnvConfig()
    env_cfg.episode_length_s = 60.0
    rows = []
    for dis in dis_values:
        for theta in theta_values:
            delta_g = np.array([dis * np.cos(theta), dis * np.sin(theta), 0.0])
            cmd = GoalCommand(world_goal=np.zeros(3), delta_g=apply_standstill(delta_g),
                              delta_t=4.0, deadline=float("inf"), fake=True)
            env = TrapEnv(model, terrain, env_cfg, seed=np.random.SeedSequence(seed))
            env.set_fake_command(cmd)
            env.reset()
            hidden = bundle.init_hidden(1)
            obs = env._observe()
            # settle into the gait for half a second before measuring
            vels = []
            for step in range(window_steps + 25):
                ob = stack_observations([obs])
                belief, hidden["estimator"] = bundle.estimate_belief_np(
                    ob["p"], ob["g"], hidden["estimator"])
                mean, hidden["actor"] = bundle.actor_step_np(
                    ob["p"], belief, ob["g"], hidden["actor"])
                obs, _, termination, _ = env.step(mean[0])
                if step >= 25:
                    v_body = quat_rotate_inverse(env.state.base_quat, env.state.base_lin_vel)
                    vels.append([v_body[0], v_body[1], env.state.base_ang_vel[2]])
                if termination != Termination.Running:
                    break
            vels = np.asarray(vels[:window_steps])
            rows.append({
                "dis": float(dis), "theta": float(theta),
                "mean_vx": float(vels[:, 0].mean()),
                "mean_vy": float(vels[:, 1].mean()),
                "mean_omega": float(vels[:, 2].mean()),
                "steps": int(len(vels)),
            })
    return rows


def export_latents(bundle: PolicyBundle, terrain, episodes: int = 8, seed: int = 0,
                   env_cfg: EnvConfig = None, model=None, cells=None):
    """Rows of (12 estimated belief values, trap label) for projection tools."""
    from .robot import RobotModel
    from .env import stack_observations

    model = model or RobotModel()
    env_cfg = env_cfg or EnvConfig()
    rows = []
    seeds = np.random.SeedSequence(seed).spawn(episodes)
    for ep in range(episodes):
        cell = cells[ep % len(cells)] if cells else None
        env = TrapEnv(model, terrain, env_cfg, seed=seeds[ep], cell=cell)
        obs = env.reset()
        hidden = bundle.init_hidden(1)
        for _ in range(int(env_cfg.episode_length_s / model.dt_control)):
            ob = stack_observations([obs])
            belief, hidden["estimator"] = bundle.estimate_belief_np(
                ob["p"], ob["g"], hidden["estimator"])
            mean, hidden["actor"] = bundle.actor_step_np(
                ob["p"], belief, ob["g"], hidden["actor"])
            obs, _, termination, info = env.step(mean[0])
            rows.append(list(np.asarray(belief[0], dtype=float)) + [int(info["label"])])
            if termination != Termination.Running:
                break
    return rows


def write_rows_csv(path, rows, fieldnames=None):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as f:
        if rows and isinstance(rows[0], dict):
            writer = csv.DictWriter(f, fieldnames=fieldnames or list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
        else:
            writer = csv.writer(f)
            if fieldnames:
                writer.writerow(fieldnames)
            writer.writerows(rows)
