"""Two-stage training orchestration.

Stage 1 ("oracle") trains actor/critic with the true belief, the trap
classifier on contact labels, the belief estimator by reconstruction, and
the gait discriminator on reference-vs-policy transitions. Stage 2 resumes
from a stage-1 checkpoint and anneals the probability of feeding the oracle
belief, adapting the policy to the estimator it will deploy with.

Checkpoints are written at episode-aligned barriers: the loop resets all
environments and hidden states whenever it saves, so a resumed run replays
the identical trajectory.
"""

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from ..env import EnvConfig, TrapEnv, VectorEnv, make_envs
from ..nn.checkpoint import (
    bundle_param_arrays, load_bundle_params, load_checkpoint, restore_rng,
    rng_state, save_checkpoint,
)
from ..nn.networks import NetworkConfig, PolicyBundle
from ..nn.optim import Adam
from ..rl.ppo import PpoConfig, ppo_update
from ..rl.rollout import collect_rollouts
from ..robot import RobotModel
from ..terrain import CATEGORY_PLANE, Terrain, flat_terrain, gen_trap_curriculum
from .amp_data import AmpDataset, generate_amp_dataset
from .selection import selection_probability

METRIC_FIELDS = (
    "iteration", "mean_reward", "success_rate", "mean_row", "lr", "kl",
    "loss_surrogate", "loss_value", "loss_recon", "loss_classify",
    "loss_discriminator", "selection_p", "selection_rate",
)


@dataclass
class TerrainConfig:
    kind: str = "curriculum"        # "curriculum" or "flat"
    seed: int = 7
    categories: tuple = ()          # restrict curriculum columns, () = all
    min_row: int = 0
    max_row: int = 9
    cell_size_m: float = 10.0
    pit_depth: float = 0.4
    pole_height: float = 1.0
    trap_ring_radius: float = 1.2
    goal_ring_radius: float = 2.5


@dataclass
class PipelineConfig:
    stage: str = "stage1"
    iterations: int = 1000
    num_envs: int = 64
    seed: int = 0
    alpha: float = 0.997            # oracle-selection decay base, stage 2
    promote_after: int = 3          # consecutive successes to move up a row
    demote_after: int = 5           # consecutive failures to move down
    use_amp: bool = True
    checkpoint_every: int = 0       # 0 = only final
    log_every: int = 1


class RngPack:
    """Named, independently seeded random streams."""

    STREAMS = ("action", "selection", "update", "amp_ref")

    def __init__(self, seed: int):
        seqs = np.random.SeedSequence(seed).spawn(len(self.STREAMS))
        for name, seq in zip(self.STREAMS, seqs):
            setattr(self, name, np.random.default_rng(seq))

    def states(self) -> dict:
        return {name: rng_state(getattr(self, name)) for name in self.STREAMS}

    def restore(self, states: dict):
        for name in self.STREAMS:
            setattr(self, name, restore_rng(states[name]))


def build_terrain(tcfg: TerrainConfig) -> Terrain:
    if tcfg.kind == "flat":
        return flat_terrain()
    return gen_trap_curriculum(tcfg.seed, {
        "cell_size_m": tcfg.cell_size_m,
        "pit_depth": tcfg.pit_depth,
        "pole_height": tcfg.pole_height,
        "trap_ring_radius": tcfg.trap_ring_radius,
        "goal_ring_radius": tcfg.goal_ring_radius,
    })


def curriculum_cells(terrain: Terrain, tcfg: TerrainConfig):
    cells = [
        c for c in terrain.cells
        if (not tcfg.categories or c.category in tcfg.categories)
        and tcfg.min_row <= c.row <= tcfg.max_row
    ]
    return cells


def cell_lookup(terrain: Terrain) -> dict:
    return {(c.row, c.column): c for c in terrain.cells}


class CurriculumTracker:
    """Per-env row promotion: up after N straight successes, down after M fails."""

    def __init__(self, venv: VectorEnv, terrain: Terrain, pcfg: PipelineConfig,
                 tcfg: TerrainConfig):
        self.lookup = cell_lookup(terrain)
        self.pcfg = pcfg
        self.tcfg = tcfg
        self.success_streak = np.zeros(venv.num_envs, int)
        self.failure_streak = np.zeros(venv.num_envs, int)
        self.venv = venv

    def observe(self, episode_stats):
        for ep in episode_stats:
            idx = ep["env_index"]
            env = self.venv.envs[idx]
            if env.cell is None:
                continue
            if ep["reached"]:
                self.success_streak[idx] += 1
                self.failure_streak[idx] = 0
            else:
                self.failure_streak[idx] += 1
                self.success_streak[idx] = 0
            row, col = env.cell.row, env.cell.column
            if self.success_streak[idx] >= self.pcfg.promote_after:
                target = (min(row + 1, self.tcfg.max_row), col)
                self.success_streak[idx] = 0
                env.cell = self.lookup.get(target, env.cell)
            elif self.failure_streak[idx] >= self.pcfg.demote_after:
                target = (max(row - 1, self.tcfg.min_row), col)
                self.failure_streak[idx] = 0
                env.cell = self.lookup.get(target, env.cell)

    def mean_row(self) -> float:
        rows = [e.cell.row for e in self.venv.envs if e.cell is not None]
        return float(np.mean(rows)) if rows else 0.0


class Trainer:
    def __init__(self, pcfg: PipelineConfig, terrain_cfg: TerrainConfig = None,
                 env_cfg: EnvConfig = None, net_cfg: NetworkConfig = None,
                 ppo_cfg: PpoConfig = None, model: RobotModel = None,
                 reward_weights=None, reward_limits=None,
                 out_dir: str = "runs/default", amp_dataset: AmpDataset = None,
                 terrain: Terrain = None):
        self.pcfg = pcfg
        self.tcfg = terrain_cfg or TerrainConfig()
        self.env_cfg = env_cfg or EnvConfig()
        self.net_cfg = net_cfg or NetworkConfig()
        self.ppo_cfg = ppo_cfg or PpoConfig()
        self.model = model or RobotModel()
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)

        self.terrain = terrain if terrain is not None else build_terrain(self.tcfg)
        cells = curriculum_cells(self.terrain, self.tcfg) if self.terrain.cells else None
        self.venv = make_envs(self.model, self.terrain, self.env_cfg,
                              pcfg.num_envs, seed=pcfg.seed, cells=cells,
                              reward_weights=reward_weights, reward_limits=reward_limits)
        self.bundle = PolicyBundle(self.net_cfg, seed=pcfg.seed)
        self.optimizer = Adam(self.bundle.policy_parameters(), lr=self.ppo_cfg.learning_rate)
        self.aux_optimizer = Adam(self.bundle.aux_parameters(), lr=self.ppo_cfg.learning_rate)
        self.rngs = RngPack(pcfg.seed + 1)
        self.curriculum = CurriculumTracker(self.venv, self.terrain, pcfg, self.tcfg)
        self.iteration = 0
        self.amp = amp_dataset
        if pcfg.use_amp and self.amp is None:
            self.amp = generate_amp_dataset(self.tcfg.seed, self.model)
        self._wire_style_scorer()
        self.metrics_path = os.path.join(out_dir, "metrics.csv")
        self._metrics_initialized = os.path.exists(self.metrics_path)

    # -- plumbing ------------------------------------------------------------

    def _wire_style_scorer(self):
        if not self.pcfg.use_amp:
            return
        bundle = self.bundle

        def scorer(pre, post):
            pair = np.concatenate([pre, post]).astype(np.float32)[None, :]
            return float(bundle.disc_score_np(pair)[0])

        for env in self.venv.envs:
            env.style_scorer = scorer

    def _amp_sampler(self):
        if not self.pcfg.use_amp:
            return None
        return lambda n: self.amp.sample_pairs(n, self.rngs.amp_ref)

    def _log_metrics(self, row: dict):
        write_header = not self._metrics_initialized
        with open(self.metrics_path, "a", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=METRIC_FIELDS, extrasaction="ignore")
            if write_header:
                writer.writeheader()
            writer.writerow(row)
        self._metrics_initialized = True

    # -- training ------------------------------------------------------------

    def run(self, iterations: int = None, on_iteration=None):
        iterations = self.pcfg.iterations if iterations is None else iterations
        obs = self.venv.reset_all()
        hidden = self.bundle.init_hidden(self.venv.num_envs)
        stage = self.pcfg.stage
        successes, episodes = 0, 0

        for _ in range(iterations):
            p_true = 1.0
            if stage == "stage2":
                p_true = selection_probability(self.pcfg.alpha, self.iteration)
            buffer, obs, hidden, stats = collect_rollouts(
                self.venv, self.bundle, self.ppo_cfg.num_steps_per_env, obs, hidden,
                self.rngs.action, gamma=self.ppo_cfg.gamma,
                mode="stage2" if stage == "stage2" else "stage1",
                p_true=p_true, selection_rng=self.rngs.selection,
                reward_scale=self.ppo_cfg.reward_scale)
            try:
                losses, _ = ppo_update(
                    self.bundle, buffer, self.ppo_cfg, self.optimizer, stage=stage,
                    amp_ref_sampler=self._amp_sampler(), update_rng=self.rngs.update,
                    last_values=stats["last_values"], aux_optimizer=self.aux_optimizer)
            except FloatingPointError:
                self.iteration += 1
                continue

            self.curriculum.observe(stats["episodes"])
            successes += sum(1 for ep in stats["episodes"] if ep["reached"])
            episodes += len(stats["episodes"])
            self.iteration += 1

            if self.iteration % self.pcfg.log_every == 0:
                e = max(episodes, 1)
                self._log_metrics({
                    "iteration": self.iteration,
                    "mean_reward": stats["mean_reward"],
                    "success_rate": successes / e,
                    "mean_row": self.curriculum.mean_row(),
                    "lr": self.optimizer.lr,
                    "kl": losses["kl"],
                    "loss_surrogate": losses["surrogate"],
                    "loss_value": losses["value"],
                    "loss_recon": losses["recon"],
                    "loss_classify": losses["classify"],
                    "loss_discriminator": losses["discriminator"],
                    "selection_p": p_true,
                    "selection_rate": float(buffer.selected_true.mean()),
                })
                successes, episodes = 0, 0

            if (self.pcfg.checkpoint_every
                    and self.iteration % self.pcfg.checkpoint_every == 0):
                self.save(os.path.join(self.out_dir, f"ckpt_{self.iteration:06d}.json"))
                obs = self.venv.reset_all()
                hidden = self.bundle.init_hidden(self.venv.num_envs)

            if on_iteration is not None:
                verdict = on_iteration(self, stats, losses)
                if verdict == "stop":
                    break

        final = os.path.join(self.out_dir, "ckpt_final.json")
        self.save(final)
        return final

    # -- checkpointing ---------------------------------------------------------

    def save(self, path: str):
        rngs = self.rngs.states()
        rngs["envs"] = [rng_state(env.rng) for env in self.venv.envs]
        meta = {
            "stage": self.pcfg.stage,
            "alpha": self.pcfg.alpha,
            "optimizer": {"t": self.optimizer.t, "lr": self.optimizer.lr,
                          "aux_t": self.aux_optimizer.t, "aux_lr": self.aux_optimizer.lr},
            "net_cfg": {k: (list(v) if isinstance(v, tuple) else v)
                        for k, v in vars(self.net_cfg).items()},
            "env_cells": [
                (env.cell.row, env.cell.column) if env.cell is not None else None
                for env in self.venv.envs
            ],
        }
        opt_arrays = {f"policy.{k}": v for k, v in self.optimizer.state_arrays().items()}
        opt_arrays.update({f"aux.{k}": v for k, v in self.aux_optimizer.state_arrays().items()})
        save_checkpoint(path, bundle_param_arrays(self.bundle),
                        opt_arrays, rngs, self.iteration, meta)

    def load(self, path: str, reset_iteration: bool = False):
        params, opt, rngs, iteration, meta = load_checkpoint(path)
        load_bundle_params(self.bundle, params)
        opt_meta = meta.get("optimizer", {})
        if opt:
            policy_opt = {k[len("policy."):]: v for k, v in opt.items() if k.startswith("policy.")}
            aux_opt = {k[len("aux."):]: v for k, v in opt.items() if k.startswith("aux.")}
            if policy_opt:
                self.optimizer.load_state_arrays(policy_opt, int(opt_meta.get("t", iteration)))
            if aux_opt:
                self.aux_optimizer.load_state_arrays(aux_opt, int(opt_meta.get("aux_t", iteration)))
        if "lr" in opt_meta:
            self.optimizer.lr = float(opt_meta["lr"])
        if "aux_lr" in opt_meta:
            self.aux_optimizer.lr = float(opt_meta["aux_lr"])
        if rngs:
            env_states = rngs.pop("envs", None)
            self.rngs.restore(rngs)
            if env_states:
                for env, st in zip(self.venv.envs, env_states):
                    env.rng = restore_rng(st)
        lookup = cell_lookup(self.terrain)
        for env, key in zip(self.venv.envs, meta.get("env_cells", [])):
            if key is not None:
                env.cell = lookup.get(tuple(key), env.cell)
        self.iteration = 0 if reset_iteration else iteration
        self._wire_style_scorer()
        return meta


def load_bundle(path: str, net_cfg: NetworkConfig = None, seed: int = 0) -> PolicyBundle:
    """Stand-alone checkpoint load for evaluation tools."""
    params, _, _, _, meta = load_checkpoint(path)
    if net_cfg is None and "net_cfg" in meta:
        raw = {k: (tuple(v) if isinstance(v, list) else v) for k, v in meta["net_cfg"].items()}
        net_cfg = NetworkConfig(**raw)
    bundle = PolicyBundle(net_cfg or NetworkConfig(), seed=seed)
    load_bundle_params(bundle, params)
    return bundle


def train_stage1(pcfg: PipelineConfig = None, out_dir: str = "runs/stage1", **kwargs) -> str:
    pcfg = pcfg or PipelineConfig(stage="stage1")
    pcfg.stage = "stage1"
    trainer = Trainer(pcfg, out_dir=out_dir, **kwargs)
    return trainer.run()


def train_stage2(stage1_checkpoint: str, pcfg: PipelineConfig = None,
                 out_dir: str = "runs/stage2", **kwargs) -> str:
    if not os.path.exists(stage1_checkpoint):
        raise FileNotFoundError(f"stage-1 checkpoint not found: {stage1_checkpoint}")
    pcfg = pcfg or PipelineConfig(stage="stage2")
    pcfg.stage = "stage2"
    trainer = Trainer(pcfg, out_dir=out_dir, **kwargs)
    params, _, _, _, _ = load_checkpoint(stage1_checkpoint)
    load_bundle_params(trainer.bundle, params)
    return trainer.run()


def evaluate_success(bundle: PolicyBundle, venv: VectorEnv, episodes: int,
                     mode: str = "stage2", deterministic: bool = True,
                     max_steps: int = 2000) -> float:
    """Deterministic goal-reach success rate over completed episodes."""
    obs = venv.reset_all()
    hidden = bundle.init_hidden(venv.num_envs)
    done_count, reached_count = 0, 0
    rng = np.random.default_rng(0)
    for _ in range(max_steps):
        p, s, c, g = obs["p"], obs["s"], obs["c"], obs["g"]
        if mode == "stage1":
            belief = bundle.belief_np(c, s)
        else:
            belief, hidden["estimator"] = bundle.estimate_belief_np(p, g, hidden["estimator"])
        mean, hidden["actor"] = bundle.actor_step_np(p, belief, g, hidden["actor"])
        actions = mean if deterministic else mean + bundle.std_np * rng.standard_normal(mean.shape)
        obs, _, dones, _, infos = venv.step(actions)
        for info in infos:
            if "episode" in info:
                done_count += 1
                reached_count += int(info["episode"]["reached"])
        if dones.any():
            hidden = PolicyBundle.reset_done_envs(hidden, dones)
        if done_count >= episodes:
            break
    return reached_count / max(done_count, 1)
