"""Synchronous rollout collection with recurrent state carried across windows."""

import copy

import numpy as np

from ..nn.networks import PolicyBundle, gaussian_log_prob_np
from .buffer import RolloutBuffer

def collect_rollouts(venv, bundle: PolicyBundle, steps: int, obs: dict, hidden: dict,
                     action_rng: np.random.Generator, gamma: float = 0.99,
                     mode: str = "stage1", p_true: float = 1.0,
                     selection_rng: np.random.Generator = None,
                     deterministic: bool = False, reward_scale: float = 1.0):
    """Fill a RolloutBuffer; returns (buffer, next_obs, next_hidden, stats).

    mode "stage1" feeds the actor the true belief [Enc(c), s]; mode "stage2"
    draws one Bernoulli(p_true) per env for the window and feeds either the
    true belief or the estimator output.
    """
    num_envs = venv.num_envs
    buffer = RolloutBuffer(num_envs, steps)
    buffer.initial_hidden = {
        key: [(h.copy(), c.copy()) for h, c in val] for key, val in hidden.items()
    }
    buffer.std = bundle.std_np.copy()

    if mode == "stage2":
        draws = selection_rng.uniform(size=num_envs)
        selected = draws < p_true
    else:
        selected = np.ones(num_envs, bool)
    buffer.selected_true = selected

    episode_stats = []
    term_sums = {}
    for t in range(steps):
        p, s, c, g = obs["p"], obs["s"], obs["c"], obs["g"]
        belief_true = bundle.belief_np(c, s)
        belief_est, hidden["estimator"] = bundle.estimate_belief_np(p, g, hidden["estimator"])
        if mode == "stage2":
            belief = np.where(selected[:, None], belief_true, belief_est)
        else:
            belief = belief_true
        mean, hidden["actor"] = bundle.actor_step_np(p, belief, g, hidden["actor"])
        value, hidden["critic"] = bundle.critic_step_np(p, s, c, g, hidden["critic"])
        if deterministic:
            actions = mean
            log_probs = gaussian_log_prob_np(mean, bundle.std_np, actions)
        else:
            actions, log_probs = bundle.sample_actions(mean, action_rng)

        next_obs, rewards, dones, time_outs, infos = venv.step(actions)
        rewards = rewards * reward_scale
        # Time-limit bootstrapping: treat timeouts as continuing episodes.
        rewards = rewards + gamma * value * time_outs

        buffer.add(
            t, p=p, s=s, c=c, g=g, belief=belief, actions=actions, means=mean,
            log_probs=log_probs, values=value, rewards=rewards, dones=dones,
            time_outs=time_outs,
            labels=np.array([info["label"] for info in infos]),
            amp_pre=np.stack([info["amp_pre"] for info in infos]),
            amp_post=np.stack([info["amp_post"] for info in infos]),
        )
        for info in infos:
            if "episode" in info:
                episode_stats.append(info["episode"])
            for name, val in info.get("reward_terms", {}).items():
                term_sums[name] = term_sums.get(name, 0.0) + val
        if dones.any():
            hidden = PolicyBundle.reset_done_envs(hidden, dones)
        obs = next_obs

    last_values, _ = bundle.critic_step_np(obs["p"], obs["s"], obs["c"], obs["g"],
                                           hidden["critic"])
    stats = {
        "episodes": episode_stats,
        "reward_term_means": {k: v / (steps * num_envs) for k, v in term_sums.items()},
        "mean_reward": float(buffer.rewards.mean()),
        "last_values": last_values,
    }
    return buffer, obs, hidden, stats
