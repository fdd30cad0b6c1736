"""Rollout storage for recurrent PPO: full (T, N, ...) tensors plus the
recurrent hidden states captured at the window start."""

from dataclasses import dataclass, field

import numpy as np

from ..observations import C_DIM, G_DIM, P_DIM, S_DIM


class RolloutBuffer:
    def __init__(self, num_envs: int, steps: int, action_dim: int = 12,
                 belief_dim: int = 12, amp_dim: int = 19):
        self.num_envs = num_envs
        self.steps = steps
        T, N = steps, num_envs
        f32 = np.float32
        self.p = np.zeros((T, N, P_DIM), f32)
        self.s = np.zeros((T, N, S_DIM), f32)
        self.c = np.zeros((T, N, C_DIM), f32)
        self.g = np.zeros((T, N, G_DIM), f32)
        self.belief = np.zeros((T, N, belief_dim), f32)
        self.actions = np.zeros((T, N, action_dim), f32)
        self.means = np.zeros((T, N, action_dim), f32)
        self.log_probs = np.zeros((T, N), np.float64)
        self.values = np.zeros((T, N), np.float64)
        self.rewards = np.zeros((T, N), np.float64)
        self.dones = np.zeros((T, N), bool)
        self.time_outs = np.zeros((T, N), bool)
        self.labels = np.zeros((T, N), np.int64)
        self.amp_pre = np.zeros((T, N, amp_dim), f32)
        self.amp_post = np.zeros((T, N, amp_dim), f32)
        self.std = None                      # (action_dim,) at collection time
        self.initial_hidden = None           # dict of LSTM hidden lists
        self.selected_true = np.ones(N, bool)  # stage-2 oracle/estimate choice
        self.advantages = None
        self.returns = None
        self._cursor = 0
        self.full = False

    def add(self, t: int, **slots):
        for key, value in slots.items():
            getattr(self, key)[t] = value
        self._cursor = t + 1
        self.full = self._cursor >= self.steps

    def require_full(self):
        if not self.full:
            raise RuntimeError("rollout buffer read before it was filled")

    def reset_mask(self, t: int) -> np.ndarray:
        """Envs whose hidden state must be zeroed before step t."""
        if t == 0:
            return np.zeros(self.num_envs, bool)
        return self.dones[t - 1]

    def env_slice(self, env_idx) -> dict:
        """Sub-buffer views over a subset of environments (minibatching)."""
        self.require_full()
        out = {}
        for name in ("p", "s", "c", "g", "belief", "actions", "means", "log_probs",
                     "values", "rewards", "dones", "time_outs", "labels",
                     "amp_pre", "amp_post", "advantages", "returns"):
            arr = getattr(self, name)
            out[name] = arr[:, env_idx] if arr is not None else None
        out["initial_hidden"] = {
            key: [(h[env_idx], c[env_idx]) for h, c in hidden]
            for key, hidden in self.initial_hidden.items()
        }
        return out
