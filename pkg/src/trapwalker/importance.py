"""Input-importance analysis from policy Jacobians.

For each input dimension i, importance is the input's bound span times the
column sum of the absolute Jacobian of the action output; group scores are
per-dimension averages, normalized into relative importance.
"""

from dataclasses import dataclass, field

import numpy as np

from .nn.networks import PolicyBundle
from .nn.tensor import Tensor, concat
from .observations import C_DIM, G_DIM, P_DIM, S_DIM

# Default semantic grouping of the full 67-value observation vector.
OBS_GROUPS = {
    "gravity": list(range(0, 3)),
    "ang_vel": list(range(3, 6)),
    "joint_pos": list(range(6, 18)),
    "joint_vel": list(range(18, 30)),
    "last_action": list(range(30, 42)),
    "lin_vel": list(range(42, 45)),
    "friction": [45],
    "contact": list(range(46, 63)),
    "goal": list(range(63, 67)),
}

# Per-link contact grouping (base, hips, thighs, calves, feet).
CONTACT_LINK_GROUPS = {
    "contact_base": [46],
    "contact_hip": [46 + 1 + 4 * l for l in range(4)],
    "contact_thigh": [46 + 2 + 4 * l for l in range(4)],
    "contact_calf": [46 + 3 + 4 * l for l in range(4)],
    "contact_foot": [46 + 4 + 4 * l for l in range(4)],
}


@dataclass
class ImportanceReport:
    per_input: np.ndarray           # S, (N,)
    group_scores: dict              # name -> mean importance
    relative: dict                  # name -> share, sums to 1
    bounds_low: np.ndarray
    bounds_high: np.ndarray
    groups: dict = field(default_factory=dict)


def importance_scores(jac_abs_sum: np.ndarray, bounds_low, bounds_high) -> np.ndarray:
    return (np.asarray(bounds_high) - np.asarray(bounds_low)) * jac_abs_sum


def group_relative(per_input: np.ndarray, groups: dict):
    scores = {name: float(np.mean(per_input[idx])) for name, idx in groups.items()}
    total = sum(scores.values())
    rel = {name: (v / total if total > 0 else 0.0) for name, v in scores.items()}
    return scores, rel


def numeric_jacobian(fn, x0: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite differences; fn maps (N,) -> (M,)."""
    x0 = np.asarray(x0, dtype=float)
    y0 = fn(x0)
    jac = np.zeros((len(y0), len(x0)))
    for i in range(len(x0)):
        xp, xm = x0.copy(), x0.copy()
        xp[i] += h
        xm[i] -= h
        jac[:, i] = (fn(xp) - fn(xm)) / (2 * h)
    return jac


def graph_jacobian(fn_graph, x0: np.ndarray, out_dim: int) -> np.ndarray:
    """Reverse-mode Jacobian: one backward pass per output dimension."""
    jac = np.zeros((out_dim, len(x0)))
    for j in range(out_dim):
        x = Tensor(np.asarray(x0, dtype=float)[None, :], requires_grad=True)
        out = fn_graph(x)
        out[0, j].sum().backward()
        jac[j] = x.grad[0]
    return jac


def bundle_policy_graph(bundle: PolicyBundle, hidden):
    """Stage-1 policy as a graph over the full 67-value observation."""
    h_tensors = [(Tensor(h.astype(np.float64)), Tensor(c.astype(np.float64)))
                 for h, c in hidden["actor"]]

    def fn(x: Tensor):
        p = x[:, 0:P_DIM]
        s = x[:, P_DIM:P_DIM + S_DIM]
        c = x[:, P_DIM + S_DIM:P_DIM + S_DIM + C_DIM]
        g = x[:, P_DIM + S_DIM + C_DIM:]
        latent = bundle.contact_encoder.forward(c)
        belief = concat([latent, s], axis=1)
        inp = concat([p, belief, g], axis=1)
        h, _ = bundle.actor_lstm.step_graph(inp, h_tensors)
        return bundle.actor_head.forward(h)

    return fn


def importance_analysis(policy_fn_graph, inputs_batch: np.ndarray, bounds_low,
                        bounds_high, groups: dict, out_dim: int = 12) -> ImportanceReport:
    """Batch-averaged Appendix-style importance of every input dimension.

    policy_fn_graph maps a (1, N) Tensor to a (1, M) Tensor.
    """
    inputs_batch = np.atleast_2d(np.asarray(inputs_batch, dtype=float))
    per_sample = []
    for x0 in inputs_batch:
        jac = graph_jacobian(policy_fn_graph, x0, out_dim)
        per_sample.append(importance_scores(np.abs(jac).sum(axis=0),
                                            bounds_low, bounds_high))
    per_input = np.mean(per_sample, axis=0)
    scores, rel = group_relative(per_input, groups)
    return ImportanceReport(
        per_input=per_input, group_scores=scores, relative=rel,
        bounds_low=np.asarray(bounds_low, dtype=float),
        bounds_high=np.asarray(bounds_high, dtype=float), groups=dict(groups))


def observed_bounds(venv, bundle: PolicyBundle, steps: int = 200,
                    rng=None) -> tuple:
    """Empirical per-channel min/max of the concatenated observation under the
    current policy; the bounds source for importance runs."""
    rng = rng or np.random.default_rng(0)
    obs = venv.reset_all()
    hidden = bundle.init_hidden(venv.num_envs)
    lows, highs = None, None
    for _ in range(steps):
        full = np.concatenate([obs["p"], obs["s"], obs["c"], obs["g"]], axis=1)
        lo, hi = full.min(axis=0), full.max(axis=0)
        lows = lo if lows is None else np.minimum(lows, lo)
        highs = hi if highs is None else np.maximum(highs, hi)
        belief = bundle.belief_np(obs["c"], obs["s"])
        mean, hidden["actor"] = bundle.actor_step_np(obs["p"], belief, obs["g"],
                                                     hidden["actor"])
        actions = mean + bundle.std_np * rng.standard_normal(mean.shape).astype(mean.dtype)
        obs, _, dones, _, _ = venv.step(actions)
        if dones.any():
            hidden = PolicyBundle.reset_done_envs(hidden, dones)
    return lows.astype(float), highs.astype(float)
