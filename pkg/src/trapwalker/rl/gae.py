"""Generalized advantage estimation."""

import numpy as np


def compute_gae(rewards, values, dones, last_values, gamma: float, lam: float,
                normalize: bool = True):
    """Advantages and returns for (T, N) batches.

    dones[t] marks episode ends after step t; bootstrap stops there.
    Returns are advantages + values (pre-normalization); advantages are
    normalized to zero mean, unit std across the whole batch when asked.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    T = rewards.shape[0]
    adv = np.zeros_like(rewards)
    next_adv = np.zeros_like(np.asarray(last_values, dtype=np.float64))
    next_values = np.asarray(last_values, dtype=np.float64)
    for t in range(T - 1, -1, -1):
        not_done = 1.0 - dones[t].astype(np.float64)
        delta = rewards[t] + gamma * next_values * not_done - values[t]
        adv[t] = delta + gamma * lam * not_done * next_adv
        next_adv = adv[t]
        next_values = values[t]
    returns = adv + values
    if normalize:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    return adv, returns
