"""Annealed selection between the oracle belief and the estimator output."""

import numpy as np


def selection_probability(alpha: float, iteration: int) -> float:
    """P = alpha ** iteration; the chance of feeding the oracle belief."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must be in (0, 1]")
    if iteration < 0:
        raise ValueError("iteration must be >= 0")
    return float(alpha) ** int(iteration)


def draw_selection(p_true: float, num_envs: int, rng: np.random.Generator) -> np.ndarray:
    """One Bernoulli(p_true) draw per environment per rollout window."""
    return rng.uniform(size=num_envs) < p_true


def probability_selection(p_true: float, belief_est: np.ndarray, belief_true: np.ndarray,
                          rng: np.random.Generator):
    """Picks the oracle belief with probability p_true, per environment.

    Returns (selected beliefs, mask of oracle choices).
    """
    mask = draw_selection(p_true, belief_est.shape[0], rng)
    return np.where(mask[:, None], belief_true, belief_est), mask
