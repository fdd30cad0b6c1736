from .gae import compute_gae
from .buffer import RolloutBuffer
from .ppo import PpoConfig, adapt_learning_rate, ppo_update
from .rollout import collect_rollouts
