"""The full network set: recurrent actor/critic, belief estimator, contact
encoder, trap classifier, gait discriminator.

The actor consumes [proprio, belief, goal] where belief is the 12-value
concatenation of the encoded contact latent (8) and the explicit privileged
state (4). The critic sees the raw privileged and contact groups. At
deployment only proprio and goal enter from outside; the belief comes from
the estimator.
"""

from dataclasses import dataclass, field

import numpy as np

from ..observations import C_DIM, G_DIM, P_DIM, S_DIM
from .layers import LSTM, MLP, Module
from .tensor import Tensor, concat, elu_prime, softmax

ACTION_DIM = 12
CONTACT_LATENT_DIM = 8
BELIEF_DIM = CONTACT_LATENT_DIM + S_DIM          # 12
ACTOR_IN = P_DIM + BELIEF_DIM + G_DIM            # 58
CRITIC_IN = P_DIM + S_DIM + C_DIM + G_DIM        # 67
ESTIMATOR_IN = P_DIM + G_DIM                     # 46
AMP_PAIR_DIM = 38
NUM_CLASSES = 4

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class NetworkConfig:
    """Full-scale hidden widths; scale_divisor shrinks them for desk runs."""
    actor_hidden: tuple = (512, 256)
    critic_hidden: tuple = (512, 256)
    estimator_hidden: tuple = (256, 256)
    latent_encoder_hidden: tuple = (256, 256)
    contact_encoder_hidden: tuple = (32, 16)
    discriminator_hidden: tuple = (256, 256)
    classifier_hidden: tuple = (16,)
    scale_divisor: int = 4
    init_action_std: float = 0.4
    dtype: str = "float32"

    def scaled(self, sizes) -> tuple:
        return tuple(max(int(s) // self.scale_divisor, 4) for s in sizes)


class PolicyBundle(Module):
    def __init__(self, cfg: NetworkConfig = None, seed: int = 0):
        cfg = cfg or NetworkConfig()
        self.cfg = cfg
        dtype = np.dtype(cfg.dtype).type
        rng = np.random.default_rng(seed)
        self.actor_lstm = LSTM(ACTOR_IN, cfg.scaled(cfg.actor_hidden), rng, dtype)
        self.actor_head = _linear(self.actor_lstm.out_dim, ACTION_DIM, rng, dtype)
        self.critic_lstm = LSTM(CRITIC_IN, cfg.scaled(cfg.critic_hidden), rng, dtype)
        self.critic_head = _linear(self.critic_lstm.out_dim, 1, rng, dtype)
        self.estimator = LSTM(ESTIMATOR_IN, cfg.scaled(cfg.estimator_hidden), rng, dtype)
        self.latent_encoder = MLP(self.estimator.out_dim, cfg.scaled(cfg.latent_encoder_hidden),
                                  BELIEF_DIM, rng, dtype=dtype)
        self.contact_encoder = MLP(C_DIM, cfg.scaled(cfg.contact_encoder_hidden),
                                   CONTACT_LATENT_DIM, rng, dtype=dtype)
        self.classifier = MLP(CONTACT_LATENT_DIM, cfg.scaled(cfg.classifier_hidden),
                              NUM_CLASSES, rng, dtype=dtype)
        self.discriminator = MLP(AMP_PAIR_DIM, cfg.scaled(cfg.discriminator_hidden),
                                 1, rng, dtype=dtype)
        self.action_std = Tensor(np.full(ACTION_DIM, cfg.init_action_std, dtype=dtype),
                                 requires_grad=True)

    # -- hidden-state plumbing ----------------------------------------------

    def policy_parameters(self):
        """Actor-side parameters, governed by the KL trust region."""
        out = [(f"actor_lstm.{n}", p) for n, p in self.actor_lstm.parameters()]
        out += [(f"actor_head.{n}", p) for n, p in self.actor_head.parameters()]
        out.append(("action_std", self.action_std))
        return out

    def aux_parameters(self):
        """Everything the adaptive policy lr should not throttle."""
        policy_ids = {id(p) for _, p in self.policy_parameters()}
        return [(n, p) for n, p in self.parameters() if id(p) not in policy_ids]

    def init_hidden(self, batch: int) -> dict:
        return {
            "actor": self.actor_lstm.init_hidden(batch),
            "critic": self.critic_lstm.init_hidden(batch),
            "estimator": self.estimator.init_hidden(batch),
        }

    @staticmethod
    def reset_done_envs(hidden: dict, done_mask: np.ndarray) -> dict:
        keep = ~np.asarray(done_mask, dtype=bool)
        return {k: LSTM.mask_hidden(v, keep) for k, v in hidden.items()}

    # -- rollout (numpy) paths ------------------------------------------------

    def encode_contacts_np(self, c: np.ndarray) -> np.ndarray:
        return self.contact_encoder.forward_np(c)

    def belief_np(self, c: np.ndarray, s: np.ndarray) -> np.ndarray:
        return np.concatenate([self.encode_contacts_np(c), s], axis=1)

    def estimate_belief_np(self, p, g, hidden):
        h, hidden = self.estimator.step_np(np.concatenate([p, g], axis=1), hidden)
        return self.latent_encoder.forward_np(h), hidden

    def actor_step_np(self, p, belief, g, hidden):
        x = np.concatenate([p, belief, g], axis=1)
        h, hidden = self.actor_lstm.step_np(x, hidden)
        return self.actor_head.forward_np(h), hidden

    def critic_step_np(self, p, s, c, g, hidden):
        x = np.concatenate([p, s, c, g], axis=1)
        h, hidden = self.critic_lstm.step_np(x, hidden)
        return self.critic_head.forward_np(h)[:, 0], hidden

    def classify_np(self, contact_latent: np.ndarray) -> np.ndarray:
        """Class probabilities over (none, bar, pit, pole)."""
        return softmax(self.classifier.forward_np(contact_latent))

    def disc_score_np(self, pairs: np.ndarray) -> np.ndarray:
        return self.discriminator.forward_np(pairs)[:, 0]

    @property
    def std_np(self) -> np.ndarray:
        return self.action_std.data

    def sample_actions(self, mean: np.ndarray, rng: np.random.Generator):
        noise = rng.standard_normal(mean.shape).astype(mean.dtype)
        actions = mean + self.std_np * noise
        return actions, gaussian_log_prob_np(mean, self.std_np, actions)

    def clamp_std(self, min_std: float):
        np.maximum(self.action_std.data, min_std, out=self.action_std.data)


def _linear(in_dim, out_dim, rng, dtype):
    from .layers import Linear
    return Linear(in_dim, out_dim, rng, dtype)


# -- Gaussian policy math ----------------------------------------------------

def gaussian_log_prob_np(mean, std, actions) -> np.ndarray:
    z = (actions - mean) / std
    return -0.5 * (z * z).sum(axis=-1) - np.log(std).sum() - 0.5 * LOG_2PI * mean.shape[-1]


def gaussian_log_prob_graph(mean: Tensor, std: Tensor, actions: np.ndarray) -> Tensor:
    z = (Tensor(actions) - mean) / std
    return (z * z).sum(axis=1) * -0.5 - std.log().sum() - 0.5 * LOG_2PI * actions.shape[-1]


def gaussian_entropy_graph(std: Tensor, dim: int = ACTION_DIM) -> Tensor:
    return std.log().sum() + 0.5 * dim * (1.0 + LOG_2PI)


def gaussian_kl_np(mean_old, std_old, mean_new, std_new) -> np.ndarray:
    """Mean KL(old || new) per sample, the adaptive-lr signal."""
    var_new = std_new * std_new
    kl = (np.log(std_new / std_old)
          + (std_old * std_old + (mean_old - mean_new) ** 2) / (2.0 * var_new) - 0.5)
    return kl.sum(axis=-1)


# -- discriminator gradient penalty -------------------------------------------

def discriminator_input_gradients(disc: MLP, pairs: np.ndarray):
    """Scores and per-sample input-gradient L2 norms, both as graph tensors.

    The backward pass of the MLP is written out with graph ops so the
    gradient-penalty term itself remains differentiable w.r.t. parameters.
    """
    x = Tensor(pairs)
    scores, preacts = disc.forward_with_preacts(x)
    g = Tensor(np.ones_like(scores.data))
    for layer, z in zip(reversed(disc.layers[1:]), reversed(preacts)):
        g = (g @ layer.w.T) * elu_prime(z)
    g = g @ disc.layers[0].w.T
    grad_norms = (g * g).sum(axis=1).maximum(1e-24).sqrt()
    return scores[:, 0], grad_norms
