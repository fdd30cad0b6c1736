"""Recurrent PPO update over truncated windows, with the auxiliary losses
(belief reconstruction, trap classification, gait discriminator) folded into
one optimization target."""

import copy
from dataclasses import dataclass, field

import numpy as np

from ..nn.layers import LSTM
from ..nn.networks import (
    PolicyBundle, discriminator_input_gradients, gaussian_entropy_graph,
    gaussian_kl_np, gaussian_log_prob_graph,
)
from ..nn.optim import Adam, clip_grad_norm
from ..nn.tensor import Tensor, concat, cross_entropy, mse
from ..rewards import amp_discriminator_loss
from .buffer import RolloutBuffer
from .gae import compute_gae


@dataclass
class PpoConfig:
    clip_param: float = 0.2
    gamma: float = 0.99
    lam: float = 0.95
    desired_kl: float = 0.01
    entropy_coef: float = 0.01
    learning_rate: float = 1e-3
    max_grad_norm: float = 1.0
    num_mini_batch: int = 4
    clip_min_std: float = 0.05
    num_steps_per_env: int = 24
    num_learning_epochs: int = 5
    value_loss_coef: float = 1.0
    reward_scale: float = 0.02      # control-period scaling of buffered rewards
    alpha_gp: float = 10.0
    lr_min: float = 1e-5
    lr_max: float = 1e-2


def adapt_learning_rate(lr: float, measured_kl: float, cfg: PpoConfig) -> float:
    """Shrink when KL overshoots 2x the target, grow when under half of it."""
    if measured_kl > 2.0 * cfg.desired_kl:
        lr = lr / 1.5
    elif 0.0 <= measured_kl < 0.5 * cfg.desired_kl:
        lr = lr * 1.5
    return float(np.clip(lr, cfg.lr_min, cfg.lr_max))


def clipped_surrogate(ratio: Tensor, advantages: np.ndarray, clip_param: float) -> Tensor:
    """Pessimistic clipped policy objective, to be maximized."""
    adv = Tensor(advantages)
    return (ratio * adv).minimum(
        ratio.clip(1.0 - clip_param, 1.0 + clip_param) * adv).mean()


def _unroll_actor(bundle, mb, stage: str):
    """Graph of action means over the window. Stage 1 routes gradients through
    the contact encoder; stage 2 treats the fed belief as data."""
    T = mb["p"].shape[0]
    hidden = [(Tensor(h), Tensor(c)) for h, c in mb["initial_hidden"]["actor"]]
    means = []
    for t in range(T):
        keep = ~mb["dones"][t - 1] if t > 0 else None
        if keep is not None and not keep.all():
            hidden = LSTM.mask_hidden_graph(hidden, keep)
        if stage == "stage1":
            latent = bundle.contact_encoder.forward(Tensor(mb["c"][t]))
            belief = concat([latent, Tensor(mb["s"][t])], axis=1)
        else:
            belief = Tensor(mb["belief"][t])
        x = concat([Tensor(mb["p"][t]), belief, Tensor(mb["g"][t])], axis=1)
        h, hidden = bundle.actor_lstm.step_graph(x, hidden)
        means.append(bundle.actor_head.forward(h))
    return means


def _unroll_critic(bundle, mb):
    T = mb["p"].shape[0]
    hidden = [(Tensor(h), Tensor(c)) for h, c in mb["initial_hidden"]["critic"]]
    values = []
    for t in range(T):
        keep = ~mb["dones"][t - 1] if t > 0 else None
        if keep is not None and not keep.all():
            hidden = LSTM.mask_hidden_graph(hidden, keep)
        x = concat([Tensor(mb["p"][t]), Tensor(mb["s"][t]), Tensor(mb["c"][t]),
                    Tensor(mb["g"][t])], axis=1)
        h, hidden = bundle.critic_lstm.step_graph(x, hidden)
        values.append(bundle.critic_head.forward(h))
    return values


def _unroll_estimator(bundle, mb):
    T = mb["p"].shape[0]
    hidden = [(Tensor(h), Tensor(c)) for h, c in mb["initial_hidden"]["estimator"]]
    latents = []
    for t in range(T):
        keep = ~mb["dones"][t - 1] if t > 0 else None
        if keep is not None and not keep.all():
            hidden = LSTM.mask_hidden_graph(hidden, keep)
        x = concat([Tensor(mb["p"][t]), Tensor(mb["g"][t])], axis=1)
        h, hidden = bundle.estimator.step_graph(x, hidden)
        latents.append(bundle.latent_encoder.forward(h))
    return latents


def ppo_update(bundle: PolicyBundle, buffer: RolloutBuffer, cfg: PpoConfig,
               optimizer: Adam, stage: str = "stage1", amp_ref_sampler=None,
               update_rng: np.random.Generator = None, last_values=None,
               aux_optimizer: Adam = None):
    """One PPO iteration over a filled buffer. Returns (losses, new_lr).

    optimizer owns the actor parameters and follows the KL-adaptive learning
    rate; aux_optimizer (critic, estimator, encoders, discriminator) keeps a
    fixed rate. amp_ref_sampler(n) yields n reference gait transition pairs;
    when absent the discriminator loss is skipped. last_values bootstraps the
    advantage recursion past the window end.
    """
    buffer.require_full()
    update_rng = update_rng or np.random.default_rng(0)
    if last_values is None:
        last_values = np.zeros(buffer.num_envs)
    adv, returns = compute_gae(buffer.rewards, buffer.values, buffer.dones,
                               last_values, cfg.gamma, cfg.lam)
    buffer.advantages = adv.astype(np.float32)
    buffer.returns = returns.astype(np.float32)

    snapshot = {n: p.data.copy() for n, p in bundle.parameters()}
    optimizers = [optimizer] + ([aux_optimizer] if aux_optimizer is not None else [])
    opt_snapshot = [(copy.deepcopy(o.m), copy.deepcopy(o.v), o.t) for o in optimizers]

    num_envs = buffer.num_envs
    n_mb = min(cfg.num_mini_batch, num_envs)
    loss_sums = {"surrogate": 0.0, "value": 0.0, "recon": 0.0, "classify": 0.0,
                 "discriminator": 0.0, "total": 0.0, "entropy": 0.0, "kl": 0.0}
    n_updates = 0

    for _ in range(cfg.num_learning_epochs):
        order = update_rng.permutation(num_envs)
        for chunk in np.array_split(order, n_mb):
            mb = buffer.env_slice(chunk)
            T, n = mb["p"].shape[:2]
            flatten = lambda lst: concat(lst, axis=0)

            means = flatten(_unroll_actor(bundle, mb, stage))
            std = bundle.action_std.maximum(cfg.clip_min_std)
            actions_flat = mb["actions"].reshape(T * n, -1)
            logp = gaussian_log_prob_graph(means, std, actions_flat)
            old_logp = mb["log_probs"].reshape(T * n)
            adv_flat = mb["advantages"].reshape(T * n)
            ratio = (logp - Tensor(old_logp)).exp()
            entropy = gaussian_entropy_graph(std)
            surrogate_loss = (-clipped_surrogate(ratio, adv_flat, cfg.clip_param)
                              - cfg.entropy_coef * entropy)

            values = flatten(_unroll_critic(bundle, mb))[:, 0]
            value_loss = mse(values, mb["returns"].reshape(T * n)) * cfg.value_loss_coef

            latents = flatten(_unroll_estimator(bundle, mb))
            belief_target = bundle.belief_np(mb["c"].reshape(T * n, -1),
                                             mb["s"].reshape(T * n, -1))
            recon_loss = mse(latents, belief_target)

            if stage == "stage1":
                enc = bundle.contact_encoder.forward(Tensor(mb["c"].reshape(T * n, -1)))
                logits = bundle.classifier.forward(enc)
                classify_loss = cross_entropy(logits, mb["labels"].reshape(T * n))
            else:
                classify_loss = Tensor(np.zeros(()))

            if amp_ref_sampler is not None:
                policy_pairs = np.concatenate(
                    [mb["amp_pre"].reshape(T * n, -1), mb["amp_post"].reshape(T * n, -1)],
                    axis=1)
                ref_pairs = amp_ref_sampler(T * n).astype(policy_pairs.dtype)
                ref_scores, grad_norms = discriminator_input_gradients(
                    bundle.discriminator, ref_pairs)
                pol_scores = bundle.discriminator.forward(Tensor(policy_pairs))[:, 0]
                disc_loss = amp_discriminator_loss(ref_scores, pol_scores, grad_norms,
                                                   alpha_gp=cfg.alpha_gp)
            else:
                disc_loss = Tensor(np.zeros(()))

            total = surrogate_loss + value_loss + recon_loss + classify_loss + disc_loss
            if not np.isfinite(total.data):
                for name, p in bundle.parameters():
                    p.data = snapshot[name].copy()
                for o, (m, v, t) in zip(optimizers, opt_snapshot):
                    o.m, o.v, o.t = copy.deepcopy(m), copy.deepcopy(v), t
                raise FloatingPointError("non-finite PPO loss; iteration aborted")

            kl = float(gaussian_kl_np(mb["means"].reshape(T * n, -1), buffer.std,
                                      means.data, std.data).mean())
            if cfg.desired_kl > 0:
                optimizer.lr = adapt_learning_rate(optimizer.lr, kl, cfg)

            for o in optimizers:
                o.zero_grad()
            total.backward()
            clip_grad_norm(bundle.parameters(), cfg.max_grad_norm)
            for o in optimizers:
                o.step()
            bundle.clamp_std(cfg.clip_min_std)

            loss_sums["surrogate"] += surrogate_loss.item()
            loss_sums["value"] += value_loss.item()
            loss_sums["recon"] += recon_loss.item()
            loss_sums["classify"] += classify_loss.item()
            loss_sums["discriminator"] += disc_loss.item()
            loss_sums["total"] += total.item()
            loss_sums["entropy"] += entropy.item()
            loss_sums["kl"] += kl
            n_updates += 1

    losses = {k: v / max(n_updates, 1) for k, v in loss_sums.items()}
    return losses, optimizer.lr
