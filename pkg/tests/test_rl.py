import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trapwalker.env import EnvConfig, make_envs
from trapwalker.nn import NetworkConfig, PolicyBundle, Tensor
from trapwalker.rl import PpoConfig, RolloutBuffer, adapt_learning_rate, compute_gae
from trapwalker.rl.ppo import clipped_surrogate, ppo_update, _unroll_actor
from trapwalker.rl.rollout import collect_rollouts
from trapwalker.robot import build_robot
from trapwalker.terrain import flat_terrain


def brute_force_gae(rewards, values, dones, last_values, gamma, lam):
    """Independent oracle: nested discounted sums of TD residuals."""
    T, N = rewards.shape
    v_ext = np.concatenate([values, last_values[None, :]], axis=0)
    adv = np.zeros((T, N))
    for n in range(N):
        for t in range(T):
            acc = 0.0
            discount = 1.0
            for l in range(t, T):
                not_done = 0.0 if dones[l, n] else 1.0
                delta = rewards[l, n] + gamma * v_ext[l + 1, n] * not_done - v_ext[l, n]
                acc += discount * delta
                if dones[l, n]:
                    break
                discount *= gamma * lam
            adv[t, n] = acc
    return adv


class TestGae:
    def test_lambda_zero_is_one_step_td(self):
        rng = np.random.default_rng(0)
        r = rng.standard_normal((6, 3))
        v = rng.standard_normal((6, 3))
        last = rng.standard_normal(3)
        dones = np.zeros((6, 3), bool)
        adv, _ = compute_gae(r, v, dones, last, 0.9, 0.0, normalize=False)
        v_next = np.concatenate([v[1:], last[None]], axis=0)
        np.testing.assert_allclose(adv, r + 0.9 * v_next - v, atol=1e-12)

    def test_gamma_zero(self):
        rng = np.random.default_rng(1)
        r = rng.standard_normal((5, 2))
        v = rng.standard_normal((5, 2))
        adv, _ = compute_gae(r, v, np.zeros((5, 2), bool), np.zeros(2), 0.0, 0.95,
                             normalize=False)
        np.testing.assert_allclose(adv, r - v, atol=1e-12)

    def test_length_five_brute_force(self):
        rng = np.random.default_rng(2)
        r = rng.standard_normal((5, 4))
        v = rng.standard_normal((5, 4))
        dones = rng.uniform(size=(5, 4)) < 0.25
        last = rng.standard_normal(4)
        adv, ret = compute_gae(r, v, dones, last, 0.99, 0.95, normalize=False)
        oracle = brute_force_gae(r, v, dones, last, 0.99, 0.95)
        np.testing.assert_allclose(adv, oracle, atol=1e-8)
        np.testing.assert_allclose(ret, oracle + v, atol=1e-8)

    def test_thousand_random_sequences(self):
        rng = np.random.default_rng(3)
        for _ in range(1000):
            T = int(rng.integers(1, 9))
            r = rng.standard_normal((T, 1))
            v = rng.standard_normal((T, 1))
            dones = rng.uniform(size=(T, 1)) < 0.3
            last = rng.standard_normal(1)
            gamma = float(rng.uniform(0.8, 1.0))
            lam = float(rng.uniform(0.0, 1.0))
            adv, _ = compute_gae(r, v, dones, last, gamma, lam, normalize=False)
            oracle = brute_force_gae(r, v, dones, last, gamma, lam)
            np.testing.assert_allclose(adv, oracle, atol=1e-8)

    def test_normalization(self):
        rng = np.random.default_rng(4)
        adv, _ = compute_gae(rng.standard_normal((24, 8)), rng.standard_normal((24, 8)),
                             np.zeros((24, 8), bool), np.zeros(8), 0.99, 0.95,
                             normalize=True)
        assert adv.mean() == pytest.approx(0.0, abs=1e-9)
        assert adv.std() == pytest.approx(1.0, rel=1e-6)


class TestClippedSurrogate:
    def test_identical_policies_give_mean_advantage(self):
        adv = np.array([1.0, -2.0, 0.5])
        ratio = Tensor(np.ones(3))
        assert clipped_surrogate(ratio, adv, 0.2).item() == pytest.approx(adv.mean())

    def test_two_sample_hand_case(self):
        # ratios (1.3, 0.7), advantages (+2, -1), clip 0.2:
        #   s1 = min(2.6, 1.2*2) = 2.4 ; s2 = min(-0.7, 0.8*-1) = -0.8
        ratio = Tensor(np.array([1.3, 0.7]))
        val = clipped_surrogate(ratio, np.array([2.0, -1.0]), 0.2).item()
        assert val == pytest.approx((2.4 - 0.8) / 2, abs=1e-12)

    @given(st.floats(0.1, 5.0))
    def test_invariant_to_advantage_rescale_direction(self, scale):
        # Positive rescaling of normalized advantages scales the objective
        # linearly, leaving the argmax (update direction) unchanged.
        ratio_data = np.array([1.1, 0.9, 1.4])
        adv = np.array([1.0, -0.5, 0.25])
        r1 = Tensor(ratio_data.copy())
        base = clipped_surrogate(r1, adv, 0.2)
        base.backward()
        g1 = r1.grad.copy()
        r2 = Tensor(ratio_data.copy())
        scaled = clipped_surrogate(r2, adv * scale, 0.2)
        scaled.backward()
        np.testing.assert_allclose(r2.grad, g1 * scale, atol=1e-10)


class TestLrAdaptation:
    CFG = PpoConfig()

    def test_high_kl_shrinks(self):
        assert adapt_learning_rate(1e-3, 0.05, self.CFG) == pytest.approx(1e-3 / 1.5)

    def test_low_kl_grows(self):
        assert adapt_learning_rate(1e-3, 0.001, self.CFG) == pytest.approx(1.5e-3)

    def test_dead_zone_keeps(self):
        assert adapt_learning_rate(1e-3, 0.01, self.CFG) == 1e-3

    @given(st.floats(0, 0.5), st.floats(0, 0.5))
    def test_monotone_in_kl(self, kl_a, kl_b):
        lo, hi = sorted((kl_a, kl_b))
        assert (adapt_learning_rate(1e-3, hi, self.CFG)
                <= adapt_learning_rate(1e-3, lo, self.CFG) + 1e-12)

    def test_bounds(self):
        assert adapt_learning_rate(1e-5, 1.0, self.CFG) == self.CFG.lr_min
        assert adapt_learning_rate(1e-2, 0.0, self.CFG) == self.CFG.lr_max


class TestDefaults:
    def test_ppo_config_matches_hyperparameter_table(self):
        cfg = PpoConfig()
        assert cfg.clip_param == 0.2
        assert cfg.gamma == 0.99
        assert cfg.lam == 0.95
        assert cfg.desired_kl == 0.01
        assert cfg.entropy_coef == 0.01
        assert cfg.learning_rate == 1e-3
        assert cfg.max_grad_norm == 1.0
        assert cfg.num_mini_batch == 4
        assert cfg.clip_min_std == 0.05
        assert cfg.num_steps_per_env == 24


def small_setup(num_envs=4, steps=6, seed=0):
    model = build_robot()
    venv = make_envs(model, flat_terrain(), EnvConfig(), num_envs, seed=seed)
    bundle = PolicyBundle(NetworkConfig(scale_divisor=16), seed=seed)
    obs = venv.reset_all()
    hidden = bundle.init_hidden(num_envs)
    rng = np.random.default_rng(seed)
    return venv, bundle, obs, hidden, rng


class TestRollout:
    def test_buffer_capacity(self):
        venv, bundle, obs, hidden, rng = small_setup(num_envs=2, steps=3)
        buffer, _, _, _ = collect_rollouts(venv, bundle, 3, obs, hidden, rng)
        assert buffer.full
        assert buffer.rewards.size == 6

    def test_deterministic_replay(self):
        a = []
        for run in range(2):
            venv, bundle, obs, hidden, rng = small_setup(seed=7)
            buffer, _, _, _ = collect_rollouts(venv, bundle, 5, obs, hidden, rng)
            a.append(buffer)
        np.testing.assert_array_equal(a[0].actions, a[1].actions)
        np.testing.assert_array_equal(a[0].rewards, a[1].rewards)
        np.testing.assert_array_equal(a[0].p, a[1].p)

    def test_unroll_matches_rollout_through_episode_boundary(self):
        # The BPTT unroll (graph path, hidden resets at dones) must reproduce
        # exactly the action means the rollout produced (numpy path).
        venv, bundle, obs, hidden, rng = small_setup(num_envs=3)
        # Force an episode boundary inside the window.
        for env in venv.envs:
            env.cfg.episode_length_s = 0.08  # 4 steps
        obs = venv.reset_all()
        hidden = bundle.init_hidden(3)
        buffer, _, _, _ = collect_rollouts(venv, bundle, 10, obs, hidden, rng)
        assert buffer.dones.any()
        mb = buffer.env_slice(np.arange(3))
        means = _unroll_actor(bundle, mb, "stage1")
        stacked = np.stack([m.data for m in means])
        np.testing.assert_allclose(stacked, buffer.means, atol=1e-6)

    def test_no_reads_before_fill(self):
        buffer = RolloutBuffer(2, 4)
        with pytest.raises(RuntimeError):
            buffer.require_full()


class TestPpoUpdate:
    def test_losses_finite_and_composition(self):
        venv, bundle, obs, hidden, rng = small_setup()
        from trapwalker.training.amp_data import generate_amp_dataset
        amp = generate_amp_dataset(0, config={"n_commands": 3})
        buffer, obs, hidden, stats = collect_rollouts(venv, bundle, 6, obs, hidden, rng)
        from trapwalker.nn import Adam
        cfg = PpoConfig(num_learning_epochs=1, num_mini_batch=2)
        opt = Adam(bundle.parameters(), lr=cfg.learning_rate)
        losses, lr = ppo_update(bundle, buffer, cfg, opt, stage="stage1",
                                amp_ref_sampler=lambda n: amp.sample_pairs(n, rng),
                                update_rng=rng, last_values=stats["last_values"])
        for key in ("surrogate", "value", "recon", "classify", "discriminator", "total"):
            assert np.isfinite(losses[key])
        total = (losses["surrogate"] + losses["value"] + losses["recon"]
                 + losses["classify"] + losses["discriminator"])
        assert losses["total"] == pytest.approx(total, abs=1e-9)

    def test_std_floor_enforced(self):
        venv, bundle, obs, hidden, rng = small_setup()
        bundle.action_std.data[...] = 0.001
        bundle.clamp_std(0.05)
        assert (bundle.std_np >= 0.05).all()
