import os

import numpy as np
import pytest

from trapwalker.nn import (
    LSTM, MLP, Adam, NetworkConfig, PolicyBundle, Tensor, adam_step,
    bundle_param_arrays, clip_grad_norm, cross_entropy, load_bundle_params,
    load_checkpoint, mse, save_checkpoint, softmax,
)
from trapwalker.nn.layers import Linear
from trapwalker.nn.networks import (
    discriminator_input_gradients, gaussian_kl_np, gaussian_log_prob_graph,
    gaussian_log_prob_np,
)


def finite_diff_grads(params, loss_fn, rng, samples=8, h=1e-5):
    for _, p in params:
        p.grad = None
    loss = loss_fn()
    loss.backward()
    grads = {n: p.grad.copy() for n, p in params}
    worst = 0.0
    for name, p in params:
        flat = p.data.ravel()
        idx_pool = rng.choice(flat.size, size=min(samples, flat.size), replace=False)
        for idx in idx_pool:
            orig = flat[idx]
            flat[idx] = orig + h
            lp = loss_fn().item()
            flat[idx] = orig - h
            lm = loss_fn().item()
            flat[idx] = orig
            fd = (lp - lm) / (2 * h)
            an = grads[name].ravel()[idx]
            worst = max(worst, abs(fd - an) / max(abs(fd), abs(an), 1e-8))
    return worst


class TestMlpForward:
    def test_zero_params_zero_output(self):
        mlp = MLP(4, [5], 3, np.random.default_rng(0), dtype=np.float64)
        for _, p in mlp.parameters():
            p.data[...] = 0.0
        out = mlp.forward_np(np.ones((2, 4)))
        assert (out == 0).all()

    def test_identity_single_layer(self):
        lin = Linear(3, 3, np.random.default_rng(0), dtype=np.float64)
        lin.w.data = np.eye(3)
        lin.b.data = np.zeros(3)
        x = np.array([[0.3, -1.2, 4.0]])
        np.testing.assert_array_equal(lin.forward_np(x), x)

    def test_matches_hand_rolled_reference(self):
        rng = np.random.default_rng(7)
        mlp = MLP(3, [4], 2, rng, activation="tanh", dtype=np.float64)
        x = rng.standard_normal((5, 3))
        expected = np.tanh(x @ mlp.layers[0].w.data + mlp.layers[0].b.data)
        expected = expected @ mlp.layers[1].w.data + mlp.layers[1].b.data
        np.testing.assert_allclose(mlp.forward_np(x), expected, atol=1e-12)
        np.testing.assert_allclose(mlp.forward(Tensor(x)).data, expected, atol=1e-12)


class TestLstm:
    def test_zero_everything_zero_output(self):
        lstm = LSTM(3, [4], np.random.default_rng(0), dtype=np.float64)
        for _, p in lstm.parameters():
            p.data[...] = 0.0
        out, _ = lstm.step_np(np.zeros((2, 3)), lstm.init_hidden(2))
        assert (out == 0).all()

    def test_split_sequence_equals_unsplit(self):
        rng = np.random.default_rng(3)
        lstm = LSTM(5, [6, 4], rng, dtype=np.float64)
        xs = rng.standard_normal((9, 2, 5))
        h = lstm.init_hidden(2)
        full = []
        for t in range(9):
            o, h = lstm.step_np(xs[t], h)
            full.append(o)
        for cut in (1, 4, 8):
            h = lstm.init_hidden(2)
            outs = []
            for t in range(cut):
                o, h = lstm.step_np(xs[t], h)
                outs.append(o)
            saved = [(a.copy(), b.copy()) for a, b in h]
            h2 = saved
            for t in range(cut, 9):
                o, h2 = lstm.step_np(xs[t], h2)
                outs.append(o)
            for a, b in zip(full, outs):
                np.testing.assert_allclose(a, b, atol=1e-12)

    def test_single_cell_hand_trace(self):
        # One scalar LSTM cell: all weights 1, bias 0, x = 0.5, h = c = 0.
        lstm = LSTM(1, [1], np.random.default_rng(0), dtype=np.float64)
        cell = lstm.cells[0]
        cell.w_x.data[...] = 1.0
        cell.w_h.data[...] = 1.0
        cell.b.data[...] = 0.0
        x = np.array([[0.5]])
        out, hidden = lstm.step_np(x, lstm.init_hidden(1))
        sig = lambda v: 1.0 / (1.0 + np.exp(-v))
        i = f = o = sig(0.5)
        g = np.tanh(0.5)
        c = i * g
        h = o * np.tanh(c)
        assert out[0, 0] == pytest.approx(h, abs=1e-12)
        assert hidden[0][1][0, 0] == pytest.approx(c, abs=1e-12)

    def test_graph_matches_numpy_path(self):
        rng = np.random.default_rng(5)
        lstm = LSTM(4, [6, 3], rng, dtype=np.float64)
        x = rng.standard_normal((3, 4))
        h_np = lstm.init_hidden(3)
        out_np, _ = lstm.step_np(x, h_np)
        out_g, _ = lstm.step_graph(Tensor(x), lstm.hidden_to_tensors(h_np))
        np.testing.assert_array_equal(out_np, out_g.data)


class TestBackward:
    def test_constant_loss_zero_grads(self):
        w = Tensor(np.ones((3, 3)), requires_grad=True)
        loss = Tensor(np.zeros(())) + 5.0
        loss.backward()
        assert w.grad is None

    def test_quadratic_gradient(self):
        theta = Tensor(np.array([1.0, -2.0, 0.5]), requires_grad=True)
        loss = (theta * theta).sum()
        loss.backward()
        np.testing.assert_allclose(theta.grad, 2 * theta.data, atol=1e-12)

    def test_mlp_finite_difference(self):
        rng = np.random.default_rng(11)
        mlp = MLP(4, [6, 5], 2, rng, dtype=np.float64)
        x = rng.standard_normal((3, 4))
        t = rng.standard_normal((3, 2))
        err = finite_diff_grads(mlp.parameters(), lambda: mse(mlp.forward(Tensor(x)), t), rng)
        assert err < 1e-4

    def test_lstm_finite_difference(self):
        rng = np.random.default_rng(12)
        lstm = LSTM(3, [5], rng, dtype=np.float64)
        xs = rng.standard_normal((4, 2, 3))
        tgt = rng.standard_normal((4, 2, 5))

        def loss_fn():
            h = lstm.hidden_to_tensors(lstm.init_hidden(2))
            total = None
            for t in range(4):
                o, h = lstm.step_graph(Tensor(xs[t]), h)
                l = mse(o, tgt[t])
                total = l if total is None else total + l
            return total

        assert finite_diff_grads(lstm.parameters(), loss_fn, rng) < 1e-4

    def test_gradient_penalty_finite_difference(self):
        from trapwalker.rewards import amp_discriminator_loss
        rng = np.random.default_rng(13)
        disc = MLP(6, [8, 7], 1, rng, dtype=np.float64)
        ref = rng.standard_normal((5, 6))
        pol = rng.standard_normal((4, 6))

        def loss_fn():
            scores, norms = discriminator_input_gradients(disc, ref)
            pol_scores = disc.forward(Tensor(pol))[:, 0]
            return amp_discriminator_loss(scores, pol_scores, norms, alpha_gp=10.0)

        assert finite_diff_grads(disc.parameters(), loss_fn, rng) < 1e-4


class TestAuxLosses:
    def test_recon_zero_at_target(self):
        pred = Tensor(np.ones((4, 12)))
        assert mse(pred, np.ones((4, 12))).item() == 0.0

    def test_uniform_logits_cross_entropy(self):
        logits = Tensor(np.zeros((6, 4)))
        assert cross_entropy(logits, np.zeros(6, dtype=int)).item() == pytest.approx(np.log(4))

    def test_cross_entropy_hand_case(self):
        logits = np.array([[2.0, 0.0, -1.0, 0.5]])
        label = np.array([0])
        z = logits - logits.max()
        p = np.exp(z) / np.exp(z).sum()
        assert cross_entropy(Tensor(logits), label).item() == pytest.approx(-np.log(p[0, 0]))

    def test_recon_hand_case(self):
        pred = Tensor(np.array([[1.0, 2.0]]))
        target = np.array([[0.0, 0.0]])
        assert mse(pred, target).item() == pytest.approx((1.0 + 4.0) / 2)


class TestAdam:
    def test_zero_grads_identity(self):
        p = Tensor(np.array([1.0, 2.0]), requires_grad=True)
        opt = Adam([("p", p)], lr=0.1)
        opt.step()
        np.testing.assert_array_equal(p.data, [1.0, 2.0])

    def test_scalar_hand_computed_step(self):
        # First Adam step with m-hat/v-hat bias correction: update = lr * g/|g|.
        p = Tensor(np.array([1.0]), requires_grad=True)
        p.grad = np.array([0.5])
        opt = Adam([("p", p)], lr=0.01)
        opt.step()
        m = 0.1 * 0.5
        v = 0.001 * 0.25
        m_hat = m / 0.1
        v_hat = v / 0.001
        expected = 1.0 - 0.01 * m_hat / (np.sqrt(v_hat) + 1e-8)
        assert p.data[0] == pytest.approx(expected, abs=1e-12)

    def test_zero_lr_identity(self):
        p = Tensor(np.array([3.0]), requires_grad=True)
        p.grad = np.array([1.0])
        opt = Adam([("p", p)], lr=0.0)
        opt.step()
        assert p.data[0] == 3.0

    def test_functional_form_matches_class(self):
        param = np.array([1.0, -1.0])
        grad = np.array([0.3, 0.7])
        p2, m2, v2 = adam_step(param, grad, np.zeros(2), np.zeros(2), 1, 0.01)
        p = Tensor(param.copy(), requires_grad=True)
        p.grad = grad.copy()
        opt = Adam([("p", p)], lr=0.01)
        opt.step()
        np.testing.assert_allclose(p.data, p2, atol=1e-12)


class TestBundle:
    def test_architecture_dims(self):
        cfg = NetworkConfig(scale_divisor=1)
        b = PolicyBundle(cfg, seed=0)
        assert [c.hidden_dim for c in b.actor_lstm.cells] == [512, 256]
        assert [c.hidden_dim for c in b.critic_lstm.cells] == [512, 256]
        assert [c.hidden_dim for c in b.estimator.cells] == [256, 256]
        assert b.actor_lstm.cells[0].w_x.data.shape[0] == 58
        assert b.critic_lstm.cells[0].w_x.data.shape[0] == 67
        assert b.estimator.cells[0].w_x.data.shape[0] == 46
        assert b.contact_encoder.layers[0].w.data.shape == (17, 32)
        assert b.contact_encoder.layers[-1].w.data.shape[1] == 8
        assert b.actor_head.w.data.shape[1] == 12

    def test_desk_profile_divides_hidden(self):
        b = PolicyBundle(NetworkConfig(scale_divisor=4), seed=0)
        assert [c.hidden_dim for c in b.actor_lstm.cells] == [128, 64]
        assert [c.hidden_dim for c in b.estimator.cells] == [64, 64]

    def test_classifier_probabilities_sum_to_one(self):
        b = PolicyBundle(NetworkConfig(scale_divisor=8), seed=0)
        latent = np.random.default_rng(0).standard_normal((10, 8)).astype(np.float32)
        probs = b.classify_np(latent)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)
        assert (probs >= 0).all()

    def test_same_seed_identical_init(self):
        a = PolicyBundle(NetworkConfig(scale_divisor=8), seed=42)
        b = PolicyBundle(NetworkConfig(scale_divisor=8), seed=42)
        for (_, pa), (_, pb) in zip(a.parameters(), b.parameters()):
            np.testing.assert_array_equal(pa.data, pb.data)

    def test_gaussian_log_prob_paths_agree(self):
        rng = np.random.default_rng(0)
        mean = rng.standard_normal((5, 12))
        std = np.abs(rng.standard_normal(12)) + 0.1
        actions = rng.standard_normal((5, 12))
        lp_np = gaussian_log_prob_np(mean, std, actions)
        lp_g = gaussian_log_prob_graph(Tensor(mean), Tensor(std), actions)
        np.testing.assert_allclose(lp_np, lp_g.data, atol=1e-10)

    def test_kl_zero_for_identical(self):
        mean = np.zeros((3, 12))
        std = np.ones(12)
        assert gaussian_kl_np(mean, std, mean, std).max() == pytest.approx(0.0, abs=1e-12)


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        b = PolicyBundle(NetworkConfig(scale_divisor=8), seed=1)
        path = os.path.join(tmp_path, "ckpt.json")
        rngs = {"action": {"bit_generator": "PCG64", "state": {"state": 123, "inc": 5}}}
        save_checkpoint(path, bundle_param_arrays(b), {"m.x": np.zeros(3)}, rngs, 17,
                        {"stage": "stage1"})
        params, opt, rng_states, iteration, meta = load_checkpoint(path)
        assert iteration == 17
        assert meta["stage"] == "stage1"
        assert rng_states["action"]["state"]["state"] == 123
        assert "m.x" in opt
        b2 = PolicyBundle(NetworkConfig(scale_divisor=8), seed=2)
        load_bundle_params(b2, params)
        for (_, pa), (_, pb) in zip(b.parameters(), b2.parameters()):
            np.testing.assert_array_equal(pa.data, pb.data)

    def test_float32_little_endian_blob(self, tmp_path):
        b = PolicyBundle(NetworkConfig(scale_divisor=8), seed=1)
        path = os.path.join(tmp_path, "c.json")
        save_checkpoint(path, bundle_param_arrays(b))
        import json
        manifest = json.load(open(path))
        total = sum(e["nbytes"] for e in manifest["arrays"])
        blob = open(os.path.join(tmp_path, manifest["blob"]), "rb").read()
        assert len(blob) == total
        first = manifest["arrays"][0]
        arr = np.frombuffer(blob[:first["nbytes"]], dtype="<f4")
        assert arr.size == int(np.prod(first["shape"]))

    def test_shape_mismatch_rejected(self, tmp_path):
        b = PolicyBundle(NetworkConfig(scale_divisor=8), seed=1)
        path = os.path.join(tmp_path, "c.json")
        save_checkpoint(path, bundle_param_arrays(b))
        params, _, _, _, _ = load_checkpoint(path)
        other = PolicyBundle(NetworkConfig(scale_divisor=2), seed=1)
        with pytest.raises(ValueError):
            load_bundle_params(other, params)


class TestGradClip:
    def test_norm_clipping(self):
        p = Tensor(np.zeros(4), requires_grad=True)
        p.grad = np.array([3.0, 0.0, 4.0, 0.0])  # norm 5
        norm = clip_grad_norm([("p", p)], max_norm=1.0)
        assert norm == pytest.approx(5.0)
        assert np.linalg.norm(p.grad) == pytest.approx(1.0, rel=1e-6)

    def test_below_threshold_untouched(self):
        p = Tensor(np.zeros(2), requires_grad=True)
        p.grad = np.array([0.3, 0.4])
        clip_grad_norm([("p", p)], max_norm=1.0)
        np.testing.assert_allclose(p.grad, [0.3, 0.4])
