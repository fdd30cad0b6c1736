import json
import os

import numpy as np
import pytest

from trapwalker.cli import main
from trapwalker.config import Config, ConfigError, config_to_dict, load_config, save_config
from trapwalker.env import EnvConfig, TrapEnv, read_trace, replay_rewards, write_trace
from trapwalker.robot import build_robot
from trapwalker.terrain import flat_terrain


class TestConfig:
    def test_empty_file_gives_paper_defaults(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        cfg = load_config(path)
        assert cfg.ppo.gamma == 0.99
        assert cfg.ppo.lam == 0.95
        assert cfg.ppo.desired_kl == 0.01
        assert cfg.rewards.weights.get_goal == 5.0
        assert cfg.sim.kp == 40.0 and cfg.sim.kd == 0.5
        assert cfg.env.episode_length_s == 8.0

    def test_no_file_defaults(self):
        cfg = load_config(None)
        assert cfg.pipeline.alpha == 0.997

    def test_unknown_key_named_in_error(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("ppo:\n  gama: 0.5\n")
        with pytest.raises(ConfigError, match="ppo.gama"):
            load_config(path)

    def test_unknown_section_rejected(self, tmp_path):
        path = tmp_path / "bad2.yaml"
        path.write_text("physics:\n  anything: 1\n")
        with pytest.raises(ConfigError, match="physics"):
            load_config(path)

    def test_override_propagates(self, tmp_path):
        path = tmp_path / "o.yaml"
        path.write_text("rewards:\n  limits:\n    vel_limit: 0.9\n")
        cfg = load_config(path)
        assert cfg.rewards.limits.vel_limit == 0.9
        from trapwalker.rewards import reward_regularization
        terms = reward_regularization(
            np.array([1.0, 0, 0]), np.array([1.2, 0, 0]), np.zeros(3),
            np.zeros(12), np.zeros(12), np.zeros((4, 3)), [], cfg.rewards.limits)
        assert terms["vel_limit"] == 0.0  # 1.2 m/s over the overridden cap

    def test_round_trip_identity(self, tmp_path):
        p1 = tmp_path / "a.yaml"
        p1.write_text("ppo:\n  gamma: 0.98\nsim:\n  base_mass: 14.5\n")
        cfg = load_config(p1)
        p2 = tmp_path / "b.yaml"
        save_config(cfg, p2)
        cfg2 = load_config(p2)
        assert config_to_dict(cfg) == config_to_dict(cfg2)

    def test_invalid_value_reported(self, tmp_path):
        path = tmp_path / "bad3.yaml"
        path.write_text("sim:\n  base_mass: -5\n")
        with pytest.raises(ConfigError, match="sim"):
            load_config(path)


class TestCli:
    def test_gen_amp(self, tmp_path, capsys):
        out = tmp_path / "amp.npz"
        code = main(["gen-amp", "--out", str(out)])
        assert code == 0 and out.exists()
        data = np.load(out)
        assert data["states"].shape[1] == 19

    def test_replay_round_trip(self, tmp_path):
        env = TrapEnv(build_robot(), flat_terrain(), EnvConfig(), seed=4)
        env.record_trace = True
        env.reset()
        rng = np.random.default_rng(0)
        for _ in range(40):
            env.step(0.2 * rng.standard_normal(12))
        trace_path = tmp_path / "trace.jsonl"
        write_trace(trace_path, env.trace)
        code = main(["replay", "--trace", str(trace_path)])
        assert code == 0

    def test_replay_detects_tampering(self, tmp_path):
        env = TrapEnv(build_robot(), flat_terrain(), EnvConfig(), seed=4)
        env.record_trace = True
        env.reset()
        for _ in range(5):
            env.step(np.zeros(12))
        rows = env.trace
        rows[2]["reward_total"] += 0.5
        trace_path = tmp_path / "bad.jsonl"
        write_trace(trace_path, rows)
        assert main(["replay", "--trace", str(trace_path)]) == 1

    def test_train_stage2_missing_checkpoint_fails(self, tmp_path):
        code = main([
            "train-stage2", "--stage1-checkpoint", str(tmp_path / "nope.json"),
            "--out-dir", str(tmp_path / "s2"),
        ])
        assert code == 2

    def test_replay_rewards_function(self, tmp_path):
        env = TrapEnv(build_robot(), flat_terrain(), EnvConfig(), seed=9)
        env.record_trace = True
        env.reset()
        for _ in range(30):
            env.step(np.full(12, 0.1))
        recomputed, recorded = replay_rewards(env.trace, env.base_model)
        np.testing.assert_allclose(recomputed, recorded, atol=1e-9)

    def test_benchmark_cli_smoke(self, tmp_path):
        # Tiny checkpoint + 1-robot run through the CLI surface.
        from trapwalker.nn import NetworkConfig, PolicyBundle, bundle_param_arrays, save_checkpoint
        bundle = PolicyBundle(NetworkConfig(scale_divisor=16), seed=0)
        ckpt = tmp_path / "b.json"
        save_checkpoint(str(ckpt), bundle_param_arrays(bundle),
                        meta={"net_cfg": {k: (list(v) if isinstance(v, tuple) else v)
                                          for k, v in vars(NetworkConfig(scale_divisor=16)).items()}})
        code = main([
            "benchmark", "--checkpoint", str(ckpt), "--variant", "Bar",
            "--n-robots", "2", "--time-limit", "2.0",
            "--out-dir", str(tmp_path / "res"),
        ])
        assert code == 0
        summary = json.load(open(tmp_path / "res" / "benchmark_Bar.json"))
        assert summary["n_robots"] == 2
        assert os.path.exists(tmp_path / "res" / "benchmark_Bar.csv")
