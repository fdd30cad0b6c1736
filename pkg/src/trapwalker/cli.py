"""Command-line entry points.

Subcommands: train-stage1, train-stage2, benchmark, sweep-dt, sweep-dg,
importance, export-latents, gen-amp, teleop-serve, replay.
"""

import argparse
import json
import os
import sys

import numpy as np

from .config import Config, load_config


def _add_common(parser):
    parser.add_argument("--config", default=None, help="YAML config file")
    parser.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trapwalker",
        description="Proprioception-only trap locomotion: training, benchmark, teleop.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-amp", help="generate the reference gait dataset")
    _add_common(p)
    p.add_argument("--out", default="amp_dataset.npz")

    for stage in ("train-stage1", "train-stage2"):
        p = sub.add_parser(stage, help=f"run {stage.replace('-', ' ')} training")
        _add_common(p)
        p.add_argument("--out-dir", default=f"runs/{stage.replace('train-', '')}")
        p.add_argument("--iterations", type=int, default=None)
        p.add_argument("--envs", type=int, default=None)
        p.add_argument("--amp-dataset", default=None, help="pre-generated .npz")
        if stage == "train-stage2":
            p.add_argument("--stage1-checkpoint", required=True)

    p = sub.add_parser("benchmark", help="run the trap runway benchmark")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--variant", default=None, choices=["Mix", "Bar", "Pit", "Pole"])
    p.add_argument("--n-robots", type=int, default=None)
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--out-dir", default="results")

    p = sub.add_parser("sweep-dt", help="success rate vs constant goal deadline")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--values", default="1,2,3,4,5,6,8")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--bar-height", type=float, default=0.2)
    p.add_argument("--out", default="results/sweep_dt.csv")

    p = sub.add_parser("sweep-dg", help="velocity response vs constant goal offset")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dis", default="0.25,0.5,1.0,2.0")
    p.add_argument("--theta", default="0,0.393,0.785,1.178,1.571")
    p.add_argument("--out", default="results/sweep_dg.csv")

    p = sub.add_parser("importance", help="input-importance report from policy Jacobians")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--samples", type=int, default=16)
    p.add_argument("--out", default="results/importance.json")

    p = sub.add_parser("export-latents", help="estimated belief latents + labels CSV")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--episodes", type=int, default=8)
    p.add_argument("--out", default="results/latents.csv")

    p = sub.add_parser("teleop-serve", help="run the teleoperation service")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--port", type=int, default=None)

    p = sub.add_parser("replay", help="recompute rewards from a recorded trace")
    _add_common(p)
    p.add_argument("--trace", required=True)
    p.add_argument("--tolerance", type=float, default=1e-9)
    return parser


def _load(args) -> Config:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.pipeline.seed = args.seed
        cfg.benchmark.seed = args.seed
    return cfg


def _trainer(cfg: Config, out_dir, amp_path=None):
    from .training import Trainer
    from .training.amp_data import AmpDataset

    amp = AmpDataset.load(amp_path) if amp_path else None
    return Trainer(cfg.pipeline, terrain_cfg=cfg.terrain, env_cfg=cfg.env,
                   net_cfg=cfg.networks, ppo_cfg=cfg.ppo, model=cfg.sim,
                   reward_weights=cfg.rewards.weights, reward_limits=cfg.rewards.limits,
                   out_dir=out_dir, amp_dataset=amp)


def _load_policy(cfg: Config, path):
    from .training import load_bundle
    return load_bundle(path)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = _load(args)

    if args.command == "gen-amp":
        from .training.amp_data import generate_amp_dataset
        data = generate_amp_dataset(cfg.pipeline.seed, cfg.sim)
        data.save(args.out)
        print(f"wrote {len(data.states)} gait states to {args.out}")
        return 0

    if args.command in ("train-stage1", "train-stage2"):
        cfg.pipeline.stage = "stage1" if args.command == "train-stage1" else "stage2"
        if args.iterations is not None:
            cfg.pipeline.iterations = args.iterations
        if args.envs is not None:
            cfg.pipeline.num_envs = args.envs
        trainer = _trainer(cfg, args.out_dir, args.amp_dataset)
        if cfg.pipeline.stage == "stage2":
            if not os.path.exists(args.stage1_checkpoint):
                print(f"stage-1 checkpoint not found: {args.stage1_checkpoint}",
                      file=sys.stderr)
                return 2
            from .nn.checkpoint import load_checkpoint
            from .nn import load_bundle_params
            params, _, _, _, _ = load_checkpoint(args.stage1_checkpoint)
            load_bundle_params(trainer.bundle, params)
        final = trainer.run()
        print(f"final checkpoint: {final}")
        return 0

    if args.command == "benchmark":
        from .bench import run_benchmark, save_benchmark
        bundle = _load_policy(cfg, args.checkpoint)
        variant = args.variant or cfg.benchmark.variant
        result = run_benchmark(
            bundle, variant,
            n_robots=args.n_robots or cfg.benchmark.n_robots,
            seed=cfg.benchmark.seed,
            time_limit=args.time_limit or cfg.benchmark.time_limit_s,
            batch_size=cfg.benchmark.batch_size, env_cfg=cfg.env, model=cfg.sim)
        save_benchmark(result, args.out_dir)
        print(json.dumps(result.summary(), indent=1))
        return 0

    if args.command == "sweep-dt":
        from .bench import sweep_delta_t, write_rows_csv
        bundle = _load_policy(cfg, args.checkpoint)
        values = [float(v) for v in args.values.split(",")]
        rows = sweep_delta_t(bundle, values, trials=args.trials,
                             seed=cfg.benchmark.seed, bar_height=args.bar_height,
                             env_cfg=cfg.env, model=cfg.sim)
        write_rows_csv(args.out, rows)
        print(f"wrote {len(rows)} rows to {args.out}")
        return 0

    if args.command == "sweep-dg":
        from .bench import sweep_delta_g, write_rows_csv
        bundle = _load_policy(cfg, args.checkpoint)
        dis = [float(v) for v in args.dis.split(",")]
        theta = [float(v) for v in args.theta.split(",")]
        rows = sweep_delta_g(bundle, dis, theta, seed=cfg.benchmark.seed,
                             env_cfg=cfg.env, model=cfg.sim)
        write_rows_csv(args.out, rows)
        print(f"wrote {len(rows)} rows to {args.out}")
        return 0

    if args.command == "importance":
        from .env import make_envs
        from .importance import (OBS_GROUPS, bundle_policy_graph,
                                 importance_analysis, observed_bounds)
        from .terrain import flat_terrain
        bundle = _load_policy(cfg, args.checkpoint)
        venv = make_envs(cfg.sim, flat_terrain(), cfg.env, 8, seed=cfg.benchmark.seed)
        lows, highs = observed_bounds(venv, bundle, steps=200)
        obs = venv.reset_all()
        batch = np.concatenate([obs["p"], obs["s"], obs["c"], obs["g"]],
                               axis=1)[: args.samples]
        report = importance_analysis(
            bundle_policy_graph(bundle, bundle.init_hidden(1)),
            batch.astype(float), lows, highs, OBS_GROUPS)
        os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
        with open(args.out, "w") as f:
            json.dump({
                "relative": report.relative,
                "group_scores": report.group_scores,
                "per_input": report.per_input.tolist(),
                "bounds_low": report.bounds_low.tolist(),
                "bounds_high": report.bounds_high.tolist(),
            }, f, indent=1)
        print(json.dumps(report.relative, indent=1))
        return 0

    if args.command == "export-latents":
        from .bench import export_latents, write_rows_csv
        from .training.pipeline import build_terrain, curriculum_cells
        bundle = _load_policy(cfg, args.checkpoint)
        terrain = build_terrain(cfg.terrain)
        cells = curriculum_cells(terrain, cfg.terrain) if terrain.cells else None
        rows = export_latents(bundle, terrain, episodes=args.episodes,
                              seed=cfg.benchmark.seed, env_cfg=cfg.env,
                              model=cfg.sim, cells=cells)
        write_rows_csv(args.out, rows,
                       fieldnames=[f"latent_{i}" for i in range(12)] + ["label"])
        print(f"wrote {len(rows)} rows to {args.out}")
        return 0

    if args.command == "teleop-serve":
        from .teleop import serve
        bundle = _load_policy(cfg, args.checkpoint)
        serve(bundle, cfg, port=args.port or cfg.teleop.port)
        return 0

    if args.command == "replay":
        from .env import read_trace, replay_rewards
        rows = read_trace(args.trace)
        recomputed, recorded = replay_rewards(rows, cfg.sim,
                                              cfg.rewards.weights, cfg.rewards.limits)
        worst = float(np.abs(recomputed - recorded).max()) if len(rows) else 0.0
        print(f"{len(rows)} steps, max reward deviation {worst:.3e}")
        if worst > args.tolerance:
            print("trace replay FAILED", file=sys.stderr)
            return 1
        print("trace replay OK")
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
