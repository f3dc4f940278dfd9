"""Command-line entry point.

Subcommands: train (PPO run), eval (frozen policy over seeded episodes),
sweep (QoE vs. bandwidth or Rician factor under a frozen policy),
codec-demo (EMA codebook convergence curve), selftest (built-in oracle and
invariant battery). Flag precedence: CLI flag > config file > default.
"""

import argparse
import os
import sys

from . import experiments, ppo
from .config import ConfigError, load_config, serialize_config
from .runio import RunDirectory, export_csv
from .selftest import run_selftest


def _add_common(parser, episodes_help):
    parser.add_argument("--config", metavar="PATH", help="config file (key = value sections)")
    parser.add_argument("--seed", type=int, metavar="INT", help="master seed override")
    parser.add_argument("--episodes", type=int, metavar="INT", help=episodes_help)
    parser.add_argument("--workers", type=int, metavar="INT", help="rollout workers override")
    parser.add_argument("--out", metavar="DIR", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavstream",
        description="Multi-UAV semantic streaming simulator and PPO allocator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run PPO training")
    _add_common(p_train, "training iterations (policy updates)")

    p_eval = sub.add_parser("eval", help="evaluate a frozen policy")
    _add_common(p_eval, "evaluation episodes")
    p_eval.add_argument("--checkpoint", metavar="PATH", help="trained policy checkpoint")
    p_eval.add_argument(
        "--policy",
        choices=("checkpoint", "random"),
        default="checkpoint",
        help="evaluate the checkpoint or the uniform-random baseline",
    )

    p_sweep = sub.add_parser("sweep", help="QoE versus a channel parameter grid")
    _add_common(p_sweep, "evaluation episodes per grid point")
    p_sweep.add_argument("--checkpoint", metavar="PATH", help="trained policy checkpoint")
    p_sweep.add_argument(
        "--policy", choices=("checkpoint", "random"), default="checkpoint"
    )
    p_sweep.add_argument(
        "--param", choices=sorted(experiments.SWEEP_PARAMS), required=True
    )
    p_sweep.add_argument(
        "--values", required=True, metavar="V1,V2,...", help="comma-separated grid values"
    )

    p_demo = sub.add_parser("codec-demo", help="EMA codebook convergence run")
    _add_common(p_demo, "(unused)")

    p_self = sub.add_parser("selftest", help="run the oracle/invariant battery")
    _add_common(p_self, "(unused)")
    return parser


def _resolve_config(args, command):
    overrides = {}
    if args.seed is not None:
        overrides[("run", "seed")] = args.seed
    if args.workers is not None:
        overrides[("run", "workers")] = args.workers
    if args.episodes is not None:
        if command == "train":
            overrides[("run", "iterations")] = args.episodes
        else:
            overrides[("run", "eval_episodes")] = args.episodes
    return load_config(args.config, overrides)


def _out_dir(args, default_name):
    return RunDirectory(args.out if args.out else os.path.join("runs", default_name))


def _load_policy(args, cfg):
    if args.policy == "random":
        return None
    path = args.checkpoint
    if path is None:
        raise ConfigError("eval/sweep with --policy checkpoint requires --checkpoint PATH")
    if not os.path.exists(path):
        raise ConfigError(f"checkpoint not found: {path}")
    policy, _, _ = ppo.load_checkpoint(path)
    return policy


def _cmd_train(args) -> int:
    cfg = _resolve_config(args, "train")
    out = _out_dir(args, f"train-seed{cfg.run.seed}")
    out.write_config(serialize_config(cfg))
    every = max(1, cfg.run.iterations // 10)

    def progress(row):
        if row["iter"] % every == 0 or row["iter"] == cfg.run.iterations - 1:
            print(
                f"iter {row['iter']:4d}  mean_qoe {row['mean_qoe']:10.3f}  "
                f"clip_frac {row['clip_frac']:.3f}  entropy {row['entropy']:.3f}"
            )

    result = experiments.train_policy(cfg, progress=progress)
    export_csv(result.rows, experiments.TRAINING_COLUMNS, out.file("training.csv"))
    ppo.save_checkpoint(
        out.file("checkpoint.npz"), result.policy, result.actor_opt, result.critic_opt
    )
    print(f"training artifacts written to {out.path}")
    return 0


def _cmd_eval(args) -> int:
    cfg = _resolve_config(args, "eval")
    out = _out_dir(args, f"eval-seed{cfg.run.seed}")
    out.write_config(serialize_config(cfg))
    policy = _load_policy(args, cfg)
    rows = experiments.evaluate_policy(cfg, policy, cfg.run.eval_episodes, cfg.run.seed)
    export_csv(rows, experiments.EVALUATION_COLUMNS, out.file("evaluation.csv"))
    mean, std = experiments.summarize(rows)
    print(f"qoe over {len(rows)} episodes: {mean:.3f} +- {std:.3f}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _resolve_config(args, "sweep")
    try:
        values = [float(v) for v in args.values.split(",") if v]
    except ValueError as exc:
        raise ConfigError(f"invalid --values list {args.values!r}: {exc}") from exc
    if not values:
        raise ConfigError("--values must list at least one number")
    out = _out_dir(args, f"sweep-{args.param}")
    out.write_config(serialize_config(cfg))
    policy = _load_policy(args, cfg)
    rows = experiments.sweep_policy(
        cfg, policy, args.param, values, cfg.run.eval_episodes, cfg.run.seed
    )
    export_csv(rows, experiments.SWEEP_COLUMNS, out.file("sweep.csv"))
    for row in rows:
        print(
            f"{row['param']} {row['value']:g}: qoe {row['mean_qoe']:.3f} "
            f"+- {row['std_qoe']:.3f} over {row['episodes']} episodes"
        )
    return 0


def _cmd_codec_demo(args) -> int:
    cfg = _resolve_config(args, "codec-demo")
    out = _out_dir(args, "codec-demo")
    out.write_config(serialize_config(cfg))
    rows, initial, final = experiments.codec_demo(cfg.run.seed)
    export_csv(rows, experiments.CODEC_DEMO_COLUMNS, out.file("codec_demo.csv"))
    print(f"distortion {initial:.6f} -> {final:.6f} over {len(rows)} steps")
    return 0


def _cmd_selftest(args) -> int:
    cfg = _resolve_config(args, "selftest")
    ok, results = run_selftest(cfg.run.seed)
    for name, passed, detail in results:
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
    return 0 if ok else 1


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "codec-demo": _cmd_codec_demo,
    "selftest": _cmd_selftest,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
