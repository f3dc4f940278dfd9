"""Seeded experiment orchestration: training, evaluation, and sweeps."""

from dataclasses import dataclass, replace

import numpy as np

from .config import UAV_COUNT, ExperimentConfig
from .env import (
    ACTION_DIM,
    EVAL_STREAM,
    POLICY_STREAM,
    ROLLOUT_STREAM,
    UPDATE_STREAM,
    StreamingEnv,
    collect_rollouts,
    observation_dim,
    observation_norm,
    spawn_rng,
)
from .ppo import ActorCritic, init_optimizers, new_actor_critic, ppo_update


def new_policy(cfg: ExperimentConfig) -> ActorCritic:
    """Seeded actor-critic sized for the configured observation."""
    shift, scale = observation_norm(cfg)
    rng = spawn_rng(cfg.run.seed, POLICY_STREAM)
    return new_actor_critic(rng, observation_dim(cfg), ACTION_DIM, UAV_COUNT, shift, scale)


def rollout_seeds(cfg: ExperimentConfig, iteration: int):
    """Distinct, reproducible per-worker seeds for one training iteration."""
    return [
        np.random.SeedSequence(entropy=cfg.run.seed, spawn_key=(ROLLOUT_STREAM, iteration, w))
        for w in range(cfg.run.workers)
    ]


@dataclass
class TrainResult:
    policy: ActorCritic
    actor_opt: object
    critic_opt: object
    rows: list  # one dict per iteration, matching the training CSV schema


TRAINING_COLUMNS = (
    "iter",
    "episodes",
    "mean_qoe",
    "actor_loss",
    "critic_loss",
    "clip_frac",
    "entropy",
    "mean_ratio",
)


def train_policy(cfg: ExperimentConfig, progress=None) -> TrainResult:
    """Full PPO training run; deterministic given the config (incl. seed)."""
    ac = new_policy(cfg)
    ppo_cfg = cfg.trainer.ppo()
    actor_opt, critic_opt = init_optimizers(ac, ppo_cfg)
    rows = []
    for it in range(cfg.run.iterations):
        buffers = collect_rollouts(
            cfg, ac, cfg.run.workers, cfg.run.episodes_per_worker, rollout_seeds(cfg, it)
        )
        update_rng = spawn_rng(cfg.run.seed, UPDATE_STREAM, it)
        ac, actor_opt, critic_opt, stats = ppo_update(
            buffers, ac, actor_opt, critic_opt, ppo_cfg, update_rng
        )
        row = {
            "iter": it,
            "episodes": len(buffers),
            "mean_qoe": float(np.mean([b.episode_return for b in buffers])),
            "actor_loss": stats.actor_loss,
            "critic_loss": stats.critic_loss,
            "clip_frac": stats.clip_fraction,
            "entropy": stats.entropy,
            "mean_ratio": stats.mean_ratio,
        }
        rows.append(row)
        if progress is not None:
            progress(row)
    return TrainResult(policy=ac, actor_opt=actor_opt, critic_opt=critic_opt, rows=rows)


EVALUATION_COLUMNS = ("episode", "qoe", "mean_rate", "mean_recovery_acc", "rebuffer_s")


def evaluate_policy(
    cfg: ExperimentConfig, policy: ActorCritic | None, episodes: int, seed: int
) -> list:
    """Frozen-policy evaluation over seeded episodes.

    policy=None runs the uniform-random baseline (commands uniform on the
    [-1, 1] action box). The trained policy acts with its mean action, so a
    given (config, seed) pair always reproduces the same rows.
    """
    rows = []
    for episode in range(episodes):
        rng = spawn_rng(seed, EVAL_STREAM, episode)
        env = StreamingEnv(cfg, rng)
        obs = env.reset()
        total_qoe = 0.0
        rates, accs, rebuffer = [], [], []
        for _ in range(cfg.run.slots_per_episode):
            if policy is None:
                act = rng.uniform(-1.0, 1.0, size=(UAV_COUNT, ACTION_DIM))
            else:
                act = policy.act_mean(obs)
            obs, reward, info = env.step(act)
            total_qoe += reward
            rates.append(float(info.rates.mean()))
            accs.append(info.recovery_acc)
            rebuffer.append(info.rebuffer_seconds)
        rows.append(
            {
                "episode": episode,
                "qoe": total_qoe,
                "mean_rate": float(np.mean(rates)),
                "mean_recovery_acc": float(np.mean(accs)),
                "rebuffer_s": float(np.sum(rebuffer)),
            }
        )
    return rows


def summarize(rows: list, key: str = "qoe"):
    values = np.array([r[key] for r in rows])
    return float(values.mean()), float(values.std())


SWEEP_COLUMNS = ("param", "value", "mean_qoe", "std_qoe", "episodes")

SWEEP_PARAMS = {"bandwidth": "bandwidth_hz", "rician": "rician_factor"}


def sweep_policy(
    cfg: ExperimentConfig, policy: ActorCritic | None, param: str, values, episodes: int, seed: int
) -> list:
    """Evaluate a frozen policy across a one-parameter channel grid.

    Episode seeds are shared across grid points (common random numbers), so
    differences reflect the swept parameter, not sampling noise.
    """
    if param not in SWEEP_PARAMS:
        raise ValueError(f"unknown sweep parameter {param!r}; choose from {sorted(SWEEP_PARAMS)}")
    field = SWEEP_PARAMS[param]
    rows = []
    for value in values:
        swept = replace(cfg, channel=replace(cfg.channel, **{field: value}))
        eval_rows = evaluate_policy(swept, policy, episodes, seed)
        mean, std = summarize(eval_rows)
        rows.append(
            {
                "param": param,
                "value": value,
                "mean_qoe": mean,
                "std_qoe": std,
                "episodes": episodes,
            }
        )
    return rows


CODEC_DEMO_COLUMNS = ("step", "distortion")


def codec_demo(seed: int, steps: int = 100, batch: int = 512):
    """EMA codebook convergence on a fixed 4-component Gaussian mixture batch.

    Returns (rows, initial distortion, final distortion); distortion is the
    mean squared quantization error on the batch.
    """
    from . import codec

    rng = np.random.default_rng(seed)
    centers = np.array([[2.0, 2.0], [-2.0, 2.0], [-2.0, -2.0], [2.0, -2.0]])
    component = rng.integers(0, 4, size=batch)
    points = centers[component] + 0.3 * rng.standard_normal((batch, 2))
    grid = points.reshape(batch, 1, 2)

    book = codec.new_codebook(rng, size=4, dim=2, decay=0.9)
    rows = []
    initial = codec.distortion(grid, book)
    for step in range(steps):
        assignments, _ = codec.quantize(grid, book)
        book = codec.ema_update(book, grid, assignments)
        rows.append({"step": step, "distortion": codec.distortion(grid, book)})
    return rows, initial, rows[-1]["distortion"]
