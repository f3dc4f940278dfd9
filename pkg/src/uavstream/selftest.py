"""Built-in oracle and invariant battery behind the `selftest` subcommand.

Each check recomputes expected values with plain-Python brute force,
independent of the library code paths it verifies.
"""

import math

import numpy as np

from . import bitrate as br
from . import codec, ppo
from .channel import ChannelParams, downlink_rates, sample_channel
from .config import default_config, load_config, serialize_config
from .env import collect_rollouts
from .experiments import codec_demo, new_policy
from .nets import backward, forward, grads_to_vector, mlp_init, params_to_vector, vector_to_params
from .recovery import FrameWindow, masked_cross_entropy, temporal_hold_recover
from .bitrate import full_frame


def _check_rates(rng):
    params = ChannelParams()
    worst = 0.0
    for _ in range(100):
        m = int(rng.integers(1, 6))
        powers = rng.uniform(0.5, 5.0, m)
        channels = [sample_channel(rng, rng.uniform(50, 300), params) for _ in range(m)]
        rates = downlink_rates(powers, channels, params)
        for i in range(m):
            interference = sum(
                powers[j] * abs(channels[j].coefficient) ** 2 for j in range(m) if j != i
            )
            sinr = powers[i] * abs(channels[i].coefficient) ** 2 / (
                params.bandwidth_hz * params.noise_psd + interference
            )
            expected = params.bandwidth_hz * math.log2(1.0 + sinr)
            worst = max(worst, abs(rates[i] - expected) / max(abs(expected), 1e-30))
    return worst < 1e-9, f"max rel err {worst:.2e}"


def _check_returns_and_gae(rng):
    worst = 0.0
    for _ in range(100):
        t = int(rng.integers(1, 40))
        rewards = rng.normal(size=t)
        values = rng.normal(size=t + 1)
        values[-1] = 0.0
        gamma = rng.uniform(0.5, 1.0)
        lam = rng.uniform(0.5, 1.0)
        returns = ppo.discounted_returns(rewards, gamma)
        adv = ppo.gae(rewards, values, gamma, lam)
        for start in range(t):
            ret = sum(gamma ** (k - start) * rewards[k] for k in range(start, t))
            worst = max(worst, abs(returns[start] - ret))
            total = 0.0
            for lag in range(t - start):
                delta = rewards[start + lag] + gamma * values[start + lag + 1] - values[start + lag]
                total += (lam * gamma) ** lag * delta
            worst = max(worst, abs(adv[start] - total))
    return worst < 1e-9, f"max abs err {worst:.2e}"


def _check_clip(rng):
    eps = 0.2
    worst = 0.0
    for _ in range(200):
        ratio = rng.uniform(0.0, 2.5)
        adv = rng.normal()
        got = ppo.clip_objective(ratio, adv, eps)
        g = (1 + eps) * adv if adv >= 0 else (1 - eps) * adv
        worst = max(worst, abs(got - min(ratio * adv, g)))
    return worst < 1e-12, f"max abs err {worst:.2e}"


def _check_masked_ce(rng):
    worst = 0.0
    for _ in range(100):
        h, w, s = int(rng.integers(1, 6)), int(rng.integers(1, 6)), int(rng.integers(2, 9))
        probs = rng.uniform(0.01, 1.0, size=(h, w, s))
        probs /= probs.sum(axis=-1, keepdims=True)
        truth = rng.integers(0, s, size=(h, w))
        mask = (rng.random((h, w)) < 0.5).astype(np.uint8)
        got = masked_cross_entropy(probs, truth, mask)
        expected = 0.0
        for i in range(h):
            for j in range(w):
                if mask[i, j]:
                    expected -= math.log(probs[i, j, truth[i, j]])
        worst = max(worst, abs(got - expected))
    return worst < 1e-9, f"max abs err {worst:.2e}"


def _check_laplace(rng):
    worst = 0.0
    for _ in range(100):
        k = int(rng.integers(2, 12))
        counts = rng.uniform(0.0, 3.0, k)
        total = counts.sum()
        eps = 10.0 ** rng.uniform(-8, -3)
        smoothed = codec.laplace_smooth(counts, total, k, eps)
        for i in range(k):
            expected = (counts[i] + eps) / (total + k * eps) * total
            worst = max(worst, abs(smoothed[i] - expected))
        worst = max(worst, abs(smoothed.sum() - total) / max(total, 1e-12))
    return worst < 1e-9, f"max err {worst:.2e}"


def _check_ema(rng):
    worst = 0.0
    for _ in range(100):
        k, dim = int(rng.integers(2, 6)), int(rng.integers(1, 4))
        book = codec.new_codebook(rng, k, dim, decay=rng.uniform(0.5, 0.99))
        grid = rng.normal(size=(int(rng.integers(1, 5)), int(rng.integers(1, 5)), dim))
        assignments, _ = codec.quantize(grid, book)
        updated = codec.ema_update(book, grid, assignments)
        gamma = book.decay
        flat = grid.reshape(-1, dim)
        flat_idx = assignments.reshape(-1)
        for entry in range(k):
            count = float((flat_idx == entry).sum())
            vec_sum = flat[flat_idx == entry].sum(axis=0) if count else np.zeros(dim)
            c_new = gamma * book.cluster_size[entry] + (1 - gamma) * count
            w_new = gamma * book.embedding_sum[entry] + (1 - gamma) * vec_sum
            worst = max(worst, abs(updated.cluster_size[entry] - c_new))
            worst = max(worst, float(np.max(np.abs(updated.embedding_sum[entry] - w_new))))
    return worst < 1e-9, f"max abs err {worst:.2e}"


def _check_quantize(rng):
    for _ in range(50):
        h, w = int(rng.integers(1, 9)), int(rng.integers(1, 9))
        dim, k = int(rng.integers(1, 5)), int(rng.integers(2, 65))
        book = codec.new_codebook(rng, k, dim)
        grid = rng.normal(size=(h, w, dim))
        indices, quantized = codec.quantize(grid, book)
        for i in range(h):
            for j in range(w):
                best_k, best_d = 0, math.inf
                for entry in range(k):
                    dist = sum(
                        (grid[i, j, t] - book.entries[entry, t]) ** 2 for t in range(dim)
                    )
                    if dist < best_d:
                        best_d, best_k = dist, entry
                if indices[i, j] != best_k:
                    return False, f"mismatch at ({i},{j})"
                if not np.array_equal(quantized[i, j], book.entries[best_k]):
                    return False, "quantized vector is not the chosen codeword"
    # engineered tie: equidistant cell must pick the lowest index
    book = codec.Codebook(
        entries=np.array([[0.0, 0.0], [1.0, 1.0]]),
        cluster_size=np.ones(2),
        embedding_sum=np.array([[0.0, 0.0], [1.0, 1.0]]),
    )
    tie, _ = codec.quantize(np.full((1, 1, 2), 0.5), book)
    return tie[0, 0] == 0, "tie-break"


def _check_vq_convergence(_rng):
    # pinned demo seed: the halving criterion is a property of the seeded setup
    _, initial, final = codec_demo(seed=0)
    return final <= 0.5 * initial, f"distortion {initial:.4f} -> {final:.4f}"


def _check_drop_budget(rng):
    for _ in range(300):
        h, w = int(rng.integers(1, 9)), int(rng.integers(1, 9))
        size = 2 ** int(rng.integers(1, 8))
        per_token = br.token_bits(size)
        target = float(rng.uniform(0, h * w * per_token * 1.2))
        indices = rng.integers(0, size, size=(h, w))
        mode = "stride" if rng.random() < 0.5 else "random"
        frame = br.plan_drops(indices, size, target, mode=mode, seed=int(rng.integers(2**31)))
        achieved = frame.payload_bits
        if achieved > target:
            return False, "budget exceeded"
        if target <= h * w * per_token and achieved <= target - per_token:
            return False, "kept fewer tokens than the budget allows"
        if achieved % per_token:
            return False, "achieved bits off the log2(S) grid"
    return True, "budget and granularity hold"


def _check_recovery(rng):
    for _ in range(50):
        h, w = int(rng.integers(2, 7)), int(rng.integers(2, 7))
        size = 16
        truth = rng.integers(0, size, size=(h, w))
        window = FrameWindow(4)
        for _ in range(3):
            frame = br.apply_channel_loss(full_frame(truth, size), 0.4, rng)
            window.push(frame)
        newest = br.apply_channel_loss(full_frame(truth, size), 0.4, rng)
        window.push(newest)
        recovered = temporal_hold_recover(window)
        received = newest.mask == 0
        if not np.array_equal(recovered[received], newest.indices[received]):
            return False, "pass-through violated"
        stacked = np.stack([f.mask for f in window.frames])
        covered = (stacked == 0).any(axis=0)
        wrong = (recovered != truth) & covered
        if wrong.any():
            return False, "static sequence not recovered at covered positions"
    return True, "pass-through and static recovery hold"


def _check_gradients(rng):
    params = mlp_init(rng, 3, 2, with_log_std=False)
    x = rng.normal(size=(4, 3))
    target = rng.normal(size=(4, 2))

    def loss_at(vec):
        p = vector_to_params(vec, params)
        return float(np.mean((forward(p, x) - target) ** 2))

    out = forward(params, x)
    upstream = 2.0 * (out - target) / out.size
    grads = grads_to_vector(backward(params, x, upstream))
    theta = params_to_vector(params)
    worst = 0.0
    picks = rng.choice(theta.size, size=20, replace=False)
    for idx in picks:
        step = 1e-5
        plus, minus = theta.copy(), theta.copy()
        plus[idx] += step
        minus[idx] -= step
        numeric = (loss_at(plus) - loss_at(minus)) / (2 * step)
        denom = max(abs(numeric), abs(grads[idx]), 1e-8)
        worst = max(worst, abs(numeric - grads[idx]) / denom)
    return worst < 1e-4, f"max rel err {worst:.2e}"


def _check_config_roundtrip(_rng):
    cfg = default_config()
    text = serialize_config(cfg)
    import os
    import tempfile

    fd, path = tempfile.mkstemp(suffix=".ini")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        again = load_config(path)
    finally:
        os.unlink(path)
    return again == cfg, "round-trip identity"


def _check_rollout_determinism(_rng):
    from dataclasses import replace

    cfg = default_config()
    cfg = replace(cfg, run=replace(cfg.run, slots_per_episode=5))
    ac = new_policy(cfg)
    first = collect_rollouts(cfg, ac, 2, 1, [11, 12])
    second = collect_rollouts(cfg, ac, 2, 1, [11, 12])
    ok = all(
        np.array_equal(a.rewards, b.rewards) and np.array_equal(a.actions, b.actions)
        for a, b in zip(first, second)
    )
    singles = collect_rollouts(cfg, ac, 1, 1, [11]) + collect_rollouts(cfg, ac, 1, 1, [12])
    union = all(
        np.array_equal(a.rewards, b.rewards) for a, b in zip(first, singles)
    )
    return ok and union, "repeat and union equality"


CHECKS = (
    ("downlink-rates-oracle", _check_rates),
    ("returns-and-gae-oracle", _check_returns_and_gae),
    ("clip-objective-oracle", _check_clip),
    ("masked-cross-entropy-oracle", _check_masked_ce),
    ("laplace-smoothing-oracle", _check_laplace),
    ("ema-update-oracle", _check_ema),
    ("quantizer-exactness", _check_quantize),
    ("ema-vq-convergence", _check_vq_convergence),
    ("drop-budget-compliance", _check_drop_budget),
    ("recovery-invariants", _check_recovery),
    ("gradient-check", _check_gradients),
    ("config-roundtrip", _check_config_roundtrip),
    ("rollout-determinism", _check_rollout_determinism),
)


def run_selftest(seed: int = 0):
    """Run every check; returns (all passed, list of (name, ok, detail))."""
    results = []
    for name, fn in CHECKS:
        rng = np.random.default_rng(seed)
        ok, detail = fn(rng)
        results.append((name, bool(ok), detail))
    return all(ok for _, ok, _ in results), results
