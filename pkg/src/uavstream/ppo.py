"""Multi-UAV PPO: shared diagonal-Gaussian actor, centralized critic.

One actor is evaluated on each UAV's local observation; one critic scores
the concatenated team observation. Every UAV's transition carries the same
team reward (the slot QoE), so advantages are computed once per slot and
shared across the UAV axis. Updates use the clipped surrogate with an
entropy bonus for the actor and squared-error regression on discounted
returns for the critic.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import nets
from .nets import AdamState, MlpParams, adam_init, adam_step, backward, forward

LOG_2PI = math.log(2.0 * math.pi)


def discounted_returns(rewards, gamma: float) -> np.ndarray:
    """R_t = sum_{t' >= t} gamma^(t'-t) r_t'."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    rewards = np.asarray(rewards, dtype=float)
    out = np.empty_like(rewards)
    acc = 0.0
    for t in range(rewards.size - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        out[t] = acc
    return out


def gae(rewards, values, gamma: float, lam: float) -> np.ndarray:
    """Advantages A_t = sum_l (lam*gamma)^l delta_{t+l} with delta_t = r_t + gamma*V_{t+1} - V_t.

    ``values`` has length T+1 and includes the terminal bootstrap (0 for
    finished episodes). Computed by the standard backward recursion.
    """
    if not (0.0 < gamma <= 1.0 and 0.0 < lam <= 1.0):
        raise ValueError("gamma and lam must lie in (0, 1]")
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.size != rewards.size + 1:
        raise ValueError("values must have length T+1")
    out = np.empty_like(rewards)
    acc = 0.0
    for t in range(rewards.size - 1, -1, -1):
        delta = rewards[t] + gamma * values[t + 1] - values[t]
        acc = delta + gamma * lam * acc
        out[t] = acc
    return out


def clip_objective(ratio, advantage, clip_eps: float):
    """min(ratio*A, g(eps, A)) with g = (1+eps)A for A >= 0, (1-eps)A otherwise."""
    if not 0.0 < clip_eps < 1.0:
        raise ValueError("clip_eps must lie in (0, 1)")
    ratio = np.asarray(ratio, dtype=float)
    advantage = np.asarray(advantage, dtype=float)
    clipped = np.where(advantage >= 0.0, (1.0 + clip_eps) * advantage, (1.0 - clip_eps) * advantage)
    out = np.minimum(ratio * advantage, clipped)
    return float(out) if out.ndim == 0 else out


def gaussian_log_prob(mean, log_std, action):
    """Diagonal-Gaussian log density, summed over action dimensions."""
    mean = np.asarray(mean, dtype=float)
    action = np.asarray(action, dtype=float)
    log_std = np.asarray(log_std, dtype=float)
    z = (action - mean) / np.exp(log_std)
    per_dim = -0.5 * LOG_2PI - log_std - 0.5 * z * z
    return per_dim.sum(axis=-1)


def entropy(log_std) -> float:
    """Diagonal-Gaussian entropy: sum over dims of 0.5*ln(2*pi*e) + log_std."""
    log_std = np.asarray(log_std, dtype=float)
    return float((0.5 * (LOG_2PI + 1.0) + log_std).sum())


def critic_loss(values, returns) -> float:
    """Mean squared error between value estimates and return targets."""
    values = np.asarray(values, dtype=float)
    returns = np.asarray(returns, dtype=float)
    if values.shape != returns.shape:
        raise ValueError("values and returns must have equal length")
    return float(np.mean((values - returns) ** 2))


def normalize_advantages(advantages, center: bool = True) -> np.ndarray:
    """Unit-std rescale, optionally zero-mean centered."""
    advantages = np.asarray(advantages, dtype=float)
    shifted = advantages - advantages.mean() if center else advantages
    return shifted / (advantages.std() + 1e-8)


@dataclass
class PpoConfig:
    clip_eps: float = 0.2
    entropy_weight: float = 0.01
    gamma: float = 0.99
    gae_lambda: float = 0.95
    learning_rate: float = 5e-4
    epochs: int = 4
    minibatch: int = 64
    normalize_adv: bool = True


@dataclass
class ActorCritic:
    """Shared actor, centralized critic, and fixed observation standardization."""

    actor: MlpParams
    critic: MlpParams
    obs_shift: np.ndarray
    obs_scale: np.ndarray

    @property
    def obs_dim(self) -> int:
        return self.obs_shift.size

    def normalize(self, obs: np.ndarray) -> np.ndarray:
        return (np.asarray(obs, dtype=float) - self.obs_shift) * self.obs_scale

    def act(self, obs: np.ndarray, rng: np.random.Generator):
        """Sample per-UAV actions; returns (actions (M, A), log-probs (M,))."""
        mean = forward(self.actor, self.normalize(obs))
        std = np.exp(self.actor.log_std)
        actions = mean + std * rng.standard_normal(mean.shape)
        return actions, gaussian_log_prob(mean, self.actor.log_std, actions)

    def act_mean(self, obs: np.ndarray) -> np.ndarray:
        """Deterministic (mean) actions for evaluation."""
        return forward(self.actor, self.normalize(obs))

    def value(self, obs: np.ndarray) -> float:
        """Centralized value of the concatenated per-UAV observations."""
        flat = self.normalize(obs).reshape(1, -1)
        return float(forward(self.critic, flat)[0, 0])


def new_actor_critic(
    rng: np.random.Generator, obs_dim: int, act_dim: int, uav_count: int, obs_shift, obs_scale
) -> ActorCritic:
    actor = nets.mlp_init(rng, obs_dim, act_dim, with_log_std=True)
    critic = nets.mlp_init(rng, obs_dim * uav_count, 1)
    return ActorCritic(
        actor=actor,
        critic=critic,
        obs_shift=np.asarray(obs_shift, dtype=float),
        obs_scale=np.asarray(obs_scale, dtype=float),
    )


@dataclass
class RolloutBuffer:
    """One episode of team transitions plus post-finalize advantages/returns."""

    observations: np.ndarray  # (T, M, D)
    actions: np.ndarray  # (T, M, A)
    log_probs: np.ndarray  # (T, M)
    rewards: np.ndarray  # (T,)
    values: np.ndarray  # (T,)
    advantages: np.ndarray | None = None
    returns: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def slots(self) -> int:
        return self.rewards.size

    @property
    def episode_return(self) -> float:
        return float(self.rewards.sum())

    def finalize(self, gamma: float, lam: float) -> None:
        """Compute advantages (GAE, terminal bootstrap 0) and return targets."""
        values_ext = np.append(self.values, 0.0)
        self.advantages = gae(self.rewards, values_ext, gamma, lam)
        self.returns = discounted_returns(self.rewards, gamma)


@dataclass
class UpdateStats:
    actor_loss: float
    critic_loss: float
    clip_fraction: float
    entropy: float
    mean_ratio: float


def actor_loss_and_grads(actor: MlpParams, obs, actions, logp_old, adv, cfg: PpoConfig):
    """Loss and exact gradients of the clipped surrogate plus entropy bonus.

    ``obs`` must already be normalized. Returns (loss, grads, stat row) with
    the row holding (loss, clip fraction, mean ratio, entropy).
    """
    batch = obs.shape[0]
    mean = forward(actor, obs)
    log_std = actor.log_std
    logp_new = gaussian_log_prob(mean, log_std, actions)
    ratio = np.exp(logp_new - logp_old)
    clipped = np.where(adv >= 0.0, (1.0 + cfg.clip_eps) * adv, (1.0 - cfg.clip_eps) * adv)
    unclipped = ratio * adv
    surrogate = np.minimum(unclipped, clipped)
    ent = entropy(log_std)
    loss = float(-surrogate.mean() - cfg.entropy_weight * ent)

    # gradient flows through the ratio only where ratio*A attains the min
    active = (unclipped <= clipped).astype(float)
    dlogp = -(ratio * adv * active) / batch
    std = np.exp(log_std)
    z = (actions - mean) / std
    upstream_mean = dlogp[:, None] * z / std
    grads = backward(actor, obs, upstream_mean)
    grads.log_std = (dlogp[:, None] * (z * z - 1.0)).sum(axis=0) - cfg.entropy_weight
    clip_frac = float((np.abs(ratio - 1.0) > cfg.clip_eps).mean())
    return loss, grads, (loss, clip_frac, float(ratio.mean()), ent)


def _actor_minibatch_step(ac, actor_opt, obs, actions, logp_old, adv, cfg):
    """One clipped-surrogate ascent step; returns (params, opt state, stat row)."""
    _, grads, row = actor_loss_and_grads(ac.actor, obs, actions, logp_old, adv, cfg)
    new_actor, new_opt = adam_step(ac.actor, grads, actor_opt)
    new_actor.log_std = np.clip(new_actor.log_std, nets.LOG_STD_MIN, nets.LOG_STD_MAX)
    return new_actor, new_opt, row


def _critic_minibatch_step(ac, critic_opt, obs, targets):
    batch = obs.shape[0]
    values = forward(ac.critic, obs)[:, 0]
    loss = critic_loss(values, targets)
    upstream = (2.0 * (values - targets) / batch)[:, None]
    grads = backward(ac.critic, obs, upstream)
    new_critic, new_opt = adam_step(ac.critic, grads, critic_opt)
    return new_critic, new_opt, loss


def ppo_update(
    buffers,
    ac: ActorCritic,
    actor_opt: AdamState,
    critic_opt: AdamState,
    cfg: PpoConfig,
    rng: np.random.Generator,
):
    """K epochs of minibatched actor ascent and critic descent over the buffers.

    Returns (actor_critic, actor_opt, critic_opt, stats). Buffers must be
    finalized; advantages are normalized over the aggregated batch.
    """
    if not buffers:
        raise ValueError("no rollout buffers")
    if any(b.advantages is None for b in buffers):
        raise ValueError("buffers must be finalized before the update")

    t_total, m = 0, buffers[0].observations.shape[1]
    obs = np.concatenate([b.observations.reshape(-1, b.observations.shape[-1]) for b in buffers])
    actions = np.concatenate([b.actions.reshape(-1, b.actions.shape[-1]) for b in buffers])
    logp_old = np.concatenate([b.log_probs.reshape(-1) for b in buffers])
    adv_slot = np.concatenate([b.advantages for b in buffers])
    adv = np.repeat(adv_slot, m)
    if cfg.normalize_adv:
        adv = normalize_advantages(adv)
    critic_obs = np.concatenate([b.observations.reshape(b.slots, -1) for b in buffers])
    targets = np.concatenate([b.returns for b in buffers])
    t_total = targets.size

    norm_obs = ac.normalize(obs.reshape(-1, ac.obs_dim))
    norm_critic_obs = ac.normalize(critic_obs.reshape(t_total, m, ac.obs_dim)).reshape(t_total, -1)

    actor, critic = ac.actor, ac.critic
    stats_rows = []
    critic_losses = []
    n_actor = norm_obs.shape[0]
    for _ in range(cfg.epochs):
        order = rng.permutation(n_actor)
        for start in range(0, n_actor, cfg.minibatch):
            sel = order[start : start + cfg.minibatch]
            bundle = ActorCritic(actor, critic, ac.obs_shift, ac.obs_scale)
            actor, actor_opt, row = _actor_minibatch_step(
                bundle, actor_opt, norm_obs[sel], actions[sel], logp_old[sel], adv[sel], cfg
            )
            stats_rows.append(row)
        order = rng.permutation(t_total)
        for start in range(0, t_total, cfg.minibatch):
            sel = order[start : start + cfg.minibatch]
            bundle = ActorCritic(actor, critic, ac.obs_shift, ac.obs_scale)
            critic, critic_opt, c_loss = _critic_minibatch_step(
                bundle, critic_opt, norm_critic_obs[sel], targets[sel]
            )
            critic_losses.append(c_loss)

    rows = np.array([r[:3] for r in stats_rows])
    stats = UpdateStats(
        actor_loss=float(rows[:, 0].mean()),
        critic_loss=float(np.mean(critic_losses)),
        clip_fraction=float(rows[:, 1].mean()),
        entropy=stats_rows[-1][3],
        mean_ratio=float(rows[:, 2].mean()),
    )
    return ActorCritic(actor, critic, ac.obs_shift, ac.obs_scale), actor_opt, critic_opt, stats


def init_optimizers(ac: ActorCritic, cfg: PpoConfig):
    return adam_init(ac.actor, cfg.learning_rate), adam_init(ac.critic, cfg.learning_rate)


CHECKPOINT_VERSION = 1


def save_checkpoint(path, ac: ActorCritic, actor_opt: AdamState, critic_opt: AdamState) -> None:
    """Versioned dump of parameters and optimizer states; round-trips bit-exactly."""
    payload = {"version": np.array(CHECKPOINT_VERSION)}
    for tag, params in (("actor", ac.actor), ("critic", ac.critic)):
        for i, (w, b) in enumerate(zip(params.weights, params.biases)):
            payload[f"{tag}_w{i}"] = w
            payload[f"{tag}_b{i}"] = b
        payload[f"{tag}_layers"] = np.array(params.layer_count)
    payload["actor_log_std"] = ac.actor.log_std
    payload["obs_shift"] = ac.obs_shift
    payload["obs_scale"] = ac.obs_scale
    for tag, opt in (("aopt", actor_opt), ("copt", critic_opt)):
        payload[f"{tag}_m"] = opt.m
        payload[f"{tag}_v"] = opt.v
        payload[f"{tag}_meta"] = np.array([opt.lr, opt.beta1, opt.beta2, opt.eps, opt.step])
    np.savez(path, **payload)


def load_checkpoint(path):
    """Inverse of save_checkpoint; returns (actor_critic, actor_opt, critic_opt)."""
    data = np.load(path)
    if int(data["version"]) != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {int(data['version'])}")
    params = {}
    for tag in ("actor", "critic"):
        layers = int(data[f"{tag}_layers"])
        weights = [data[f"{tag}_w{i}"] for i in range(layers)]
        biases = [data[f"{tag}_b{i}"] for i in range(layers)]
        params[tag] = MlpParams(weights=weights, biases=biases)
    params["actor"].log_std = data["actor_log_std"]
    ac = ActorCritic(
        actor=params["actor"],
        critic=params["critic"],
        obs_shift=data["obs_shift"],
        obs_scale=data["obs_scale"],
    )
    opts = []
    for tag in ("aopt", "copt"):
        lr, beta1, beta2, eps, step = data[f"{tag}_meta"]
        opts.append(
            AdamState(
                lr=float(lr),
                beta1=float(beta1),
                beta2=float(beta2),
                eps=float(eps),
                step=int(step),
                m=data[f"{tag}_m"],
                v=data[f"{tag}_v"],
            )
        )
    return ac, opts[0], opts[1]
