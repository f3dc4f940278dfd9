"""Small feedforward approximator with hand-derived gradients and Adam.

Fixed architecture: input -> 64 -> 64 -> output, tanh hidden units, linear
output. Actor networks additionally carry a state-independent per-dimension
log-std vector. Gradients are exact reverse-mode; the optimizer is the
bias-corrected adaptive-moment update.
"""

from dataclasses import dataclass, field

import numpy as np

HIDDEN_SIZES = (64, 64)
LOG_STD_INIT = float(np.log(0.5))
LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0


@dataclass
class MlpParams:
    """Layer weights/biases; weights are (fan_in, fan_out)."""

    weights: list
    biases: list
    log_std: np.ndarray | None = None

    @property
    def layer_count(self) -> int:
        return len(self.weights)


@dataclass
class MlpGrads:
    weights: list
    biases: list
    log_std: np.ndarray | None = None


def mlp_init(
    rng: np.random.Generator,
    in_dim: int,
    out_dim: int,
    with_log_std: bool = False,
    log_std_init: float = LOG_STD_INIT,
) -> MlpParams:
    """Seeded init: weights uniform in +-sqrt(6/(fan_in+fan_out)), zero biases."""
    sizes = (in_dim, *HIDDEN_SIZES, out_dim)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    log_std = np.full(out_dim, log_std_init) if with_log_std else None
    return MlpParams(weights=weights, biases=biases, log_std=log_std)


def forward(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Batched forward pass; accepts (B, in) or (in,)."""
    squeeze = x.ndim == 1
    h = np.atleast_2d(x)
    last = params.layer_count - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = h @ w + b
        if i != last:
            h = np.tanh(h)
    return h[0] if squeeze else h


def forward_cached(params: MlpParams, x: np.ndarray):
    """Forward pass keeping per-layer activations for the backward pass."""
    h = np.atleast_2d(x)
    activations = [h]
    last = params.layer_count - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = h @ w + b
        if i != last:
            h = np.tanh(h)
        activations.append(h)
    return h, activations


def backward(params: MlpParams, x: np.ndarray, upstream: np.ndarray) -> MlpGrads:
    """Exact gradients of a scalar loss whose output-gradient is ``upstream``.

    ``upstream`` has the output shape; contributions are summed over the
    batch, so any 1/B normalization belongs to the caller's upstream.
    """
    x = np.atleast_2d(x)
    upstream = np.atleast_2d(upstream)
    if upstream.shape[0] != x.shape[0]:
        raise ValueError("batch sizes of x and upstream differ")
    _, acts = forward_cached(params, x)
    grad_w = [None] * params.layer_count
    grad_b = [None] * params.layer_count
    delta = upstream
    for i in range(params.layer_count - 1, -1, -1):
        grad_w[i] = acts[i].T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ params.weights[i].T) * (1.0 - acts[i] ** 2)
    log_std_grad = np.zeros_like(params.log_std) if params.log_std is not None else None
    return MlpGrads(weights=grad_w, biases=grad_b, log_std=log_std_grad)


def params_to_vector(params: MlpParams) -> np.ndarray:
    """Flatten all parameters (finite-difference and checkpoint helper)."""
    parts = [w.ravel() for w in params.weights] + [b.ravel() for b in params.biases]
    if params.log_std is not None:
        parts.append(params.log_std.ravel())
    return np.concatenate(parts)


def vector_to_params(vec: np.ndarray, like: MlpParams) -> MlpParams:
    """Inverse of params_to_vector with shapes taken from ``like``."""
    out_w, out_b = [], []
    pos = 0
    for w in like.weights:
        out_w.append(vec[pos : pos + w.size].reshape(w.shape).copy())
        pos += w.size
    for b in like.biases:
        out_b.append(vec[pos : pos + b.size].reshape(b.shape).copy())
        pos += b.size
    log_std = None
    if like.log_std is not None:
        log_std = vec[pos : pos + like.log_std.size].copy()
        pos += like.log_std.size
    if pos != vec.size:
        raise ValueError("vector length does not match parameter shapes")
    return MlpParams(weights=out_w, biases=out_b, log_std=log_std)


def grads_to_vector(grads: MlpGrads) -> np.ndarray:
    parts = [w.ravel() for w in grads.weights] + [b.ravel() for b in grads.biases]
    if grads.log_std is not None:
        parts.append(grads.log_std.ravel())
    return np.concatenate(parts)


@dataclass
class AdamState:
    """Moment accumulators and hyperparameters for one parameter set."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: np.ndarray = field(default_factory=lambda: np.zeros(0))
    v: np.ndarray = field(default_factory=lambda: np.zeros(0))


def adam_init(params: MlpParams, lr: float, beta1: float = 0.9, beta2: float = 0.999) -> AdamState:
    size = params_to_vector(params).size
    return AdamState(lr=lr, beta1=beta1, beta2=beta2, m=np.zeros(size), v=np.zeros(size))


def adam_step(params: MlpParams, grads: MlpGrads, state: AdamState):
    """One descent step; returns (new params, new state). Deterministic."""
    theta = params_to_vector(params)
    g = grads_to_vector(grads)
    if g.size != theta.size:
        raise ValueError("gradient size does not match parameters")
    step = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * g
    v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = m / (1.0 - state.beta1**step)
    v_hat = v / (1.0 - state.beta2**step)
    theta = theta - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    new_state = AdamState(
        lr=state.lr, beta1=state.beta1, beta2=state.beta2, eps=state.eps, step=step, m=m, v=v
    )
    return vector_to_params(theta, params), new_state
