"""EMA vector-quantization codebook over semantic feature grids.

A frame's feature grid (h, w, n_z) is mapped cell-by-cell to the nearest of
K codebook entries. The codebook learns by exponential moving averages of
per-entry cluster sizes and embedding sums; entries are the ratio of the two
with Laplace-smoothed counts so empty clusters never divide by zero.

Feature grids and index frames are plain numpy arrays: float (h, w, n_z)
and int64 (h, w) respectively.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .kernels import assign_nearest


class AllZeroStatisticsError(ValueError):
    """Every cluster count is zero; the smoothed update is undefined."""


@dataclass
class Codebook:
    """K embedding vectors with EMA cluster-size and embedding-sum statistics."""

    entries: np.ndarray  # (K, n_z)
    cluster_size: np.ndarray  # (K,)
    embedding_sum: np.ndarray  # (K, n_z)
    decay: float = 0.99
    epsilon: float = 1e-5

    def __post_init__(self):
        if self.entries.ndim != 2 or self.entries.shape[0] < 2:
            raise ValueError("codebook needs at least 2 entries")
        if not 0.0 < self.decay < 1.0:
            raise ValueError("decay must lie in (0, 1)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if np.any(self.cluster_size < 0):
            raise ValueError("cluster sizes must be nonnegative")
        if not np.all(np.isfinite(self.entries)):
            raise ValueError("entries must be finite")

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def dim(self) -> int:
        return self.entries.shape[1]


def new_codebook(
    rng: np.random.Generator, size: int, dim: int, decay: float = 0.99, epsilon: float = 1e-5
) -> Codebook:
    """Seeded codebook: standard-normal entries, unit counts, sums equal to the entries."""
    entries = rng.standard_normal((size, dim))
    return Codebook(
        entries=entries,
        cluster_size=np.ones(size),
        embedding_sum=entries.copy(),
        decay=decay,
        epsilon=epsilon,
    )


def quantize(grid: np.ndarray, book: Codebook):
    """Nearest-codeword assignment per cell; ties go to the lowest index.

    Returns (index frame (h, w) int64, quantized grid (h, w, n_z)).
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 3 or grid.shape[2] != book.dim:
        raise ValueError(
            f"grid must be (h, w, {book.dim}), got {grid.shape}"
        )
    h, w, _ = grid.shape
    flat = np.ascontiguousarray(grid.reshape(h * w, book.dim))
    entries = np.ascontiguousarray(book.entries)
    idx = assign_nearest(flat, entries)
    indices = idx.reshape(h, w)
    quantized = book.entries[idx].reshape(h, w, book.dim)
    return indices, quantized


def laplace_smooth(counts: np.ndarray, total: float, size: int, epsilon: float) -> np.ndarray:
    """Additive-epsilon smoothing that keeps the count total: (c+eps)/(n+K*eps)*n."""
    if total == 0:
        raise AllZeroStatisticsError("all cluster counts are zero")
    counts = np.asarray(counts, dtype=float)
    return (counts + epsilon) / (total + size * epsilon) * total


def ema_update(book: Codebook, grid: np.ndarray, assignments: np.ndarray) -> Codebook:
    """One EMA step from a grid and its fresh assignments; returns a new codebook.

    Cluster sizes and embedding sums decay toward the batch statistics
    (counts and summed input vectors per entry); entries are the smoothed
    ratio. The carried statistics stay unsmoothed.
    """
    grid = np.asarray(grid, dtype=float)
    flat = grid.reshape(-1, book.dim)
    idx = np.asarray(assignments, dtype=np.int64).reshape(-1)
    counts = np.bincount(idx, minlength=book.size).astype(float)
    sums = np.zeros_like(book.embedding_sum)
    np.add.at(sums, idx, flat)

    gamma = book.decay
    new_counts = gamma * book.cluster_size + (1.0 - gamma) * counts
    new_sums = gamma * book.embedding_sum + (1.0 - gamma) * sums
    smoothed = laplace_smooth(new_counts, float(new_counts.sum()), book.size, book.epsilon)
    entries = new_sums / smoothed[:, None]
    return Codebook(
        entries=entries,
        cluster_size=new_counts,
        embedding_sum=new_sums,
        decay=book.decay,
        epsilon=book.epsilon,
    )


def distortion(grid: np.ndarray, book: Codebook) -> float:
    """Mean squared quantization error of a grid under the codebook."""
    _, quantized = quantize(grid, book)
    return float(np.mean((np.asarray(grid, dtype=float) - quantized) ** 2))


@dataclass(frozen=True)
class LossTerms:
    """Codec training losses; codec_loss = rec + lambda*commit + eta*gan."""

    rec_loss: float
    commit_loss: float
    gan_loss: float
    codec_loss: float
    lambda_commit: float
    eta: float
    delta: float = 1e-6  # stabilizer used when eta came from gradient norms

    @property
    def vq_total(self) -> float:
        return self.rec_loss + self.lambda_commit * self.commit_loss


def vq_loss(x, x_hat, grid, quantized, lambda_commit: float = 0.25) -> LossTerms:
    """Reconstruction (element-mean L1) plus weighted commitment (element-mean SE).

    The quantized grid is treated as a constant (the stop-gradient is a
    gradient-flow contract, not a value change). GAN terms are zeroed; use
    with_gan to complete them.
    """
    x = np.asarray(x, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    grid = np.asarray(grid, dtype=float)
    quantized = np.asarray(quantized, dtype=float)
    if x.shape != x_hat.shape or grid.shape != quantized.shape:
        raise ValueError("shape mismatch between inputs and reconstructions")
    rec = float(np.mean(np.abs(x - x_hat)))
    commit = float(np.mean((grid - quantized) ** 2))
    total = rec + lambda_commit * commit
    return LossTerms(
        rec_loss=rec,
        commit_loss=commit,
        gan_loss=0.0,
        codec_loss=total,
        lambda_commit=lambda_commit,
        eta=0.0,
    )


def with_gan(terms: LossTerms, gan: float, eta: float, delta: float = 1e-6) -> LossTerms:
    """Complete partial loss terms with an adversarial term and its adaptive weight."""
    return LossTerms(
        rec_loss=terms.rec_loss,
        commit_loss=terms.commit_loss,
        gan_loss=gan,
        codec_loss=terms.vq_total + eta * gan,
        lambda_commit=terms.lambda_commit,
        eta=eta,
        delta=delta,
    )


def gan_loss(d_real: float, d_fake: float) -> float:
    """ln(d_real) + ln(1 - d_fake), inputs clamped away from 0 and 1."""
    lo, hi = 1e-7, 1.0 - 1e-7
    d_real = min(max(d_real, lo), hi)
    d_fake = min(max(d_fake, lo), hi)
    return float(np.log(d_real) + np.log(1.0 - d_fake))


def adaptive_gan_weight(grad_rec_norm: float, grad_gan_norm: float, delta: float = 1e-6) -> float:
    """Ratio of reconstruction to adversarial gradient norms, delta-stabilized."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    return grad_rec_norm / (grad_gan_norm + delta)


def generate_feature_sequence(
    rng: np.random.Generator, frames: int, h: int, w: int, n_z: int, kappa: float
) -> np.ndarray:
    """AR(1) synthetic feature stream: frame_t = kappa*frame_{t-1} + sqrt(1-kappa^2)*noise.

    Stands in for an encoder's per-frame output; marginals are standard
    normal and the lag-1 element correlation equals kappa.
    """
    if not 0.0 <= kappa <= 1.0:
        raise ValueError("kappa must lie in [0, 1]")
    out = np.empty((frames, h, w, n_z))
    out[0] = rng.standard_normal((h, w, n_z))
    innovation = np.sqrt(1.0 - kappa**2)
    for t in range(1, frames):
        out[t] = kappa * out[t - 1] + innovation * rng.standard_normal((h, w, n_z))
    return out


_MAGIC = b"UVQC"
_FORMAT_VERSION = 1


def save_codebook(book: Codebook, path) -> None:
    """Write a versioned binary record; round-trips bit-exactly."""
    header = struct.pack(
        "<4sIIIdd", _MAGIC, _FORMAT_VERSION, book.size, book.dim, book.decay, book.epsilon
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(book.entries, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(book.cluster_size, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(book.embedding_sum, dtype="<f8").tobytes())


def load_codebook(path) -> Codebook:
    with open(path, "rb") as fh:
        magic, version, size, dim, decay, epsilon = struct.unpack(
            "<4sIIIdd", fh.read(struct.calcsize("<4sIIIdd"))
        )
        if magic != _MAGIC:
            raise ValueError("not a codebook file")
        if version != _FORMAT_VERSION:
            raise ValueError(f"unsupported codebook format version {version}")
        entries = np.frombuffer(fh.read(size * dim * 8), dtype="<f8").reshape(size, dim)
        counts = np.frombuffer(fh.read(size * 8), dtype="<f8")
        sums = np.frombuffer(fh.read(size * dim * 8), dtype="<f8").reshape(size, dim)
    return Codebook(
        entries=entries.copy(),
        cluster_size=counts.copy(),
        embedding_sum=sums.copy(),
        decay=decay,
        epsilon=epsilon,
    )
