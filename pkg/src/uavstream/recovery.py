"""Reconstruction of dropped indices from a sliding window of masked frames.

A recoverer predicts only the missing indices of the newest frame; received
positions always pass through unchanged. The deterministic temporal-hold
baseline fills each missing position from its most recent received value in
the window, with a spatial nearest-neighbor fallback; a learned model can be
slotted in behind the same interface.
"""

import numpy as np

from .bitrate import MaskedIndexFrame
from .kernels import temporal_hold


class FrameWindow:
    """Sliding window of masked frames sharing (h, w, S), oldest to newest."""

    def __init__(self, length: int):
        if length < 1:
            raise ValueError("window length must be >= 1")
        self.length = length
        self._frames: list[MaskedIndexFrame] = []

    def push(self, frame: MaskedIndexFrame) -> None:
        if self._frames:
            ref = self._frames[0]
            if frame.shape != ref.shape or frame.codebook_size != ref.codebook_size:
                raise ValueError("all frames in a window must share (h, w, S)")
        self._frames.append(frame)
        if len(self._frames) > self.length:
            self._frames.pop(0)

    def __len__(self) -> int:
        return len(self._frames)

    @property
    def frames(self) -> tuple[MaskedIndexFrame, ...]:
        return tuple(self._frames)

    @property
    def newest(self) -> MaskedIndexFrame:
        return self._frames[-1]

    def stacked(self):
        """(N, h, w) index and mask arrays for the kernel."""
        idx = np.ascontiguousarray(
            np.stack([f.indices for f in self._frames]).astype(np.int64)
        )
        mask = np.ascontiguousarray(np.stack([f.mask for f in self._frames]).astype(np.uint8))
        return idx, mask


def temporal_hold_recover(window: FrameWindow, prev_recovered=None) -> np.ndarray:
    """Deterministic hold-then-spatial fill of the newest frame's missing indices."""
    if len(window) == 0:
        raise ValueError("window is empty")
    idx, mask = window.stacked()
    prev = None
    if prev_recovered is not None:
        prev = np.ascontiguousarray(np.asarray(prev_recovered, dtype=np.int64))
    return temporal_hold(idx, mask, prev)


class Recoverer:
    """Recovery strategy interface; one instance per UAV stream."""

    def recover(self, window: FrameWindow) -> np.ndarray:
        raise NotImplementedError

    def reset(self) -> None:
        """Drop any per-stream state at an episode boundary."""


class TemporalHoldRecoverer(Recoverer):
    """Temporal-hold baseline keeping the previously recovered frame as state."""

    def __init__(self):
        self._last: np.ndarray | None = None

    def recover(self, window: FrameWindow) -> np.ndarray:
        out = temporal_hold_recover(window, self._last)
        self._last = out
        return out

    def reset(self) -> None:
        self._last = None


def validate_distribution(probs: np.ndarray, tol: float = 1e-6) -> None:
    """Check nonnegativity and per-position normalization of (h, w, S) probabilities."""
    probs = np.asarray(probs, dtype=float)
    if np.any(probs < 0):
        raise ValueError("probabilities must be nonnegative")
    sums = probs.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > tol):
        raise ValueError("per-position probabilities must sum to 1")


def masked_cross_entropy(probs: np.ndarray, truth: np.ndarray, mask: np.ndarray) -> float:
    """Negative log-likelihood of the true indices, summed over masked positions only."""
    probs = np.asarray(probs, dtype=float)
    truth = np.asarray(truth, dtype=np.int64)
    mask = np.asarray(mask)
    if probs.shape[:2] != truth.shape or truth.shape != mask.shape:
        raise ValueError("shape mismatch between probs, truth, and mask")
    masked = mask == 1
    if not masked.any():
        return 0.0
    picked = probs[masked, truth[masked]]
    picked = np.maximum(picked, 1e-12)
    return float(-np.log(picked).sum())


def recovery_accuracy(recovered: np.ndarray, truth: np.ndarray, mask: np.ndarray) -> float:
    """Fraction of masked positions recovered exactly; 1.0 when nothing was masked."""
    recovered = np.asarray(recovered)
    truth = np.asarray(truth)
    mask = np.asarray(mask)
    if recovered.shape != truth.shape or truth.shape != mask.shape:
        raise ValueError("shape mismatch")
    masked = mask == 1
    total = int(masked.sum())
    if total == 0:
        return 1.0
    return float((recovered[masked] == truth[masked]).sum() / total)
