"""Per-slot and episode quality-of-experience scoring.

A slot's QoE averages log-bitrate quality minus a bitrate-switch smoothness
penalty over UAVs, then subtracts a rebuffer penalty proportional to how far
the slot's transmission delay exceeds the delay constraint.
"""

import math
from dataclasses import dataclass


class InvalidBitrateError(ValueError):
    """Bitrate below the minimum selectable value."""


@dataclass(frozen=True)
class QoEWeights:
    """Weights, delay constraint, bitrate bounds, and slot length."""

    alpha: float = 1.0
    beta: float = 1.0
    gamma_rebuf: float = 4.3
    t_c: float = 1.0
    v_min: float = 50e3
    v_max: float = 2e6
    slot_seconds: float = 1.0
    delay_cap_factor: float = 10.0

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma_rebuf) < 0:
            raise ValueError("weights must be nonnegative")
        if not 0 < self.v_min <= self.v_max:
            raise ValueError("need 0 < v_min <= v_max")
        if self.t_c <= 0 or self.slot_seconds <= 0:
            raise ValueError("t_c and slot_seconds must be positive")
        if self.delay_cap_factor <= 1:
            raise ValueError("delay_cap_factor must exceed 1")


@dataclass(frozen=True)
class QoESample:
    """One scored slot: bitrates, delays, and the resulting QoE value."""

    slot: int
    bitrates: tuple
    previous_bitrates: tuple
    delays: tuple
    slot_delay: float
    qoe: float


def transmission_delay(chunk_bits: float, rate: float) -> float:
    """Seconds to deliver a chunk; a dead link with pending bits yields +inf."""
    if chunk_bits < 0:
        raise ValueError("chunk_bits must be nonnegative")
    if chunk_bits == 0:
        return 0.0
    if rate <= 0:
        return math.inf
    return chunk_bits / rate


def slot_delay(delays) -> float:
    """Slot-level delay: the slowest UAV (parallel multi-core reception)."""
    delays = list(delays)
    if not delays:
        raise ValueError("delays must be nonempty")
    return max(delays)


def quality(bitrate: float, weights: QoEWeights) -> float:
    """Log quality ln(V / v_min): zero at the minimum bitrate, increasing in V."""
    if bitrate < weights.v_min:
        raise InvalidBitrateError(f"bitrate {bitrate} below v_min {weights.v_min}")
    return math.log(bitrate / weights.v_min)


def qoe_slot(bitrates, previous_bitrates, delay: float, weights: QoEWeights) -> float:
    """Mean per-UAV quality minus smoothness penalty, minus the rebuffer penalty.

    previous_bitrates=None marks the first slot (zero smoothness penalty).
    An infinite delay (dead link) enters as delay_cap_factor * t_c so the
    value stays finite; finite delays are penalized as-is.
    """
    bitrates = list(bitrates)
    previous = bitrates if previous_bitrates is None else list(previous_bitrates)
    if len(previous) != len(bitrates):
        raise ValueError("bitrate vectors must have equal length")
    per_uav = 0.0
    for current, prev in zip(bitrates, previous):
        q_now = quality(current, weights)
        q_prev = quality(prev, weights)
        per_uav += weights.alpha * q_now - weights.beta * abs(q_now - q_prev)
    if math.isinf(delay):
        delay = weights.delay_cap_factor * weights.t_c
    rebuffer = max(delay - weights.t_c, 0.0)
    return per_uav / len(bitrates) - weights.gamma_rebuf * rebuffer


def episode_qoe(samples) -> float:
    """Episode objective: sum of per-slot QoE values."""
    return float(sum(s.qoe for s in samples))
