"""Air-to-ground Rician channel and downlink rates.

The channel coefficient combines a deterministic line-of-sight part and a
scattered complex-Gaussian part, weighted by the Rician factor:

    h = sqrt(rho / (rho + 1)) * los + sqrt(1 / (rho + 1)) * nlos

with los = g_los * G * (c / (4 pi fc d))**alpha_los, |g_los| = 1, and
nlos = g_nlos * G * (c / (4 pi fc d))**alpha_nlos, g_nlos ~ CN(0, 1).
Note the path-loss exponents act on the amplitude coefficient, so received
power scales as d**(-2 alpha); this is intentional and kept verbatim.

Per-UAV rate: R_m = B log2(1 + P_m |h_m|^2 / (B sigma^2 + sum_{j != m} P_j |h_j|^2)).
"""

import math
from dataclasses import dataclass

import numpy as np

from .geometry import DegenerateGeometryError


def dbm_per_hz_to_w_per_hz(dbm: float) -> float:
    """Convert a noise PSD from dBm/Hz to W/Hz."""
    return 10.0 ** (dbm / 10.0) * 1e-3


@dataclass(frozen=True)
class ChannelParams:
    """Rician channel and link parameters (SI units)."""

    rician_factor: float = 10.0
    gain: float = 1.0
    carrier_hz: float = 2.4e9
    light_speed: float = 3e8
    alpha_los: float = 2.0
    alpha_nlos: float = 3.0
    bandwidth_hz: float = 20e6
    noise_psd: float = dbm_per_hz_to_w_per_hz(-174.0)
    geometric_phase: bool = False

    def __post_init__(self):
        if self.rician_factor < 0:
            raise ValueError("rician_factor must be nonnegative")
        if self.gain <= 0 or self.carrier_hz <= 0 or self.bandwidth_hz <= 0:
            raise ValueError("gain, carrier_hz and bandwidth_hz must be positive")
        if self.noise_psd <= 0:
            raise ValueError("noise_psd must be positive")
        if self.alpha_los < 1 or self.alpha_nlos < 1:
            raise ValueError("path-loss exponents must be >= 1")


@dataclass(frozen=True)
class ChannelRealization:
    """One sampled channel: total coefficient, its LoS/NLoS parts, and the distance."""

    coefficient: complex
    los_part: complex
    nlos_part: complex
    distance: float

    @property
    def power_gain(self) -> float:
        """|h|^2 of the combined coefficient."""
        return abs(self.coefficient) ** 2


def sample_channel(
    rng: np.random.Generator, distance: float, params: ChannelParams
) -> ChannelRealization:
    """Draw one Rician realization at the given UAV-to-ground distance."""
    if distance <= 0:
        raise DegenerateGeometryError("distance must be positive")
    base = params.light_speed / (4.0 * math.pi * params.carrier_hz * distance)
    if params.geometric_phase:
        phase = -2.0 * math.pi * distance * params.carrier_hz / params.light_speed
        g_los = complex(math.cos(phase), math.sin(phase))
    else:
        g_los = 1.0 + 0.0j
    los = g_los * params.gain * base**params.alpha_los
    g_nlos = complex(rng.standard_normal(), rng.standard_normal()) / math.sqrt(2.0)
    nlos = g_nlos * params.gain * base**params.alpha_nlos
    rho = params.rician_factor
    coeff = math.sqrt(rho / (rho + 1.0)) * los + math.sqrt(1.0 / (rho + 1.0)) * nlos
    return ChannelRealization(
        coefficient=coeff, los_part=los, nlos_part=nlos, distance=distance
    )


def downlink_rates(powers, channels, params: ChannelParams) -> np.ndarray:
    """Per-UAV downlink rates (bit/s) with inter-UAV interference at the ground user."""
    p = np.asarray(powers, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise ValueError("powers must be a nonempty 1D array")
    if len(channels) != p.size:
        raise ValueError("powers and channels must have equal length")
    if np.any(p <= 0):
        raise ValueError("all powers must be positive")
    gains = np.array([c.power_gain for c in channels])
    received = p * gains
    noise = params.bandwidth_hz * params.noise_psd
    total = received.sum()
    rates = np.empty_like(received)
    for m in range(received.size):
        interference = total - received[m]
        rates[m] = params.bandwidth_hz * math.log2(1.0 + received[m] / (noise + interference))
    return rates
