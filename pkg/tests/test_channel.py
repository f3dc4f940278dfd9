import math

import numpy as np
import pytest

from uavstream.channel import (
    ChannelParams,
    ChannelRealization,
    dbm_per_hz_to_w_per_hz,
    downlink_rates,
    sample_channel,
)
from uavstream.geometry import DegenerateGeometryError


def flat_channel(power_gain):
    amp = math.sqrt(power_gain)
    return ChannelRealization(
        coefficient=amp + 0j, los_part=amp + 0j, nlos_part=0j, distance=1.0
    )


def test_noise_psd_conversion():
    assert dbm_per_hz_to_w_per_hz(-174.0) == pytest.approx(10 ** (-20.4), rel=1e-12)
    assert dbm_per_hz_to_w_per_hz(0.0) == pytest.approx(1e-3)


def test_reconstruction_identity_bit_exact():
    params = ChannelParams(rician_factor=7.3)
    rng = np.random.default_rng(5)
    rho = params.rician_factor
    for _ in range(200):
        c = sample_channel(rng, float(rng.uniform(20, 500)), params)
        rebuilt = math.sqrt(rho / (rho + 1)) * c.los_part + math.sqrt(1 / (rho + 1)) * c.nlos_part
        assert rebuilt == c.coefficient


def test_los_magnitude_closed_form():
    params = ChannelParams(gain=1.0, carrier_hz=2.4e9, light_speed=3e8, alpha_los=2.0)
    c = sample_channel(np.random.default_rng(0), 100.0, params)
    assert abs(c.los_part) == pytest.approx(9.89464684007205e-09, rel=1e-12)
    assert abs(c.los_part) == pytest.approx(9.8946e-09, rel=1e-4)
    assert c.los_part.imag == 0.0  # zero-phase convention


def test_geometric_phase_mode_keeps_magnitude():
    base = ChannelParams()
    phased = ChannelParams(geometric_phase=True)
    a = sample_channel(np.random.default_rng(1), 120.0, base)
    b = sample_channel(np.random.default_rng(1), 120.0, phased)
    assert abs(a.los_part) == pytest.approx(abs(b.los_part), rel=1e-12)
    assert b.los_part.imag != 0.0


def test_rician_limits():
    almost_los = ChannelParams(rician_factor=1e12)
    rng = np.random.default_rng(2)
    for _ in range(20):
        c = sample_channel(rng, 150.0, almost_los)
        assert abs(c.coefficient) == pytest.approx(abs(c.los_part), rel=1e-4)
    rayleigh = ChannelParams(rician_factor=0.0)
    for _ in range(20):
        c = sample_channel(rng, 150.0, rayleigh)
        assert c.coefficient == c.nlos_part


def test_nlos_statistics():
    # scattered coefficient has unit mean power
    params = ChannelParams(rician_factor=0.0, gain=1.0)
    rng = np.random.default_rng(3)
    d = 100.0
    base = params.light_speed / (4 * math.pi * params.carrier_hz * d)
    scale = base**params.alpha_nlos
    total = 0.0
    n = 100_000
    for _ in range(n):
        c = sample_channel(rng, d, params)
        total += abs(c.coefficient / scale) ** 2
    assert 0.98 <= total / n <= 1.02


def test_degenerate_distance():
    with pytest.raises(DegenerateGeometryError):
        sample_channel(np.random.default_rng(0), 0.0, ChannelParams())


def test_rate_single_uav_unit_example():
    params = ChannelParams(bandwidth_hz=1.0, noise_psd=1.0)
    rates = downlink_rates([1.0], [flat_channel(1.0)], params)
    assert rates[0] == pytest.approx(1.0, rel=1e-12)


def test_rate_two_uav_interference_example():
    params = ChannelParams(bandwidth_hz=1.0, noise_psd=1.0)
    channels = [flat_channel(3.0), flat_channel(1.0)]
    rates = downlink_rates([1.0, 1.0], channels, params)
    # R_1 = log2(1 + 3 / (1 + 1))
    assert rates[0] == pytest.approx(1.3219280948873624, rel=1e-12)
    assert rates[1] == pytest.approx(math.log2(1 + 1 / (1 + 3)), rel=1e-12)


def test_rate_zero_gain_is_zero():
    params = ChannelParams(bandwidth_hz=1.0, noise_psd=1.0)
    rates = downlink_rates([1.0, 2.0], [flat_channel(0.0), flat_channel(1.0)], params)
    assert rates[0] == 0.0


def test_rate_monotone_in_power_and_bandwidth():
    rng = np.random.default_rng(4)
    params = ChannelParams()
    channels = [sample_channel(rng, float(rng.uniform(100, 200)), params) for _ in range(4)]
    powers = np.full(4, 2.0)
    base = downlink_rates(powers, channels, params)[0]
    boosted = powers.copy()
    boosted[0] = 4.0
    assert downlink_rates(boosted, channels, params)[0] > base
    wide = ChannelParams(bandwidth_hz=params.bandwidth_hz * 2)
    assert downlink_rates(powers, channels, wide)[0] > base


def test_rates_nonnegative_and_finite():
    rng = np.random.default_rng(6)
    params = ChannelParams()
    for _ in range(50):
        m = int(rng.integers(1, 6))
        channels = [sample_channel(rng, float(rng.uniform(20, 400)), params) for _ in range(m)]
        rates = downlink_rates(rng.uniform(0.5, 5.0, m), channels, params)
        assert np.all(rates >= 0) and np.all(np.isfinite(rates))


def test_rate_input_validation():
    params = ChannelParams()
    with pytest.raises(ValueError):
        downlink_rates([], [], params)
    with pytest.raises(ValueError):
        downlink_rates([1.0, -1.0], [flat_channel(1.0), flat_channel(1.0)], params)
