import math

import numpy as np
import pytest

from uavstream.qoe import (
    InvalidBitrateError,
    QoESample,
    QoEWeights,
    episode_qoe,
    qoe_slot,
    quality,
    slot_delay,
    transmission_delay,
)

W = QoEWeights()  # alpha=beta=1, gamma=4.3, t_c=1, v_min=50k


def test_transmission_delay_examples():
    assert transmission_delay(1e6, 2e6) == 0.5
    assert transmission_delay(0.0, 1e6) == 0.0
    assert transmission_delay(9000.0, 4500.0) == 2.0
    assert math.isinf(transmission_delay(10.0, 0.0))
    with pytest.raises(ValueError):
        transmission_delay(-1.0, 1.0)


def test_slot_delay_is_max():
    assert slot_delay([0.2, 0.9, 0.4, 0.1]) == 0.9
    assert slot_delay([0.3]) == 0.3
    assert slot_delay([0.5, 0.5, 0.5]) == 0.5
    with pytest.raises(ValueError):
        slot_delay([])


def test_quality_log_scale():
    assert quality(W.v_min, W) == 0.0
    assert quality(math.e * W.v_min, W) == pytest.approx(1.0, rel=1e-12)
    assert quality(4 * W.v_min, W) == pytest.approx(1.3862943611198906, rel=1e-12)
    with pytest.raises(InvalidBitrateError):
        quality(W.v_min * 0.5, W)


def test_qoe_steady_minimum_bitrate_is_zero():
    rates = [W.v_min] * 4
    assert qoe_slot(rates, rates, 0.5, W) == 0.0


def test_qoe_slot_derived_example():
    weights = QoEWeights(alpha=1.0, beta=1.0, gamma_rebuf=4.3, t_c=1.0, v_min=5e4)
    value = qoe_slot([4 * 5e4], [2 * 5e4], 1.2, weights)
    assert value == pytest.approx(-0.1668528194400547, rel=1e-9)


def test_rebuffer_zero_below_constraint():
    v = [2 * W.v_min] * 2
    assert qoe_slot(v, v, W.t_c, W) == qoe_slot(v, v, 0.0, W)


def test_first_slot_has_no_smoothness_penalty():
    v = [4 * W.v_min] * 4
    assert qoe_slot(v, None, 0.0, W) == pytest.approx(math.log(4.0), rel=1e-12)


def test_infinite_delay_enters_at_cap():
    v = [W.v_min]
    capped = qoe_slot(v, v, math.inf, W)
    expected = -W.gamma_rebuf * (W.delay_cap_factor * W.t_c - W.t_c)
    assert capped == pytest.approx(expected, rel=1e-12)
    # a finite delay beyond the cap is penalized as-is
    worse = qoe_slot(v, v, 100.0, W)
    assert worse < capped


def test_qoe_non_increasing_in_delay():
    v = [3 * W.v_min] * 4
    delays = np.linspace(0, 5, 30)
    values = [qoe_slot(v, v, d, W) for d in delays]
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_qoe_monotone_in_bitrate_without_smoothness():
    weights = QoEWeights(beta=0.0)
    previous = [2 * weights.v_min] * 3
    low = qoe_slot([2 * weights.v_min] * 3, previous, 0.2, weights)
    high = qoe_slot([4 * weights.v_min] * 3, previous, 0.2, weights)
    assert high > low


def test_qoe_permutation_invariant():
    rng = np.random.default_rng(0)
    current = list(rng.uniform(W.v_min, W.v_max, 4))
    previous = list(rng.uniform(W.v_min, W.v_max, 4))
    base = qoe_slot(current, previous, 0.7, W)
    perm = [3, 0, 2, 1]
    assert qoe_slot(
        [current[i] for i in perm], [previous[i] for i in perm], 0.7, W
    ) == pytest.approx(base, rel=1e-12)


def sample(value):
    return QoESample(
        slot=0,
        bitrates=(1e5,),
        previous_bitrates=(1e5,),
        delays=(0.1,),
        slot_delay=0.1,
        qoe=value,
    )


def test_episode_qoe_sums():
    assert episode_qoe([]) == 0.0
    assert episode_qoe([sample(1.0), sample(-0.5)]) == 0.5
    repeated = [sample(-0.1668528194400547)] * 3
    assert episode_qoe(repeated) == pytest.approx(3 * -0.1668528194400547, rel=1e-12)


def test_weights_validation():
    with pytest.raises(ValueError):
        QoEWeights(alpha=-1.0)
    with pytest.raises(ValueError):
        QoEWeights(v_min=0.0)
    with pytest.raises(ValueError):
        QoEWeights(v_min=2e6, v_max=1e6)
