import math

import numpy as np
import pytest

from uavstream.geometry import (
    DegenerateGeometryError,
    GeometryConfig,
    InvalidUavIdError,
    UavState,
    advance_position,
    corridor_for,
    distance_to_ground,
    random_state_in_corridor,
)

GEOM = GeometryConfig()  # r0=100, rs=10, d=50 -> band (110, 160)


def state(uav_id, pos):
    return UavState(uav_id=uav_id, position=pos, power=3.0, bitrate=1e5)


def test_corridor_uav1_pins_x_and_bands_y():
    region = corridor_for(1, GEOM)
    assert region.pinned_axis == 0 and region.pinned_value == 0.0
    assert region.free_axis == 1
    assert region.free_lo == pytest.approx(110.0, abs=1e-8)
    assert region.free_hi == pytest.approx(160.0, abs=1e-8)
    assert region.free_lo > 110.0 and region.free_hi < 160.0  # open interval shrunk


def test_corridor_uav3_negative_band():
    region = corridor_for(3, GEOM)
    assert region.pinned_axis == 0
    assert region.free_lo == pytest.approx(-160.0, abs=1e-8)
    assert region.free_hi == pytest.approx(-110.0, abs=1e-8)


def test_corridor_uav2_symmetric_on_x():
    region = corridor_for(2, GEOM)
    assert region.pinned_axis == 1 and region.pinned_value == 0.0
    assert region.free_axis == 0
    assert region.free_lo == pytest.approx(110.0, abs=1e-8)
    assert region.free_hi == pytest.approx(160.0, abs=1e-8)


def test_corridor_heights_and_uav4():
    region = corridor_for(4, GEOM)
    assert region.free_lo == pytest.approx(-160.0, abs=1e-8)
    assert region.free_hi == pytest.approx(-110.0, abs=1e-8)
    assert region.z_lo == pytest.approx(10.0, abs=1e-8)
    assert region.z_hi == pytest.approx(50.0, abs=1e-8)


def test_invalid_uav_id():
    for bad in (0, 5, -1):
        with pytest.raises(InvalidUavIdError):
            corridor_for(bad, GEOM)


def test_advance_interior_move():
    roomy = GeometryConfig(max_step=10.0)
    moved = advance_position(state(1, (0.0, 120.0, 20.0)), (0.0, 5.0, 0.0), roomy)
    assert moved.position == pytest.approx((0.0, 125.0, 20.0))
    assert moved.power == 3.0 and moved.bitrate == 1e5


def test_advance_projects_out_pinned_component():
    big_step = GeometryConfig(max_step=10.0)
    moved = advance_position(state(1, (0.0, 120.0, 20.0)), (5.0, 5.0, 0.0), big_step)
    assert moved.position[0] == 0.0
    assert moved.position[1] == pytest.approx(125.0)


def test_advance_rescales_oversized_step():
    # |(0,10,10)| = sqrt(200) > a_max=1 -> each live component becomes 10/sqrt(200)
    moved = advance_position(state(1, (0.0, 158.0, 48.0)), (0.0, 10.0, 10.0), GEOM)
    assert moved.position[1] == pytest.approx(158.70710678118655, abs=1e-9)
    assert moved.position[2] == pytest.approx(48.707106781186546, abs=1e-9)


def test_projection_idempotent_on_interior_states():
    rng = np.random.default_rng(3)
    for _ in range(50):
        uav = int(rng.integers(1, 5))
        st = random_state_in_corridor(rng, uav, GEOM, power=2.0, bitrate=1e5)
        unmoved = advance_position(st, (0.0, 0.0, 0.0), GEOM)
        assert unmoved.position == pytest.approx(st.position, abs=1e-12)


def test_projection_clamps_to_corridor():
    moved = advance_position(state(1, (0.0, 159.9, 49.9)), (0.0, 1.0, 1.0), GEOM)
    region = corridor_for(1, GEOM)
    assert region.contains(moved.position)


def test_distance_examples():
    geom = GeometryConfig(ground_position=(0.0, 0.0, 0.0))
    # 3-4-5 triangle needs an out-of-corridor position; distance does not care
    assert distance_to_ground(state(1, (30.0, 40.0, 0.0)), geom) == pytest.approx(50.0)
    assert distance_to_ground(state(1, (0.0, 0.0, 10.0)), geom) == pytest.approx(10.0)
    assert distance_to_ground(state(1, (0.0, 120.0, 20.0)), geom) == pytest.approx(
        121.6552506059644, rel=1e-12
    )


def test_distance_degenerate():
    geom = GeometryConfig(ground_position=(0.0, 120.0, 20.0))
    with pytest.raises(DegenerateGeometryError):
        distance_to_ground(state(1, (0.0, 120.0, 20.0)), geom)


def test_random_states_lie_in_corridor():
    rng = np.random.default_rng(11)
    for uav in (1, 2, 3, 4):
        region = corridor_for(uav, GEOM)
        for _ in range(20):
            st = random_state_in_corridor(rng, uav, GEOM, power=1.0, bitrate=1e5)
            assert region.contains(st.position)


def test_geometry_validation():
    with pytest.raises(ValueError):
        GeometryConfig(radius_r0=-1.0)
    with pytest.raises(ValueError):
        GeometryConfig(z_min=50.0, z_max=10.0)
    with pytest.raises(ValueError):
        UavState(uav_id=1, position=(0.0, 120.0, math.nan), power=1.0, bitrate=1e5)
