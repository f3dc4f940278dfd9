"""Corridor geometry and UAV mobility.

Four UAVs patrol axis-aligned corridors around a circular target area of
radius r0: each corridor pins one horizontal coordinate to the area center
and confines the other to an offset band (a, b) with a = r0 + rs and
b = r0 + rs + d, at heights between z_min and z_max. Moves are bounded by
a maximum per-slot step and are projected back onto the corridor.
"""

import math
from dataclasses import dataclass

import numpy as np

# open corridor intervals are realized as closed intervals shrunk by this margin
EDGE_MARGIN = 1e-9

UAV_IDS = (1, 2, 3, 4)


class InvalidUavIdError(ValueError):
    """UAV id outside the 4-corridor deployment."""


class DegenerateGeometryError(ValueError):
    """UAV and ground user coincide; path loss is undefined."""


@dataclass(frozen=True)
class GeometryConfig:
    """Corridor layout, height band, ground-user position, and step bound (meters)."""

    center: tuple[float, float] = (0.0, 0.0)
    radius_r0: float = 100.0
    safety_rs: float = 10.0
    corridor_depth_d: float = 50.0
    z_min: float = 10.0
    z_max: float = 50.0
    ground_position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    max_step: float = 1.0

    def __post_init__(self):
        if self.radius_r0 <= 0:
            raise ValueError("radius_r0 must be positive")
        if self.safety_rs < 0:
            raise ValueError("safety_rs must be nonnegative")
        if self.corridor_depth_d <= 0:
            raise ValueError("corridor_depth_d must be positive")
        if not 0 < self.z_min < self.z_max:
            raise ValueError("need 0 < z_min < z_max")
        if self.max_step <= 0:
            raise ValueError("max_step must be positive")

    @property
    def band_inner(self) -> float:
        """Inner corridor offset a = r0 + rs."""
        return self.radius_r0 + self.safety_rs

    @property
    def band_outer(self) -> float:
        """Outer corridor offset b = r0 + rs + d."""
        return self.radius_r0 + self.safety_rs + self.corridor_depth_d


@dataclass(frozen=True)
class UavState:
    """One UAV: id, 3D position (m), transmit power (W), selected bitrate (bit/s)."""

    uav_id: int
    position: tuple[float, float, float]
    power: float
    bitrate: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.position):
            raise ValueError("position must be finite")
        if not (math.isfinite(self.power) and self.power > 0):
            raise ValueError("power must be positive and finite")
        if not (math.isfinite(self.bitrate) and self.bitrate > 0):
            raise ValueError("bitrate must be positive and finite")


@dataclass(frozen=True)
class CorridorRegion:
    """Feasible box for one UAV: pinned horizontal axis plus two closed intervals.

    Axis 0 is x, axis 1 is y. Intervals are the open corridor bounds shrunk
    by EDGE_MARGIN so that projection targets a closed set.
    """

    pinned_axis: int
    pinned_value: float
    free_axis: int
    free_lo: float
    free_hi: float
    z_lo: float
    z_hi: float

    def contains(self, position) -> bool:
        x, y, z = position
        pinned = (x, y)[self.pinned_axis]
        free = (x, y)[self.free_axis]
        return (
            math.isclose(pinned, self.pinned_value, rel_tol=0.0, abs_tol=1e-12)
            and self.free_lo <= free <= self.free_hi
            and self.z_lo <= z <= self.z_hi
        )

    def project(self, position) -> tuple[float, float, float]:
        """Euclidean projection onto the region (per-axis clamp of a box)."""
        x, y, z = position
        coords = [x, y]
        coords[self.pinned_axis] = self.pinned_value
        coords[self.free_axis] = min(max(coords[self.free_axis], self.free_lo), self.free_hi)
        return (coords[0], coords[1], min(max(z, self.z_lo), self.z_hi))


def corridor_for(uav_id: int, geom: GeometryConfig) -> CorridorRegion:
    """Corridor region for UAV 1..4 (east, north, west, south of the area)."""
    if uav_id not in UAV_IDS:
        raise InvalidUavIdError(f"uav_id must be one of {UAV_IDS}, got {uav_id}")
    x0, y0 = geom.center
    a, b = geom.band_inner, geom.band_outer
    if uav_id == 1:
        pinned_axis, pinned_value, free_axis, lo, hi = 0, x0, 1, y0 + a, y0 + b
    elif uav_id == 2:
        pinned_axis, pinned_value, free_axis, lo, hi = 1, y0, 0, x0 + a, x0 + b
    elif uav_id == 3:
        pinned_axis, pinned_value, free_axis, lo, hi = 0, x0, 1, y0 - b, y0 - a
    else:
        pinned_axis, pinned_value, free_axis, lo, hi = 1, y0, 0, x0 - b, x0 - a
    return CorridorRegion(
        pinned_axis=pinned_axis,
        pinned_value=pinned_value,
        free_axis=free_axis,
        free_lo=lo + EDGE_MARGIN,
        free_hi=hi - EDGE_MARGIN,
        z_lo=geom.z_min + EDGE_MARGIN,
        z_hi=geom.z_max - EDGE_MARGIN,
    )


def clip_step(step_vec, max_step: float) -> np.ndarray:
    """Rescale an oversized move to norm max_step; shorter moves pass through."""
    vec = np.asarray(step_vec, dtype=float)
    norm = float(np.linalg.norm(vec))
    if norm > max_step:
        vec = vec * (max_step / norm)
    return vec


def advance_position(state: UavState, step_vec, geom: GeometryConfig) -> UavState:
    """Move a UAV by step_vec (rescaled to the step bound) and project onto its corridor."""
    vec = clip_step(step_vec, geom.max_step)
    region = corridor_for(state.uav_id, geom)
    raw = (
        state.position[0] + float(vec[0]),
        state.position[1] + float(vec[1]),
        state.position[2] + float(vec[2]),
    )
    return UavState(
        uav_id=state.uav_id,
        position=region.project(raw),
        power=state.power,
        bitrate=state.bitrate,
    )


def distance_to_ground(state: UavState, geom: GeometryConfig) -> float:
    """3D Euclidean distance from the UAV to the ground user."""
    gx, gy, gz = geom.ground_position
    x, y, z = state.position
    dist = math.sqrt((gx - x) ** 2 + (gy - y) ** 2 + (gz - z) ** 2)
    if dist == 0.0:
        raise DegenerateGeometryError("UAV coincides with the ground user")
    return dist


def random_state_in_corridor(
    rng: np.random.Generator, uav_id: int, geom: GeometryConfig, power: float, bitrate: float
) -> UavState:
    """Uniformly sampled in-corridor state, used for episode initialization."""
    region = corridor_for(uav_id, geom)
    coords = [0.0, 0.0]
    coords[region.pinned_axis] = region.pinned_value
    coords[region.free_axis] = rng.uniform(region.free_lo, region.free_hi)
    z = rng.uniform(region.z_lo, region.z_hi)
    return UavState(
        uav_id=uav_id, position=(coords[0], coords[1], z), power=power, bitrate=bitrate
    )
