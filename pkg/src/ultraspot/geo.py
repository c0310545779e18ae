"""Frames, distances, rotations and the pose/approach cost evaluators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation as _SciRotation

from .errors import InsideSafetyRadius, NonPositiveSpeed

EARTH_RADIUS_M = 6_371_000.0


@dataclass(frozen=True)
class GeoPosition:
    latitude_deg: float
    longitude_deg: float
    altitude_m: float = 0.0

    def __post_init__(self):
        if not -90.0 <= self.latitude_deg <= 90.0:
            raise ValueError(f"latitude out of range: {self.latitude_deg}")
        if not -180.0 < self.longitude_deg <= 180.0:
            raise ValueError(f"longitude out of range: {self.longitude_deg}")


@dataclass(frozen=True)
class LocalPosition:
    """East-North-Up coordinates in meters."""

    x_m: float = 0.0
    y_m: float = 0.0
    z_m: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x_m, self.y_m, self.z_m)):
            raise ValueError("LocalPosition components must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x_m, self.y_m, self.z_m])

    @classmethod
    def from_array(cls, v) -> "LocalPosition":
        return cls(float(v[0]), float(v[1]), float(v[2]))

    def __sub__(self, other: "LocalPosition") -> "LocalPosition":
        return LocalPosition(self.x_m - other.x_m, self.y_m - other.y_m, self.z_m - other.z_m)

    def norm(self) -> float:
        return math.sqrt(self.x_m ** 2 + self.y_m ** 2 + self.z_m ** 2)


@dataclass(frozen=True, eq=False)
class Rotation:
    """Element of SO(3), stored as a 3x3 matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise ValueError("rotation matrix must be 3x3")
        if not np.allclose(m @ m.T, np.eye(3), atol=1e-9) or abs(np.linalg.det(m) - 1.0) > 1e-9:
            raise ValueError("matrix is not a proper rotation")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "Rotation":
        return cls(np.eye(3))

    @classmethod
    def from_axis_angle(cls, axis, angle_rad: float) -> "Rotation":
        axis = np.asarray(axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        return cls(_SciRotation.from_rotvec(axis * angle_rad).as_matrix())

    @classmethod
    def from_yaw(cls, yaw_rad: float) -> "Rotation":
        return cls.from_axis_angle((0.0, 0.0, 1.0), yaw_rad)

    @classmethod
    def random(cls, rng: np.random.Generator) -> "Rotation":
        return cls(_SciRotation.random(random_state=rng).as_matrix())

    def __matmul__(self, other: "Rotation") -> "Rotation":
        return Rotation(self.matrix @ other.matrix)

    def inverse(self) -> "Rotation":
        return Rotation(self.matrix.T)

    def apply(self, v) -> np.ndarray:
        return self.matrix @ np.asarray(v, dtype=float)


@dataclass(frozen=True)
class RelativePose:
    translation: LocalPosition = field(default_factory=LocalPosition)
    rotation: Rotation = field(default_factory=Rotation.identity)


@dataclass(frozen=True)
class CostWeights:
    pose_weight: float = 1.0
    final_pose_weight: float = 1.0
    d_safe_m: float = 4.0

    def __post_init__(self):
        if self.pose_weight < 0 or self.final_pose_weight < 0:
            raise ValueError("cost weights must be non-negative")
        if self.d_safe_m < 4.0:
            raise ValueError("d_safe_m must be at least 4 m")


def haversine_distance(a: GeoPosition, b: GeoPosition) -> float:
    """Great-circle surface distance combined with the altitude difference.

    The surface arc is on a sphere of radius 6,371 km; the altitude delta is
    composed with it as the other leg of a right triangle.
    """
    lat1, lat2 = math.radians(a.latitude_deg), math.radians(b.latitude_deg)
    dlat = lat2 - lat1
    dlon = math.radians(b.longitude_deg - a.longitude_deg)
    h = math.sin(dlat / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2) ** 2
    surface = 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))
    return math.hypot(surface, b.altitude_m - a.altitude_m)


def angle_error(r1: Rotation, r2: Rotation) -> float:
    """Geodesic angle between two rotations, in [0, pi]."""
    c = (np.trace(r1.matrix.T @ r2.matrix) - 1.0) / 2.0
    return math.acos(min(1.0, max(-1.0, float(c))))


def pose_deviation_cost(actual: RelativePose, desired: RelativePose, w: CostWeights) -> float:
    dp = actual.translation - desired.translation
    return dp.norm() ** 2 + w.pose_weight * angle_error(actual.rotation, desired.rotation)


def time_to_approach(d_m: float, v_mps: float, w: CostWeights) -> float:
    if v_mps <= 0:
        raise NonPositiveSpeed(f"approach speed must be positive, got {v_mps}")
    if d_m < w.d_safe_m:
        raise InsideSafetyRadius(f"distance {d_m} m is inside d_safe={w.d_safe_m} m")
    return (d_m - w.d_safe_m) / v_mps


def final_pose_cost(stop: RelativePose, target: RelativePose, d_stop_m: float, w: CostWeights) -> float:
    return abs(d_stop_m - w.d_safe_m) ** 2 + w.final_pose_weight * angle_error(stop.rotation, target.rotation)
