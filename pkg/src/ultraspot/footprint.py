"""RSSI footprints: proximity, ordering match against a calibrated pattern, exit."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import AmbiguousOrdering, InsufficientSamples

N_DEVICES = 4

# 60 cm rectangle under the arms; ids 1..4 at azimuths 45, 135, 225, 315 deg
DEFAULT_MOUNTS = np.array([
    [0.3, 0.3, 0.0],
    [-0.3, 0.3, 0.0],
    [-0.3, -0.3, 0.0],
    [0.3, -0.3, 0.0],
])


@dataclass(frozen=True)
class RssiFootprint:
    t_ns: int
    values_dbm: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values_dbm)
        if len(vals) != N_DEVICES:
            raise ValueError(f"footprint needs {N_DEVICES} values, got {len(vals)}")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("footprint values must be finite")
        object.__setattr__(self, "values_dbm", vals)

    @property
    def mean(self) -> float:
        return sum(self.values_dbm) / len(self.values_dbm)


@dataclass(frozen=True)
class FootprintThresholds:
    proximity_dbm: float = -55.0
    exit_dbm: float = -85.0
    min_separation_db: float = 2.0

    def __post_init__(self):
        if not self.exit_dbm < self.proximity_dbm:
            raise ValueError("exit threshold must be below the proximity threshold")
        if self.min_separation_db < 0:
            raise ValueError("min_separation_db must be >= 0")


@dataclass(frozen=True)
class ReferencePattern:
    ordering: tuple
    mean_levels_dbm: tuple
    calibration_distance_m: float

    def __post_init__(self):
        object.__setattr__(self, "ordering", tuple(int(i) for i in self.ordering))
        object.__setattr__(self, "mean_levels_dbm", tuple(float(v) for v in self.mean_levels_dbm))
        if sorted(self.ordering) != list(range(1, len(self.ordering) + 1)):
            raise ValueError(f"ordering {self.ordering} is not a permutation of device ids")
        ranked = [self.mean_levels_dbm[i - 1] for i in self.ordering]
        if any(a < b for a, b in zip(ranked, ranked[1:])):
            raise ValueError("mean levels disagree with the ordering")

    def to_dict(self) -> dict:
        return {
            "ordering": list(self.ordering),
            "mean_levels_dbm": list(self.mean_levels_dbm),
            "calibration_distance_m": self.calibration_distance_m,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReferencePattern":
        return cls(tuple(d["ordering"]), tuple(d["mean_levels_dbm"]), float(d["calibration_distance_m"]))


class PoseAction(enum.Enum):
    MAINTAIN = "MaintainPose"
    ADJUST = "AdjustPose"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class PoseStatus:
    action: PoseAction
    correction: Optional[tuple] = None

    def __post_init__(self):
        if self.action is PoseAction.ADJUST:
            if self.correction is None or abs(math.hypot(*self.correction) - 1.0) > 1e-9:
                raise ValueError("AdjustPose needs a unit-norm correction hint")


MAINTAIN_POSE = PoseStatus(PoseAction.MAINTAIN)
INDETERMINATE = PoseStatus(PoseAction.INDETERMINATE)


def strongest_first(values: Sequence[float]) -> tuple:
    """Device ids (1-based) sorted by decreasing level; ties go to the lower id."""
    return tuple(sorted(range(1, len(values) + 1), key=lambda i: (-values[i - 1], i)))


def proximity_check(f: RssiFootprint, th: FootprintThresholds) -> bool:
    return f.mean > th.proximity_dbm


def exit_check(f: RssiFootprint, th: FootprintThresholds) -> bool:
    return min(f.values_dbm) < th.exit_dbm


def match_reference(f: RssiFootprint, ref: ReferencePattern, th: FootprintThresholds,
                    mounts=DEFAULT_MOUNTS) -> PoseStatus:
    """Compare the observed strength ranking to the reference ranking.

    A mismatch only counts when every adjacent pair of the observed ranking
    is at least ``min_separation_db`` apart. The correction hint is the
    normalized sum of mount offsets weighted by how many places each device
    moved up the ranking, so it points toward the stronger-than-expected side.
    """
    observed = strongest_first(f.values_dbm)
    if observed == ref.ordering:
        return MAINTAIN_POSE
    ranked = [f.values_dbm[i - 1] for i in observed]
    if any(a - b < th.min_separation_db for a, b in zip(ranked, ranked[1:])):
        return INDETERMINATE
    expected_pos = {dev: k for k, dev in enumerate(ref.ordering)}
    hint = np.zeros(3)
    for k, dev in enumerate(observed):
        hint += (expected_pos[dev] - k) * np.asarray(mounts[dev - 1], dtype=float)
    norm = np.linalg.norm(hint)
    if norm < 1e-12:
        # rank changes cancel out on the airframe; there is no direction to fly
        return INDETERMINATE
    return PoseStatus(PoseAction.ADJUST, tuple((hint / norm).tolist()))


def calibrate_reference(samples: Sequence[RssiFootprint], distance_m: float,
                        th: FootprintThresholds = FootprintThresholds(),
                        min_samples: int = 20) -> ReferencePattern:
    if len(samples) < min_samples:
        raise InsufficientSamples(f"need at least {min_samples} footprints, got {len(samples)}")
    means = np.mean([s.values_dbm for s in samples], axis=0)
    ordering = strongest_first(means.tolist())
    ranked = [means[i - 1] for i in ordering]
    gaps = [a - b for a, b in zip(ranked, ranked[1:])]
    if min(gaps) < th.min_separation_db:
        raise AmbiguousOrdering(f"device means {means.round(2).tolist()} are closer than "
                                f"{th.min_separation_db} dB")
    return ReferencePattern(ordering, tuple(means.tolist()), distance_m)
