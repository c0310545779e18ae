"""Carrier-phase ranging: unwrapping a per-device phase stream into distance.

Phase and distance are tied by ``d = -(lambda/2) * (phi/pi + K)``, so one
wrap of the observed phase (2*pi) corresponds to lambda/2 of range change.
A track stays valid as long as consecutive samples move less than lambda/2;
a dropped packet breaks the continuity and the track must be re-anchored
from an external distance before it is used again.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

from .errors import DroppedPacket, NonPhysicalDistance, NotAnchored, OutOfOrderSample

DEFAULT_WAVELENGTH_M = 0.325
TWO_PI = 2.0 * math.pi


def wrap_phase(x: float) -> float:
    """Map an angle into the half-open interval (-pi, pi]."""
    return x - TWO_PI * math.ceil((x - math.pi) / TWO_PI)


@dataclass(frozen=True)
class PhaseSample:
    t_ns: int
    device_id: int
    phase_rad: float
    rssi_dbm: float
    packet_ok: bool = True

    def __post_init__(self):
        if not -math.pi < self.phase_rad <= math.pi:
            raise ValueError(f"phase {self.phase_rad} outside (-pi, pi]")


@dataclass(frozen=True)
class RangingTrack:
    """Running range estimate for one device.

    ``phi_unwrapped_rad == last_sample.phase_rad - 2*pi*k_ambiguity`` and
    ``delta_d_m`` is measured from ``phi_initial_rad``, the phase at the
    last anchoring.
    """

    device_id: int
    d0_m: float
    lambda_m: float = DEFAULT_WAVELENGTH_M
    k_ambiguity: int = 0
    phi_initial_rad: float = 0.0
    phi_unwrapped_rad: float = 0.0
    delta_d_m: float = 0.0
    d_t_m: float = 0.0
    last_sample: Optional[PhaseSample] = None
    anchored: bool = False

    @classmethod
    def start(cls, sample: PhaseSample, d0_m: float, lambda_m: float = DEFAULT_WAVELENGTH_M) -> "RangingTrack":
        """Anchor a new track at ``d0_m`` on its first received sample."""
        track = cls(device_id=sample.device_id, d0_m=d0_m, lambda_m=lambda_m)
        return reanchor(track, d0_m, sample)


def distance_delta(phi_unwrapped_change_rad: float, lambda_m: float = DEFAULT_WAVELENGTH_M) -> float:
    if lambda_m <= 0:
        raise ValueError("wavelength must be positive")
    return -(lambda_m / 2.0) * (phi_unwrapped_change_rad / math.pi)


def update_distance(d0_m: float, delta_d_m: float) -> float:
    d = d0_m + delta_d_m
    if d <= 0:
        raise NonPhysicalDistance(f"d0={d0_m} + delta={delta_d_m} is not a physical distance")
    return d


def unwrap_step(track: RangingTrack, sample: PhaseSample) -> RangingTrack:
    if sample.device_id != track.device_id:
        raise ValueError(f"sample for device {sample.device_id} applied to track {track.device_id}")
    prev = track.last_sample
    if prev is not None and sample.t_ns <= prev.t_ns:
        raise OutOfOrderSample(f"t={sample.t_ns} ns does not follow t={prev.t_ns} ns")
    if not sample.packet_ok:
        raise DroppedPacket(
            f"device {sample.device_id} dropped at t={sample.t_ns} ns",
            track=mark_dropped(track, sample),
        )
    if not track.anchored or prev is None:
        raise NotAnchored(f"device {track.device_id} needs a reanchor before unwrapping")

    raw = sample.phase_rad - prev.phase_rad
    step = wrap_phase(raw)
    k = track.k_ambiguity - round((step - raw) / TWO_PI)
    phi_u = track.phi_unwrapped_rad + step
    delta = distance_delta(phi_u - track.phi_initial_rad, track.lambda_m)
    return replace(
        track,
        k_ambiguity=k,
        phi_unwrapped_rad=phi_u,
        delta_d_m=delta,
        d_t_m=update_distance(track.d0_m, delta),
        last_sample=sample,
    )


def mark_dropped(track: RangingTrack, sample: PhaseSample) -> RangingTrack:
    """Record a dropped sample: the track loses its anchor."""
    return replace(track, anchored=False, last_sample=sample)


def reanchor(track: RangingTrack, reference_distance_m: float, sample: PhaseSample) -> RangingTrack:
    if not sample.packet_ok:
        raise DroppedPacket("cannot reanchor on a dropped sample")
    return replace(
        track,
        d0_m=reference_distance_m,
        k_ambiguity=0,
        phi_initial_rad=sample.phase_rad,
        phi_unwrapped_rad=sample.phase_rad,
        delta_d_m=0.0,
        d_t_m=reference_distance_m,
        last_sample=sample,
        anchored=True,
    )


def apply_sample(track: RangingTrack, sample: PhaseSample) -> RangingTrack:
    """``unwrap_step`` that turns a drop into an unanchored track instead of raising."""
    try:
        return unwrap_step(track, sample)
    except DroppedPacket as exc:
        return exc.track
