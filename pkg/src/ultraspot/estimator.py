"""Ultra-spot entry/exit prediction from inter-UAV distance.

Geometry: UAV-B flies a straight line whose closest approach to UAV-A is
``a = sqrt(h^2 + r^2)``. At range ``d`` the along-track distance left to
that point is ``sqrt(d^2 - a^2)``; the spot is the +-w stretch around it.

Scenario 1 (A hovering) measures progress from the start range ``d0``::

    traveled   p_t  = sqrt(d0^2 - a^2) - sqrt(d_t^2 - a^2)
    remaining  p_sc = sqrt(d0^2 - a^2) - p_t
    speed      v_s  = (p_t - p_s) / (t - s)

Scenario 2 (A and B flying head-on) splits the gap evenly::

    p_sc = sqrt(d_t^2 - a^2) / 2
    v_s  = (p_sc(s) - p_sc(t)) / (t - s)

Both give ``t_ent, t_exit = (p_sc -+ w) / v_s``. Range alone cannot tell
which side of the closest approach UAV-B is on; ``past_center`` carries
that and flips the sign of ``p_sc``.
"""

from __future__ import annotations

import enum
import math
import warnings
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

from .errors import (DegenerateWindow, InsideSafetyRadius, LeadExceedsEntry,
                     MissingGroundTruth, NonPositiveSpeed)
from .footprint import (FootprintThresholds, PoseStatus, ReferencePattern, RssiFootprint,
                        exit_check, match_reference, proximity_check)
from .geo import LocalPosition

NS = 1_000_000_000


@dataclass(frozen=True)
class SpotGeometry:
    h_m: float
    r_m: float
    w_m: float
    spot_center: LocalPosition = field(default_factory=LocalPosition)
    a_m: float = field(init=False)

    def __post_init__(self):
        if self.w_m <= 0:
            raise ValueError("spot half width must be positive")
        object.__setattr__(self, "a_m", math.hypot(self.h_m, self.r_m))


@dataclass(frozen=True)
class EstimatorState:
    d0_m: float
    d_t_m: float
    t_ns: int
    s_ns: Optional[int] = None
    d_s_m: Optional[float] = None
    p_s_m: float = 0.0
    p_t_m: float = 0.0
    p_sc_m: float = math.nan
    v_s_mps: float = math.nan
    past_center: bool = False
    r0_pos: Optional[LocalPosition] = None
    rs_pos: Optional[LocalPosition] = None
    rt_pos: Optional[LocalPosition] = None


@dataclass(frozen=True)
class SpotTiming:
    t_ent_s: float
    t_exit_s: float
    t_ent_ns: int
    t_exit_ns: int


@dataclass(frozen=True)
class TimingErrors:
    """Absolute entry/exit timing errors in seconds; None where a method gave no estimate."""

    eps_entWi: Optional[float] = None
    eps_exitWi: Optional[float] = None
    eps_entGNSS: Optional[float] = None
    eps_exitGNSS: Optional[float] = None
    eps_entRTK: Optional[float] = None
    eps_exitRTK: Optional[float] = None

    FIELDS = ("eps_entWi", "eps_exitWi", "eps_entGNSS", "eps_exitGNSS", "eps_entRTK", "eps_exitRTK")

    def __post_init__(self):
        for name in self.FIELDS:
            v = getattr(self, name)
            if v is not None and not v >= 0:
                raise ValueError(f"{name} must be >= 0")

    def as_row(self) -> list:
        return [getattr(self, name) for name in self.FIELDS]


@dataclass(frozen=True)
class GroundTruth:
    t_ent_ns: int
    t_exit_ns: int


def along_track_remaining(d_m: float, a_m: float, clamp_m: float = 0.05) -> float:
    """``sqrt(d^2 - a^2)``, clamped to 0 when d sits less than ``clamp_m`` inside a."""
    if d_m >= a_m:
        return math.sqrt(d_m * d_m - a_m * a_m)
    if a_m - d_m <= clamp_m:
        return 0.0
    raise InsideSafetyRadius(f"range {d_m:.3f} m is inside the safety distance a={a_m:.3f} m")


def _check_window(state: EstimatorState):
    if state.s_ns is None or state.t_ns <= state.s_ns:
        raise DegenerateWindow(f"speed window needs s < t (s={state.s_ns}, t={state.t_ns})")


def _keep_valid_speed(v_new: float, v_old: float) -> float:
    return v_new if math.isfinite(v_new) and v_new > 0 else v_old


def scenario1_estimate(geom: SpotGeometry, state: EstimatorState, clamp_m: float = 0.05) -> EstimatorState:
    """Hovering UAV-A. ``state.p_s_m`` is the distance traveled at time s."""
    a = geom.a_m
    if state.d0_m <= a:
        raise InsideSafetyRadius(f"start range {state.d0_m} m does not exceed a={a:.3f} m")
    _check_window(state)
    full = math.sqrt(state.d0_m ** 2 - a * a)
    rem = along_track_remaining(state.d_t_m, a, clamp_m)
    p_sc = -rem if state.past_center else rem
    p_t = full - p_sc
    v = (p_t - state.p_s_m) / ((state.t_ns - state.s_ns) / NS)
    return replace(state, p_t_m=p_t, p_sc_m=p_sc, v_s_mps=_keep_valid_speed(v, state.v_s_mps))


def scenario2_estimate(geom: SpotGeometry, state: EstimatorState, clamp_m: float = 0.05) -> EstimatorState:
    """Both UAVs flying head-on. ``state.p_s_m`` is p_sc at time s."""
    _check_window(state)
    rem = along_track_remaining(state.d_t_m, geom.a_m, clamp_m) / 2.0
    p_sc = -rem if state.past_center else rem
    v = (state.p_s_m - p_sc) / ((state.t_ns - state.s_ns) / NS)
    return replace(state, p_t_m=state.p_s_m - p_sc, p_sc_m=p_sc,
                   v_s_mps=_keep_valid_speed(v, state.v_s_mps))


def entry_exit_times(p_sc_m: float, w_m: float, v_s_mps: float, now_ns: int = 0) -> SpotTiming:
    if not v_s_mps > 0:
        raise NonPositiveSpeed(f"speed estimate must be positive, got {v_s_mps}")
    t_ent = (p_sc_m - w_m) / v_s_mps
    t_exit = (p_sc_m + w_m) / v_s_mps
    return SpotTiming(t_ent, t_exit, now_ns + round(t_ent * NS), now_ns + round(t_exit * NS))


def timing_errors(estimates: dict, ground_truth: Optional[GroundTruth]) -> TimingErrors:
    """``estimates`` maps method name ("Wi", "GNSS", "RTK") to its SpotTiming."""
    if ground_truth is None:
        raise MissingGroundTruth("entry/exit ground truth is required")
    out = {}
    for method, timing in estimates.items():
        if timing is None:
            continue
        if method not in ("Wi", "GNSS", "RTK"):
            raise ValueError(f"unknown method {method!r}")
        out[f"eps_ent{method}"] = abs(timing.t_ent_ns - ground_truth.t_ent_ns) / NS
        out[f"eps_exit{method}"] = abs(timing.t_exit_ns - ground_truth.t_exit_ns) / NS
    return TimingErrors(**out)


def stsu_schedule(timing: SpotTiming, now_ns: int, warmup_lead_ns: int) -> int:
    """Instant on the common time axis at which both ends switch on their transceivers."""
    ent_ns = round(timing.t_ent_s * NS)
    if warmup_lead_ns > ent_ns:
        warnings.warn(f"warm-up lead {warmup_lead_ns} ns exceeds time to entry {ent_ns} ns",
                      LeadExceedsEntry, stacklevel=2)
    return max(now_ns, now_ns + ent_ns - warmup_lead_ns)


class DetectionPhase(enum.IntEnum):
    FAR_FIELD = 0
    APPROACHING = 1
    SCHEDULED = 2
    IN_SPOT = 3
    EXITED = 4

    @property
    def label(self) -> str:
        return {0: "FarField", 1: "Approaching", 2: "Scheduled", 3: "InSpot", 4: "Exited"}[self.value]


@dataclass(frozen=True)
class DetectionEvent:
    t_ns: int
    kind: str  # PhaseTransition | SpotTiming | Activation | PoseAdvisory
    payload: dict

    KINDS = ("PhaseTransition", "SpotTiming", "Activation", "PoseAdvisory")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")


@dataclass(frozen=True)
class PipelineConfig:
    scenario: int = 1
    d0_m: float = 50.5
    window: int = 20
    approach_distance_m: float = 25.0
    trigger_s: float = 4.0
    warmup_lead_ns: int = 100_000_000
    clamp_m: float = 0.05
    pass_hysteresis_m: float = 0.01
    thresholds: FootprintThresholds = field(default_factory=FootprintThresholds)
    reference: Optional[ReferencePattern] = None

    def __post_init__(self):
        if self.scenario not in (1, 2):
            raise ValueError("scenario must be 1 or 2")
        if self.window < 1:
            raise ValueError("window must be >= 1")


@dataclass
class StepResult:
    phase: DetectionPhase
    timing: Optional[SpotTiming] = None
    pose: Optional[PoseStatus] = None
    events: list = field(default_factory=list)


class DetectionPipeline:
    """Per-sample detection state machine run on UAV-B.

    FarField -> Approaching when the footprint says "close" or the fused
    range drops under ``approach_distance_m``; Approaching runs the scenario
    estimator and emits one SpotTiming once entry is ``trigger_s`` away;
    Scheduled -> InSpot inside +-w; InSpot -> Exited past -w or on the RSSI
    exit test. ``reset()`` starts over for the next spot.
    """

    def __init__(self, geom: SpotGeometry, config: PipelineConfig = PipelineConfig()):
        self.geom = geom
        self.config = config
        self.reset()

    def reset(self, d0_m: Optional[float] = None):
        if d0_m is not None:
            self.config = replace(self.config, d0_m=d0_m)
        self.phase = DetectionPhase.FAR_FIELD
        self.transitions: list = []
        self.state: Optional[EstimatorState] = None
        self.timing: Optional[SpotTiming] = None
        self.activation_ns: Optional[int] = None
        self._history: deque = deque(maxlen=self.config.window + 1)
        self._d_min = math.inf
        self._past = False
        self._last_pose: Optional[PoseStatus] = None
        self._v = math.nan

    def _move(self, t_ns: int, new: DetectionPhase, events: list):
        if new < self.phase and not (self.phase is DetectionPhase.EXITED and new is DetectionPhase.FAR_FIELD):
            raise RuntimeError(f"illegal transition {self.phase.label} -> {new.label}")
        events.append(DetectionEvent(t_ns, "PhaseTransition", {"from": self.phase.label, "to": new.label}))
        self.transitions.append((t_ns, self.phase, new))
        self.phase = new

    def _estimate(self, t_ns: int, d: float) -> Optional[EstimatorState]:
        cfg = self.config
        self._d_min = min(self._d_min, d)
        if not self._past and d > self._d_min + cfg.pass_hysteresis_m:
            self._past = True
        state = None
        if self._history:
            s_ns, p_s, d_s = self._history[0]
            base = EstimatorState(d0_m=cfg.d0_m, d_t_m=d, t_ns=t_ns, s_ns=s_ns, d_s_m=d_s,
                                  p_s_m=p_s, v_s_mps=self._v, past_center=self._past)
            if cfg.scenario == 1:
                state = scenario1_estimate(self.geom, base, cfg.clamp_m)
                self._history.append((t_ns, state.p_t_m, d))
            else:
                state = scenario2_estimate(self.geom, base, cfg.clamp_m)
                self._history.append((t_ns, state.p_sc_m, d))
            self._v = state.v_s_mps
        else:
            rem = along_track_remaining(d, self.geom.a_m, cfg.clamp_m)
            if cfg.scenario == 1:
                full = math.sqrt(cfg.d0_m ** 2 - self.geom.a_m ** 2)
                self._history.append((t_ns, full - rem, d))
            else:
                self._history.append((t_ns, rem / 2.0, d))
        self.state = state
        return state

    def step(self, t_ns: int, fused_distance_m: float, footprint: Optional[RssiFootprint] = None) -> StepResult:
        cfg, w = self.config, self.geom.w_m
        events: list = []
        timing = None
        pose = None
        if self.phase is DetectionPhase.EXITED:
            return StepResult(self.phase)

        state = self._estimate(t_ns, fused_distance_m)

        if footprint is not None and cfg.reference is not None and self.phase <= DetectionPhase.APPROACHING:
            pose = match_reference(footprint, cfg.reference, cfg.thresholds)
            if pose != self._last_pose:
                events.append(DetectionEvent(t_ns, "PoseAdvisory", {
                    "status": pose.action.value,
                    "correction": list(pose.correction) if pose.correction else None,
                }))
                self._last_pose = pose

        if self.phase is DetectionPhase.FAR_FIELD:
            near = fused_distance_m < cfg.approach_distance_m
            if near or (footprint is not None and proximity_check(footprint, cfg.thresholds)):
                self._move(t_ns, DetectionPhase.APPROACHING, events)

        if self.phase is DetectionPhase.APPROACHING and state is not None and state.v_s_mps > 0:
            cand = entry_exit_times(state.p_sc_m, w, state.v_s_mps, t_ns)
            if cand.t_ent_s <= cfg.trigger_s:
                timing = self.timing = cand
                events.append(DetectionEvent(t_ns, "SpotTiming", {
                    "t_ent_s": cand.t_ent_s, "t_exit_s": cand.t_exit_s,
                    "t_ent_ns": cand.t_ent_ns, "t_exit_ns": cand.t_exit_ns,
                    "p_sc_m": state.p_sc_m, "v_s_mps": state.v_s_mps,
                }))
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", LeadExceedsEntry)
                    self.activation_ns = stsu_schedule(
                        replace(cand, t_ent_s=max(cand.t_ent_s, 0.0)), t_ns, cfg.warmup_lead_ns)
                events.append(DetectionEvent(t_ns, "Activation", {"activate_ns": self.activation_ns}))
                self._move(t_ns, DetectionPhase.SCHEDULED, events)

        if state is not None and self.phase in (DetectionPhase.SCHEDULED, DetectionPhase.IN_SPOT):
            p = state.p_sc_m
            if self.phase is DetectionPhase.SCHEDULED and p <= w:
                self._move(t_ns, DetectionPhase.IN_SPOT, events)
            if self.phase is DetectionPhase.IN_SPOT:
                gone = p < -w or (footprint is not None and exit_check(footprint, cfg.thresholds))
                if gone:
                    self._move(t_ns, DetectionPhase.EXITED, events)
        return StepResult(self.phase, timing, pose, events)
