"""Synthetic flights past an ultra-spot: trajectories, ranging observables, runs.

Frame: UAV-A starts at the origin. UAV-B flies along +x on the line
``y = r, z = h``; in scenario 2 UAV-A flies along -x on the x axis. The
spot center is where B's along-track offset to A (scenario 1) or to the
crossing point (scenario 2) is zero.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from . import kernels
from .diversity import reliability_mask
from .errors import ConfigRejected
from .estimator import (NS, DetectionPipeline, GroundTruth, PipelineConfig, SpotGeometry,
                        SpotTiming, TimingErrors, entry_exit_times, timing_errors)
from .footprint import DEFAULT_MOUNTS, RssiFootprint
from .phase import DEFAULT_WAVELENGTH_M, PhaseSample

TWO_PI = 2.0 * math.pi

# independent random streams per component, so any one can be regenerated alone
STREAM_TRAJECTORY, STREAM_INITIAL_RANGE, STREAM_OBSERVATION, STREAM_BASELINE = range(4)


def stream(seed: int, component: int) -> np.random.Generator:
    return np.random.default_rng([seed, component])


@dataclass(frozen=True)
class ShadowProfile:
    """Body-shadowing attenuation by bearing; sectors are (start_deg, end_deg, depth_db).

    Bearing is the direction of UAV-A in UAV-B's body frame, counter-clockwise
    from the nose. A sector with start > end wraps through 0 deg.
    """

    sectors: tuple = ()

    def __post_init__(self):
        secs = tuple((float(a) % 360.0, float(b) % 360.0, float(d)) for a, b, d in self.sectors)
        if any(d < 0 for _, _, d in secs):
            raise ValueError("shadow attenuation must be >= 0 dB")
        object.__setattr__(self, "sectors", secs)

    def attenuation(self, bearing_deg):
        b = np.mod(np.asarray(bearing_deg, dtype=float), 360.0)
        out = np.zeros_like(b)
        for start, end, depth in self.sectors:
            inside = (b >= start) & (b <= end) if start <= end else (b >= start) | (b <= end)
            out = np.maximum(out, np.where(inside, depth, 0.0))
        return out


def default_shadow_profiles(mounts=DEFAULT_MOUNTS, width_deg: float = 15.0,
                            depth_db: float = 20.0) -> tuple:
    """One sector per device, centred on the bearing that puts the airframe between it and UAV-A."""
    out = []
    for m in np.asarray(mounts):
        back = (math.degrees(math.atan2(m[1], m[0])) + 180.0) % 360.0
        out.append(ShadowProfile(((back - width_deg / 2, back + width_deg / 2, depth_db),)))
    return tuple(out)


@dataclass(frozen=True)
class DropModel:
    """Packet drops: "none", "iid" with probability p, or "shadow" where p
    escalates to ``p_shadow`` while attenuation exceeds ``shadow_threshold_db``.

    ``correlation`` c makes a fraction c of epochs share one blockage draw
    across all devices.
    """

    kind: str = "none"
    p: float = 0.0
    p_shadow: float = 0.8
    shadow_threshold_db: float = 15.0
    correlation: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "iid", "shadow"):
            raise ValueError(f"unknown drop model {self.kind!r}")
        for name in ("p", "p_shadow", "correlation"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: int = 1
    h_m: float = 5.0
    r_m: float = 5.0
    w_m: float = 0.9
    d0_m: float = 50.5
    speed_b_mps: float = 1.0
    speed_a_mps: Optional[float] = None
    sample_hz: float = 20.0
    duration_s: Optional[float] = None
    lambda_m: float = DEFAULT_WAVELENGTH_M
    phase_noise_std_rad: float = 0.0
    rssi_noise_std_db: float = 0.0
    drop_model: DropModel = field(default_factory=DropModel)
    shadow_profiles: Optional[tuple] = None
    seed: int = 0
    device_mounts: tuple = tuple(map(tuple, DEFAULT_MOUNTS.tolist()))
    rssi_ref_dbm: float = -55.0
    rssi_ref_distance_m: float = 7.0
    path_loss_exponent: float = 2.0
    d0_error_std_m: float = 0.0
    speed_jitter_std_mps: float = 0.0
    gnss_pos_std_m: float = 2.0
    rtk_pos_std_m: float = 0.02
    shadowing: bool = True

    def __post_init__(self):
        if self.scenario not in (1, 2):
            raise ConfigRejected("scenario must be 1 or 2")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigRejected("seed must be a non-negative 64-bit integer")
        if self.sample_hz <= 0:
            raise ConfigRejected("sample_hz must be positive")
        if self.speed_b_mps < 0 or (self.speed_a_mps is not None and self.speed_a_mps < 0):
            raise ConfigRejected("speeds must be >= 0")
        if self.phase_noise_std_rad < 0 or self.rssi_noise_std_db < 0:
            raise ConfigRejected("noise levels must be >= 0")
        if self.d0_m <= math.hypot(self.h_m, self.r_m):
            raise ConfigRejected("d0 must exceed the safety distance sqrt(h^2 + r^2)")
        if len(self.device_mounts) < 1:
            raise ConfigRejected("at least one device mount required")
        if self.shadow_profiles is not None and len(self.shadow_profiles) != len(self.device_mounts):
            raise ConfigRejected("one shadow profile per device required")
        step = self.closing_speed_mps / self.sample_hz
        if step >= self.lambda_m / 2:
            raise ConfigRejected(
                f"{step:.4f} m of relative motion per sample exceeds lambda/2 = {self.lambda_m / 2:.4f} m; "
                "phase unwrapping would alias")

    @property
    def speed_a(self) -> float:
        if self.scenario == 1:
            return 0.0
        return self.speed_b_mps if self.speed_a_mps is None else self.speed_a_mps

    @property
    def closing_speed_mps(self) -> float:
        return self.speed_b_mps + self.speed_a

    @property
    def a_m(self) -> float:
        return math.hypot(self.h_m, self.r_m)

    @property
    def n_devices(self) -> int:
        return len(self.device_mounts)

    @property
    def geometry(self) -> SpotGeometry:
        return SpotGeometry(self.h_m, self.r_m, self.w_m)

    def profiles(self) -> tuple:
        if not self.shadowing:
            return tuple(ShadowProfile() for _ in self.device_mounts)
        if self.shadow_profiles is None:
            return default_shadow_profiles(np.asarray(self.device_mounts))
        return tuple(self.shadow_profiles)

    def resolved_duration_s(self, closing_speed_mps: Optional[float] = None) -> float:
        """Explicit duration, else long enough to pass the spot by 10 m at the given closing speed."""
        if self.duration_s is not None:
            return self.duration_s
        v = self.closing_speed_mps if closing_speed_mps is None else closing_speed_mps
        if v == 0:
            return 10.0
        gap = math.sqrt(self.d0_m ** 2 - self.a_m ** 2)
        return (gap + 10.0) / v

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.shadow_profiles is not None:
            d["shadow_profiles"] = [list(map(list, p.sectors)) for p in self.shadow_profiles]
        d["device_mounts"] = [list(m) for m in self.device_mounts]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        d = dict(d)
        if "drop_model" in d and isinstance(d["drop_model"], dict):
            d["drop_model"] = DropModel(**d["drop_model"])
        if d.get("shadow_profiles") is not None:
            d["shadow_profiles"] = tuple(ShadowProfile(tuple(map(tuple, s))) for s in d["shadow_profiles"])
        if "device_mounts" in d:
            d["device_mounts"] = tuple(tuple(float(x) for x in m) for m in d["device_mounts"])
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigRejected(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class ControlCommand:
    heading_rate_rps: float
    speed_setpoint_mps: float
    max_heading_rate_rps: float = 0.5
    max_speed_mps: float = 3.0

    def __post_init__(self):
        if abs(self.heading_rate_rps) > self.max_heading_rate_rps:
            raise ValueError("heading rate beyond limit")
        if not 0 <= self.speed_setpoint_mps <= self.max_speed_mps:
            raise ValueError("speed setpoint beyond limit")


def pose_correction_command(correction, speed_mps: float, gain: float = 0.5,
                            max_heading_rate_rps: float = 0.5) -> ControlCommand:
    """Proportional heading correction toward a body-frame hint vector."""
    if correction is None:
        rate = 0.0
    else:
        rate = gain * math.atan2(correction[1], correction[0])
        rate = max(-max_heading_rate_rps, min(max_heading_rate_rps, rate))
    return ControlCommand(rate, speed_mps, max_heading_rate_rps)


@dataclass
class Trajectory:
    t_ns: np.ndarray
    pos_a: np.ndarray
    pos_b: np.ndarray
    yaw_a: float
    yaw_b: float
    along_track_m: np.ndarray
    speed_a_mps: float
    speed_b_mps: float
    ground_truth: Optional[GroundTruth]

    @property
    def center_distance(self) -> np.ndarray:
        return np.linalg.norm(self.pos_b - self.pos_a, axis=1)


def _rotz(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def generate_trajectory(cfg: ScenarioConfig, rng: Optional[np.random.Generator] = None) -> Trajectory:
    rng = rng if rng is not None else stream(cfg.seed, STREAM_TRAJECTORY)
    jitter = rng.normal(0.0, cfg.speed_jitter_std_mps, 2) if cfg.speed_jitter_std_mps > 0 else np.zeros(2)
    vb = max(0.0, cfg.speed_b_mps + jitter[0])
    va = max(0.0, cfg.speed_a + jitter[1]) if cfg.scenario == 2 else 0.0
    n = int(round(cfg.resolved_duration_s(va + vb) * cfg.sample_hz)) + 1
    t_ns = np.array([round(k * NS / cfg.sample_hz) for k in range(n)], dtype=np.int64)
    t = t_ns / NS
    gap0 = math.sqrt(cfg.d0_m ** 2 - cfg.a_m ** 2)

    pos_b = np.column_stack([np.zeros(n), np.full(n, cfg.r_m), np.full(n, cfg.h_m)])
    pos_a = np.zeros((n, 3))
    nom_a, nom_b = cfg.speed_a, cfg.speed_b_mps
    if cfg.scenario == 1 or nom_a + nom_b == 0:
        xb0 = -gap0
        xa0 = 0.0
    else:
        # nominal crossing point at x = 0
        xb0 = -gap0 * nom_b / (nom_a + nom_b)
        xa0 = gap0 + xb0
    pos_b[:, 0] = xb0 + vb * t
    pos_a[:, 0] = xa0 - va * t

    if va + vb > 0:
        t_cross = gap0 / (va + vb)
        x_cross = xb0 + vb * t_cross
    else:
        t_cross, x_cross = math.inf, xa0
    along = x_cross - pos_b[:, 0]
    gt = None
    if vb > 0 and math.isfinite(t_cross):
        gt = GroundTruth(round((t_cross - cfg.w_m / vb) * NS), round((t_cross + cfg.w_m / vb) * NS))
    return Trajectory(t_ns, pos_a, pos_b, math.pi, 0.0, along, va, vb, gt)


@dataclass
class SimTrace:
    config: ScenarioConfig
    trajectory: Trajectory
    device_distance_m: np.ndarray  # (n, devices)
    bearing_deg: np.ndarray
    shadow_db: np.ndarray
    phase_rad: np.ndarray
    rssi_dbm: np.ndarray
    packet_ok: np.ndarray
    d0_measured_m: float

    @property
    def t_ns(self) -> np.ndarray:
        return self.trajectory.t_ns

    @property
    def ground_truth(self) -> Optional[GroundTruth]:
        return self.trajectory.ground_truth

    def samples(self):
        """PhaseSample records in (t_ns, device_id) order."""
        for j, t in enumerate(self.t_ns.tolist()):
            for i in range(self.phase_rad.shape[1]):
                yield PhaseSample(t, i + 1, float(self.phase_rad[j, i]), float(self.rssi_dbm[j, i]),
                                  bool(self.packet_ok[j, i]))


def _wrap(x):
    return x - TWO_PI * np.ceil((x - math.pi) / TWO_PI)


def _observe(cfg: ScenarioConfig, pos_a, pos_b, yaw_b, rng):
    """Device ranges, bearings, shadowing and noisy observables for (n, 3) positions."""
    mounts = np.asarray(cfg.device_mounts, dtype=float)
    rot = _rotz(yaw_b)
    dev_pos = pos_b[:, None, :] + (mounts @ rot.T)[None, :, :]
    rel = pos_a[:, None, :] - dev_pos
    dist = np.linalg.norm(rel, axis=2)
    body = rel @ rot  # rotate into B's body frame
    bearing = np.degrees(np.arctan2(body[..., 1], body[..., 0])) % 360.0
    profiles = cfg.profiles()
    shadow = np.column_stack([profiles[i].attenuation(bearing[:, i]) for i in range(len(profiles))])
    n, m = dist.shape

    phase = -TWO_PI * dist / cfg.lambda_m
    if cfg.phase_noise_std_rad > 0:
        phase = phase + rng.normal(0.0, cfg.phase_noise_std_rad, (n, m))
    phase = _wrap(phase)
    rssi = (cfg.rssi_ref_dbm - 10.0 * cfg.path_loss_exponent * np.log10(dist / cfg.rssi_ref_distance_m)
            - shadow)
    if cfg.rssi_noise_std_db > 0:
        rssi = rssi + rng.normal(0.0, cfg.rssi_noise_std_db, (n, m))

    dm = cfg.drop_model
    if dm.kind == "none":
        ok = np.ones((n, m), dtype=bool)
    else:
        p = np.full((n, m), dm.p)
        if dm.kind == "shadow":
            p = np.where(shadow > dm.shadow_threshold_db, max(dm.p, dm.p_shadow), p)
        drop = rng.random((n, m)) < p
        if dm.correlation > 0:
            common = rng.random(n) < dm.correlation
            shared = rng.random(n) < p.mean(axis=1)
            drop[common] = shared[common, None]
        ok = ~drop
    return dist, bearing, shadow, phase, rssi, ok


def measured_initial_distance(cfg: ScenarioConfig) -> float:
    """The d0 handed to the ranging: true d0 plus RTK/mapper error."""
    if cfg.d0_error_std_m <= 0:
        return cfg.d0_m
    return cfg.d0_m + float(stream(cfg.seed, STREAM_INITIAL_RANGE).normal(0.0, cfg.d0_error_std_m))


def synthesize_samples(traj: Trajectory, cfg: ScenarioConfig, rng: Optional[np.random.Generator] = None) -> SimTrace:
    rng = rng if rng is not None else stream(cfg.seed, STREAM_OBSERVATION)
    d0_meas = measured_initial_distance(cfg)
    dist, bearing, shadow, phase, rssi, ok = _observe(cfg, traj.pos_a, traj.pos_b, traj.yaw_b, rng)
    return SimTrace(cfg, traj, dist, bearing, shadow, phase, rssi, ok, d0_meas)


def synthesize_sample(t_ns: int, pos_a, pos_b, cfg: ScenarioConfig, rng: np.random.Generator,
                      yaw_b: float = 0.0) -> list:
    """One epoch of PhaseSamples, one per device."""
    _, _, _, phase, rssi, ok = _observe(cfg, np.atleast_2d(pos_a).astype(float),
                                        np.atleast_2d(pos_b).astype(float), yaw_b, rng)
    return [PhaseSample(int(t_ns), i + 1, float(phase[0, i]), float(rssi[0, i]), bool(ok[0, i]))
            for i in range(phase.shape[1])]


def simulate(cfg: ScenarioConfig) -> SimTrace:
    return synthesize_samples(generate_trajectory(cfg), cfg)


def hold_last(values: np.ndarray, ok: np.ndarray, initial: float = -100.0) -> np.ndarray:
    """Forward-fill each column over samples where ``ok`` is false."""
    out = np.array(values, dtype=float)
    idx = np.where(ok, np.arange(len(out))[:, None], -1)
    np.maximum.accumulate(idx, axis=0, out=idx)
    filled = np.take_along_axis(out, np.maximum(idx, 0), axis=0)
    return np.where(idx >= 0, filled, initial)


@dataclass
class ScenarioResult:
    trace: SimTrace
    fused_distance_m: np.ndarray
    device_track_m: np.ndarray
    devices_used: np.ndarray
    events: list
    timing: Optional[SpotTiming]
    emitted_ns: Optional[int]
    baselines: dict
    errors: Optional[TimingErrors]
    transitions: list


def _baseline_timing(trace: SimTrace, j: int, pos_std: float, rng: np.random.Generator) -> Optional[SpotTiming]:
    """Entry/exit predicted from a biased position fix (GNSS/RTK stand-in).

    Satellite position errors drift slowly, so one bias per run is drawn and
    the along-track speed is taken from the navigation solution unbiased.
    """
    cfg, traj = trace.config, trace.trajectory
    v = traj.speed_b_mps
    if v <= 0:
        return None
    p_hat = traj.along_track_m[j] + rng.normal(0.0, pos_std)
    return entry_exit_times(p_hat, cfg.w_m, v, int(traj.t_ns[j]))


def planned_range_rate(cfg: ScenarioConfig) -> float:
    """Range rate at t = 0 implied by the nominal flight plan, m/s."""
    gap0 = math.sqrt(cfg.d0_m ** 2 - cfg.a_m ** 2)
    return -cfg.closing_speed_mps * gap0 / cfg.d0_m


@dataclass
class DetectionRun:
    fused_distance_m: np.ndarray
    device_track_m: np.ndarray
    devices_used: np.ndarray
    events: list
    timing: Optional[SpotTiming]
    emitted_index: Optional[int]
    transitions: list


def run_pipeline(cfg: ScenarioConfig, t_ns, phase_rad, rssi_dbm, packet_ok, d0_m: float,
                 pipeline_cfg: Optional[PipelineConfig] = None, reliability_window: int = 20,
                 backend: Optional[str] = None) -> DetectionRun:
    """Ranging fusion then the detection state machine over (epochs, devices) arrays."""
    pcfg = pipeline_cfg or PipelineConfig()
    pcfg = replace(pcfg, d0_m=d0_m, scenario=cfg.scenario)
    t_ns = np.asarray(t_ns, dtype=np.int64)
    packet_ok = np.asarray(packet_ok, dtype=bool)
    rssi_dbm = np.asarray(rssi_dbm, dtype=float)
    rel = reliability_mask(packet_ok, rssi_dbm, window=reliability_window)
    fused, per_dev, used = kernels.fuse_ranging(
        phase_rad, packet_ok, rel, d0_m, cfg.lambda_m,
        mounts=np.asarray(cfg.device_mounts), lateral=(-cfg.r_m, -cfg.h_m),
        hysteresis=pcfg.pass_hysteresis_m, initial_rate=planned_range_rate(cfg) / cfg.sample_hz,
        backend=backend)
    pipe = DetectionPipeline(cfg.geometry, pcfg)
    rssi = hold_last(rssi_dbm, packet_ok)
    events, timing, emitted = [], None, None
    n_dev = rssi.shape[1]
    fused_list = fused.tolist()
    for j, t in enumerate(t_ns.tolist()):
        fp = RssiFootprint(t, tuple(rssi[j])) if n_dev == 4 else None
        res = pipe.step(t, fused_list[j], fp)
        events.extend(res.events)
        if res.timing is not None and timing is None:
            timing, emitted = res.timing, j
        if pipe.phase.name == "EXITED":
            break
    return DetectionRun(fused, per_dev, used, events, timing, emitted, pipe.transitions)


def detect(trace: SimTrace, pipeline_cfg: Optional[PipelineConfig] = None,
           backend: Optional[str] = None) -> DetectionRun:
    return run_pipeline(trace.config, trace.t_ns, trace.phase_rad, trace.rssi_dbm, trace.packet_ok,
                        trace.d0_measured_m, pipeline_cfg, backend=backend)


def evaluate(trace: SimTrace, run: DetectionRun):
    """GNSS/RTK stand-ins at the instant the ranging pipeline emitted its timing and errors vs. ground truth."""
    cfg = trace.config
    if run.timing is None:
        return {}, None
    brng = stream(cfg.seed, STREAM_BASELINE)
    baselines = {
        "Wi": run.timing,
        "GNSS": _baseline_timing(trace, run.emitted_index, cfg.gnss_pos_std_m, brng),
        "RTK": _baseline_timing(trace, run.emitted_index, cfg.rtk_pos_std_m, brng),
    }
    errors = timing_errors(baselines, trace.ground_truth) if trace.ground_truth is not None else None
    return baselines, errors


def run_scenario(cfg: ScenarioConfig, pipeline_cfg: Optional[PipelineConfig] = None,
                 backend: Optional[str] = None) -> ScenarioResult:
    trace = simulate(cfg)
    run = detect(trace, pipeline_cfg, backend=backend)
    baselines, errors = evaluate(trace, run)
    emitted = None if run.emitted_index is None else int(trace.t_ns[run.emitted_index])
    return ScenarioResult(trace, run.fused_distance_m, run.device_track_m, run.devices_used, run.events,
                          run.timing, emitted, baselines, errors, run.transitions)


@dataclass
class MonteCarloReport:
    seeds: list
    errors: list  # TimingErrors or None per seed
    all_dropped_fraction: list
    median: dict
    percentiles: dict
    median_ci95: dict

    def rows(self):
        for seed, err, frac in zip(self.seeds, self.errors, self.all_dropped_fraction):
            vals = err.as_row() if err is not None else [None] * 6
            yield [seed, *vals, frac]


def _one_run(args):
    cfg, backend = args
    res = run_scenario(cfg, backend=backend)
    frac = float((~res.trace.packet_ok).all(axis=1).mean())
    return cfg.seed, res.errors, frac


def monte_carlo(cfg: ScenarioConfig, n_runs: int, workers: int = 1, backend: Optional[str] = None,
                percentiles: Sequence[float] = (50, 90, 95), bootstrap_resamples: int = 2000) -> MonteCarloReport:
    """Independent runs on seeds ``cfg.seed .. cfg.seed + n_runs - 1``."""
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    jobs = [(replace(cfg, seed=cfg.seed + k), backend) for k in range(n_runs)]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_one_run, jobs))
    else:
        results = [_one_run(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    seeds = [r[0] for r in results]
    errs = [r[1] for r in results]
    fracs = [r[2] for r in results]

    median, pct, ci = {}, {}, {}
    for name in TimingErrors.FIELDS:
        vals = np.array([getattr(e, name) for e in errs if e is not None and getattr(e, name) is not None])
        if vals.size == 0:
            continue
        median[name] = float(np.median(vals))
        pct[name] = {float(p): float(np.percentile(vals, p)) for p in percentiles}
        if vals.size > 1 and np.ptp(vals) > 0:
            bs = stats.bootstrap((vals,), np.median, n_resamples=bootstrap_resamples,
                                 confidence_level=0.95, method="percentile",
                                 random_state=np.random.default_rng(cfg.seed))
            ci[name] = (float(bs.confidence_interval.low), float(bs.confidence_interval.high))
        else:
            ci[name] = (median[name], median[name])
    return MonteCarloReport(seeds, errs, fracs, median, pct, ci)


def lever_arm(center_range_m, mounts, lateral, past_center) -> np.ndarray:
    """Device range minus center range, shape (n, devices); numpy twin of the kernel term."""
    f = np.asarray(center_range_m, dtype=float)[:, None]
    mounts = np.asarray(mounts, dtype=float)
    ly, lz = lateral
    lat2 = ly * ly + lz * lz
    p = np.sqrt(np.maximum(f * f - lat2, 0.0)) * np.where(np.asarray(past_center)[:, None], -1.0, 1.0)
    dev = np.sqrt((p - mounts[:, 0]) ** 2 + (ly - mounts[:, 1]) ** 2 + (lz - mounts[:, 2]) ** 2)
    return dev - np.sqrt(p * p + lat2)


def past_center_flags(fused_m, hysteresis_m: float = 0.01) -> np.ndarray:
    fused_m = np.asarray(fused_m, dtype=float)
    rising = fused_m > np.minimum.accumulate(fused_m) + hysteresis_m
    return np.maximum.accumulate(rising)


def scan_window(result: ScenarioResult, max_range_m: Optional[float] = 20.0,
                hysteresis_m: float = 0.01):
    """Grid-scan input from a scenario-1 run: along-track position flown, RSSI, centered ranges.

    Only samples with fused range below ``max_range_m`` are kept.
    """
    from .likelihood import ScanWindow

    trace = result.trace
    cfg = trace.config
    if cfg.scenario != 1:
        raise ValueError("grid scan needs a stationary spot (scenario 1)")
    n = len(result.fused_distance_m)
    pos_b = trace.trajectory.pos_b[:n]
    x_b = pos_b[:, 0] - pos_b[0, 0]
    past = past_center_flags(result.fused_distance_m, hysteresis_m)
    centered = result.device_track_m - lever_arm(result.fused_distance_m, cfg.device_mounts,
                                                 (-cfg.r_m, -cfg.h_m), past)
    keep = np.ones(n, dtype=bool) if max_range_m is None else result.fused_distance_m < max_range_m
    mask = trace.packet_ok[:n] & np.isfinite(centered)
    return ScanWindow(x_b[keep], trace.rssi_dbm[:n][keep], np.where(mask, centered, 0.0)[keep], mask[keep])
