import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ultraspot.errors import DegenerateWindow, InsideSafetyRadius, LeadExceedsEntry, MissingGroundTruth, NonPositiveSpeed
from ultraspot.estimator import (NS, DetectionPhase, DetectionPipeline, EstimatorState, GroundTruth,
                                 PipelineConfig, SpotGeometry, SpotTiming, along_track_remaining,
                                 entry_exit_times, scenario1_estimate, scenario2_estimate, stsu_schedule,
                                 timing_errors)
from ultraspot.footprint import RssiFootprint
from ultraspot.sim import ScenarioConfig, generate_trajectory

GEOM = SpotGeometry(5.0, 5.0, 0.9)
A = math.hypot(5.0, 5.0)
FULL = math.sqrt(50.5 ** 2 - A ** 2)


def s1(d_t, t_ns=NS, s_ns=0, p_s=0.0):
    return scenario1_estimate(GEOM, EstimatorState(d0_m=50.5, d_t_m=d_t, t_ns=t_ns, s_ns=s_ns, p_s_m=p_s))


def test_scenario1_start_and_center():
    start = s1(50.5)
    assert start.p_t_m == pytest.approx(0.0, abs=1e-12)
    assert start.p_sc_m == pytest.approx(50.0025, abs=1e-4)
    center = s1(A)
    assert center.p_sc_m == 0.0
    assert center.p_t_m == pytest.approx(50.0025, abs=1e-4)


def test_scenario1_speed():
    d = math.hypot(A, FULL - 5.0)
    st_ = s1(d, t_ns=5 * NS, s_ns=0, p_s=0.0)
    assert st_.p_sc_m == pytest.approx(FULL - 5.0)
    assert st_.p_t_m == pytest.approx(5.0)
    assert st_.v_s_mps == pytest.approx(1.0)


def test_scenario1_rejects_bad_window():
    with pytest.raises(DegenerateWindow):
        s1(40.0, t_ns=0, s_ns=0)


def test_remaining_clamp_and_error():
    assert along_track_remaining(A - 0.04, A) == 0.0
    with pytest.raises(InsideSafetyRadius):
        along_track_remaining(A - 0.06, A)


def test_scenario2_examples():
    d = math.hypot(A, 20.0)
    st_ = scenario2_estimate(GEOM, EstimatorState(d0_m=50.5, d_t_m=d, t_ns=NS, s_ns=0, p_s_m=12.0))
    assert st_.p_sc_m == pytest.approx(10.0)
    assert st_.v_s_mps == pytest.approx(2.0)
    at = scenario2_estimate(GEOM, EstimatorState(d0_m=50.5, d_t_m=A, t_ns=NS, s_ns=0, p_s_m=1.0))
    assert at.p_sc_m == 0.0


def test_speed_kept_when_new_estimate_invalid():
    d = math.hypot(A, 20.0)
    st_ = scenario2_estimate(GEOM, EstimatorState(d0_m=50.5, d_t_m=d, t_ns=NS, s_ns=0, p_s_m=9.0,
                                                  v_s_mps=1.5))
    assert st_.v_s_mps == 1.5


def test_entry_exit_examples():
    t = entry_exit_times(10.0, 0.9, 1.0)
    assert (t.t_ent_s, t.t_exit_s) == pytest.approx((9.1, 10.9))
    assert entry_exit_times(0.9, 0.9, 1.0).t_ent_s == 0.0
    with pytest.raises(NonPositiveSpeed):
        entry_exit_times(10.0, 0.9, 0.0)


@given(st.floats(-50, 50), st.floats(0.05, 5), st.floats(0.1, 3))
def test_width_identity(p, w, v):
    t = entry_exit_times(p, w, v)
    assert t.t_exit_s - t.t_ent_s == pytest.approx(2 * w / v, rel=1e-12, abs=1e-12)


def test_timing_errors_examples():
    gt = GroundTruth(10 * NS, 12 * NS)
    exact = SpotTiming(10.0, 12.0, 10 * NS, 12 * NS)
    e = timing_errors({"Wi": exact, "GNSS": exact, "RTK": exact}, gt)
    assert e.as_row() == [0.0] * 6
    late = SpotTiming(10.054, 12.054, 10 * NS + 54_000_000, 12 * NS + 54_000_000)
    early = SpotTiming(9.922, 11.922, 10 * NS - 78_000_000, 12 * NS - 78_000_000)
    e = timing_errors({"Wi": late, "RTK": early}, gt)
    assert e.eps_entWi == pytest.approx(0.054, abs=1e-12)
    assert e.eps_entRTK == pytest.approx(0.078, abs=1e-12)
    assert e.eps_entGNSS is None
    with pytest.raises(MissingGroundTruth):
        timing_errors({"Wi": exact}, None)


def test_stsu_examples():
    now = 123 * NS
    assert stsu_schedule(SpotTiming(9.1, 10.9, 0, 0), now, 100_000_000) == now + 9 * NS
    assert stsu_schedule(SpotTiming(0.0, 1.8, 0, 0), now, 0) == now
    with pytest.warns(LeadExceedsEntry):
        assert stsu_schedule(SpotTiming(2.0, 3.8, 0, 0), now, 10 * NS) == now


def test_pipeline_proximity_moves_to_approaching():
    pipe = DetectionPipeline(GEOM, PipelineConfig(d0_m=50.5))
    res = pipe.step(0, 40.0, RssiFootprint(0, (-50, -52, -54, -56)))
    assert res.phase is DetectionPhase.APPROACHING


def _drive(pipe, p_values, dt_ns=50_000_000):
    out = []
    for k, p in enumerate(p_values):
        d = math.hypot(A, p)
        out.append(pipe.step(k * dt_ns, d))
    return out


def test_pipeline_emits_timing_and_schedules():
    pipe = DetectionPipeline(GEOM, PipelineConfig(d0_m=50.5, approach_distance_m=60.0, trigger_s=2.1))
    # closing at 1 m/s; the first trigger lands at p_sc = 3.0
    ps = [3.5 - 0.05 * k for k in range(11)]
    results = _drive(pipe, ps)
    fired = [r for r in results if r.timing is not None]
    assert len(fired) == 1
    assert fired[0].timing.t_ent_s == pytest.approx(2.1, abs=1e-6)
    assert pipe.phase is DetectionPhase.SCHEDULED
    kinds = [e.kind for e in fired[0].events]
    assert kinds[:2] == ["SpotTiming", "Activation"]


def test_pipeline_exit_past_spot():
    pipe = DetectionPipeline(GEOM, PipelineConfig(d0_m=50.5, approach_distance_m=60.0))
    ps = [2.0 - 0.05 * k for k in range(80)]
    _drive(pipe, ps)
    assert pipe.phase is DetectionPhase.EXITED
    labels = [new.label for _, _, new in pipe.transitions]
    assert labels == ["Approaching", "Scheduled", "InSpot", "Exited"]
    exit_t = pipe.transitions[-1][0]
    # exit fires at the first sample with p_sc < -w
    assert ps[exit_t // 50_000_000] < -0.9 <= ps[exit_t // 50_000_000 - 1]


@given(st.lists(st.floats(-30, 30), min_size=2, max_size=80))
def test_pipeline_phase_never_regresses(ps):
    pipe = DetectionPipeline(GEOM, PipelineConfig(d0_m=50.5))
    last = pipe.phase
    for k, p in enumerate(ps):
        pipe.step(k * 50_000_000, math.hypot(A, p))
        assert pipe.phase >= last
        last = pipe.phase


def test_geometric_consistency_scenario1():
    cfg = ScenarioConfig()
    traj = generate_trajectory(cfg)
    d = traj.center_distance
    rem = np.sqrt(np.maximum(d * d - cfg.a_m ** 2, 0.0))
    assert np.max(np.abs(rem - np.abs(traj.along_track_m))) < 1e-9


def test_scenario2_half_gap_matches_each_uav():
    cfg = ScenarioConfig(scenario=2)
    traj = generate_trajectory(cfg)
    d = traj.center_distance
    half = np.sqrt(np.maximum(d * d - cfg.a_m ** 2, 0.0)) / 2.0
    assert np.max(np.abs(half - np.abs(traj.along_track_m))) < 1e-9
    assert np.max(np.abs(half - np.abs(traj.pos_a[:, 0]))) < 1e-9
