from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ultraspot import kernels
from ultraspot.errors import ConfigRejected
from ultraspot.estimator import NS
from ultraspot.sim import (DropModel, ScenarioConfig, ShadowProfile, default_shadow_profiles, generate_trajectory,
                           monte_carlo, pose_correction_command, run_scenario, scan_window, simulate, stream,
                           synthesize_sample, STREAM_OBSERVATION)


def test_closest_approach_distance():
    traj = generate_trajectory(ScenarioConfig())
    assert traj.center_distance.min() == pytest.approx(7.07107, abs=1e-5)
    assert traj.center_distance[0] == pytest.approx(50.5, abs=1e-12)


def test_zero_speed_is_static():
    traj = generate_trajectory(ScenarioConfig(speed_b_mps=0.0))
    assert np.ptp(traj.pos_b, axis=0).max() == 0.0
    assert traj.ground_truth is None


def test_scenario2_closing_speed():
    cfg = ScenarioConfig(scenario=2)
    traj = generate_trajectory(cfg)
    gap = traj.pos_a[:, 0] - traj.pos_b[:, 0]
    rate = np.diff(gap) * cfg.sample_hz
    np.testing.assert_allclose(rate, -2.0, atol=1e-9)


def test_true_distance_is_position_difference():
    tr = simulate(ScenarioConfig(scenario=2))
    np.testing.assert_allclose(tr.trajectory.center_distance,
                               np.linalg.norm(tr.trajectory.pos_b - tr.trajectory.pos_a, axis=1))


def test_noiseless_phase_round_trip():
    tr = simulate(ScenarioConfig())
    d = tr.device_distance_m
    rec = kernels.unwrap_series(tr.phase_rad.T, d[0], tr.config.lambda_m)
    assert np.max(np.abs(rec.T - d)) < 1e-9


def test_shadow_sector_depth():
    prof = ShadowProfile(((20.0, 30.0, 20.0),))
    assert prof.attenuation(25.0) == 20.0
    assert prof.attenuation(35.0) == 0.0
    wrap = ShadowProfile(((350.0, 10.0, 5.0),))
    assert wrap.attenuation(3.0) == 5.0


def test_shadow_reduces_rssi_by_depth():
    shadowed = simulate(ScenarioConfig())
    clear = simulate(ScenarioConfig(shadowing=False))
    hit = shadowed.shadow_db > 0
    assert hit.any()
    np.testing.assert_allclose((clear.rssi_dbm - shadowed.rssi_dbm)[hit], 20.0)
    np.testing.assert_allclose((clear.rssi_dbm - shadowed.rssi_dbm)[~hit], 0.0)


@given(st.lists(st.tuples(st.floats(0, 360), st.floats(0, 360), st.floats(0, 40)), max_size=4),
       st.floats(-720, 720))
def test_shadow_never_adds(sectors, bearing):
    assert ShadowProfile(tuple(sectors)).attenuation(bearing) >= 0.0


def test_default_profiles_face_away_from_mount():
    prof = default_shadow_profiles()
    assert prof[0].attenuation(225.0) == 20.0
    assert prof[0].attenuation(45.0) == 0.0


def test_all_drop():
    tr = simulate(ScenarioConfig(drop_model=DropModel("iid", 1.0)))
    assert not tr.packet_ok.any()


def test_single_epoch_sample():
    cfg = ScenarioConfig()
    s = synthesize_sample(0, [0, 0, 0], [-50, 5, 5], cfg, stream(0, STREAM_OBSERVATION))
    assert [x.device_id for x in s] == [1, 2, 3, 4]
    assert all(x.packet_ok for x in s)


def test_all_dropped_fraction_matches_independent_bound():
    cfg = ScenarioConfig(drop_model=DropModel("iid", 0.5), seed=5)
    fracs = [(~simulate(replace(cfg, seed=s)).packet_ok).all(axis=1).mean()
             for s in range(10)]
    assert np.mean(fracs) == pytest.approx(0.0625, abs=0.01)


def test_ground_truth_interval():
    cfg = ScenarioConfig(w_m=0.789)
    gt = generate_trajectory(cfg).ground_truth
    assert gt.t_exit_ns - gt.t_ent_ns == pytest.approx(1.578 * NS, abs=1)


def test_deterministic_per_seed():
    cfg = ScenarioConfig(phase_noise_std_rad=0.05, rssi_noise_std_db=3, drop_model=DropModel("iid", 0.2),
                         seed=42)
    a, b = simulate(cfg), simulate(cfg)
    for name in ("phase_rad", "rssi_dbm", "packet_ok"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    c = simulate(replace(cfg, seed=43))
    assert not np.array_equal(a.phase_rad, c.phase_rad)


def test_monte_carlo_single_run_matches_scenario():
    cfg = ScenarioConfig(phase_noise_std_rad=0.05, drop_model=DropModel("iid", 0.2), seed=9)
    rep = monte_carlo(cfg, 1)
    assert rep.seeds == [9]
    assert rep.errors[0] == run_scenario(cfg).errors


def test_config_validation():
    with pytest.raises(ConfigRejected):
        ScenarioConfig(scenario=3)
    with pytest.raises(ConfigRejected):
        ScenarioConfig(seed=-1)
    with pytest.raises(ConfigRejected):
        ScenarioConfig(d0_m=7.0)
    with pytest.raises(ConfigRejected):
        ScenarioConfig(speed_b_mps=3.3)
    with pytest.raises(ConfigRejected):
        ScenarioConfig.from_dict({"bogus": 1})


def test_config_dict_round_trip():
    cfg = ScenarioConfig(scenario=2, drop_model=DropModel("shadow", 0.1), shadow_profiles=default_shadow_profiles())
    assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg


def test_pose_command_limits():
    cmd = pose_correction_command((0.0, 1.0, 0.0), 1.0, gain=2.0)
    assert cmd.heading_rate_rps == 0.5
    assert pose_correction_command(None, 1.0).heading_rate_rps == 0.0


def test_scan_window_requires_scenario1():
    res = run_scenario(ScenarioConfig(scenario=2))
    with pytest.raises(ValueError):
        scan_window(res)


def test_noiseless_run_is_exact():
    for scenario in (1, 2):
        res = run_scenario(ScenarioConfig(scenario=scenario))
        assert res.errors.eps_entWi <= 0.05 and res.errors.eps_exitWi <= 0.05
        assert res.errors.eps_entRTK is not None
