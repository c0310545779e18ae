import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ultraspot import kernels
from ultraspot.phase import RangingTrack, PhaseSample, unwrap_step, wrap_phase
from ultraspot.sim import ScenarioConfig, DropModel, simulate, planned_range_rate

LAM = 0.325
needs_c = pytest.mark.skipif("cython" not in kernels.BACKENDS, reason="compiled kernels not built")


def test_backend_selection_reports_known_name():
    assert kernels.BACKEND in kernels.BACKENDS
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 300))
def test_unwrap_series_matches_streaming(seed, n):
    rng = np.random.default_rng(seed)
    d = 20.0 + np.concatenate([[0.0], np.cumsum(rng.uniform(-0.08, 0.08, n - 1))])
    ph = np.array([wrap_phase(-2 * math.pi * v / LAM) for v in d])
    fast = kernels.unwrap_series(ph, d[0], LAM, backend="python")[0]
    tr = RangingTrack.start(PhaseSample(0, 1, ph[0], -60.0), float(d[0]), LAM)
    slow = [tr.d_t_m]
    for k in range(1, n):
        tr = unwrap_step(tr, PhaseSample(k, 1, ph[k], -60.0))
        slow.append(tr.d_t_m)
    np.testing.assert_allclose(fast, slow, rtol=0, atol=1e-9)
    np.testing.assert_allclose(fast, d, rtol=0, atol=1e-9)


@needs_c
@given(st.integers(0, 2 ** 32 - 1))
def test_unwrap_backends_identical(seed):
    rng = np.random.default_rng(seed)
    ph = rng.uniform(-math.pi, math.pi, (3, 50))
    d0 = rng.uniform(10, 60, 3)
    a = kernels.unwrap_series(ph, d0, LAM, backend="python")
    b = kernels.unwrap_series(ph, d0, LAM, backend="cython")
    np.testing.assert_array_equal(a, b)


def _fuse_inputs(seed, scenario, p):
    cfg = ScenarioConfig(scenario=scenario, seed=seed, phase_noise_std_rad=0.05, rssi_noise_std_db=3.0,
                         drop_model=DropModel("iid", p))
    tr = simulate(cfg)
    from ultraspot.diversity import reliability_mask
    rel = reliability_mask(tr.packet_ok, tr.rssi_dbm)
    return cfg, tr, rel


@needs_c
@given(st.integers(0, 10_000), st.sampled_from([1, 2]), st.sampled_from([0.0, 0.2, 0.6]))
def test_fuse_backends_identical(seed, scenario, p):
    cfg, tr, rel = _fuse_inputs(seed, scenario, p)
    args = (tr.phase_rad, tr.packet_ok, rel, tr.d0_measured_m, cfg.lambda_m)
    kw = dict(mounts=np.asarray(cfg.device_mounts), lateral=(-cfg.r_m, -cfg.h_m),
              initial_rate=planned_range_rate(cfg) / cfg.sample_hz)
    a = kernels.fuse_ranging(*args, backend="python", **kw)
    b = kernels.fuse_ranging(*args, backend="cython", **kw)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


def test_fuse_noiseless_tracks_center_distance():
    cfg = ScenarioConfig()
    tr = simulate(cfg)
    ok = tr.packet_ok
    fused, per_dev, used = kernels.fuse_ranging(tr.phase_rad, ok, ok, cfg.d0_m, cfg.lambda_m,
                                                mounts=np.asarray(cfg.device_mounts),
                                                lateral=(-cfg.r_m, -cfg.h_m))
    assert np.max(np.abs(fused - tr.trajectory.center_distance)) < 1e-9
    assert np.max(np.abs(per_dev - tr.device_distance_m)) < 1e-9
    # epoch 0 only anchors
    assert used[0] == 0 and (used[1:] == 4).all()


def test_fuse_survives_heavy_drops():
    cfg, tr, rel = _fuse_inputs(11, 1, 0.5)
    fused, _, _ = kernels.fuse_ranging(tr.phase_rad, tr.packet_ok, rel, tr.d0_measured_m, cfg.lambda_m,
                                       mounts=np.asarray(cfg.device_mounts), lateral=(-cfg.r_m, -cfg.h_m),
                                       initial_rate=planned_range_rate(cfg) / cfg.sample_hz)
    assert np.max(np.abs(fused - tr.trajectory.center_distance)) < 0.05


def test_fuse_validates_shapes():
    ph = np.zeros((5, 4))
    ok = np.ones((5, 4), dtype=bool)
    with pytest.raises(ValueError):
        kernels.fuse_ranging(ph, ok[:, :3], ok, 50.0, LAM)
    with pytest.raises(ValueError):
        kernels.fuse_ranging(ph, ok, ok, 50.0, LAM, mounts=np.zeros((3, 3)))
    with pytest.raises(ValueError):
        kernels.fuse_ranging(ph, ok, ok, 50.0, LAM, n_iter=0)


@needs_c
@given(st.integers(0, 2 ** 32 - 1), st.booleans(), st.booleans())
def test_grid_backends_identical(seed, use_rssi, use_dist):
    if not (use_rssi or use_dist):
        use_rssi = True
    rng = np.random.default_rng(seed)
    nt, m = 40, 4
    x = np.sort(rng.uniform(0, 20, nt))
    rssi = rng.uniform(-80, -50, (nt, m))
    dist = rng.uniform(7, 20, (nt, m))
    mask = rng.random((nt, m)) > 0.2
    grid = np.linspace(0, 20, 31)
    h1 = np.column_stack([rng.uniform(1, 4, m), rng.uniform(0.01, 0.1, m), rng.uniform(-0.5, 0.5, m),
                          np.zeros(m), np.zeros(m)])
    h0 = h1 * np.array([10, 10, 1, 0, 0]) + np.column_stack([np.zeros((m, 3)), rssi.mean(0), dist.mean(0)])
    args = (x, rssi, dist, mask, grid, 7.07, -55.0, 7.0, 2.0, h1, h0, use_rssi, use_dist)
    a = kernels.grid_loglik(*args, backend="python")
    b = kernels.grid_loglik(*args, backend="cython")
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-9)
