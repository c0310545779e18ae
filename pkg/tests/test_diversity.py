import math
import warnings

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from ultraspot.diversity import (ChannelGain, DeviceReliability, DiversityParams, fuse_distance, mrc_combined_snr,
                                 mrc_weights, packet_loss_prob, reliability_mask, score_reliability,
                                 simulate_blockage, total_obstruction_prob)
from ultraspot.errors import EmptyBranchSet, NoReliableDevice, ZeroGainBranch


def gains(*powers):
    return [ChannelGain(math.sqrt(p)) for p in powers]


def test_mrc_examples():
    assert mrc_combined_snr(gains(1.0), [7.0]) == 7.0
    snr = mrc_combined_snr(gains(1, 1, 1, 1), [10.0] * 4)
    assert snr == 40.0
    assert 10 * math.log10(snr) == pytest.approx(16.02, abs=0.005)
    assert mrc_combined_snr(gains(2.0, 0.5), [3.0, 4.0]) == pytest.approx(8.0)
    with pytest.raises(EmptyBranchSet):
        mrc_combined_snr([], [])


def test_mrc_equal_power_from_params():
    p = DiversityParams(n_devices=3, p_t=2.0, sigma2=0.5)
    assert mrc_combined_snr(gains(1, 2, 3), params=p) == pytest.approx(6 * 4.0)


def test_mrc_zero_gain_branch_warns():
    with pytest.warns(ZeroGainBranch):
        assert mrc_combined_snr([ChannelGain(0j), ChannelGain(1.0)], [5.0, 5.0]) == 5.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        w = mrc_weights([ChannelGain(0j), ChannelGain(2j)])
    assert np.isnan(w[0]) and w[1] == pytest.approx(-0.5j)


branch = st.tuples(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                   st.floats(0, 100))


@given(st.lists(branch, min_size=1, max_size=8))
def test_mrc_superadditive(br):
    assume(all(abs(h) > 1e-6 for h, _ in br))
    total = mrc_combined_snr([ChannelGain(h) for h, _ in br], [s for _, s in br])
    assert total >= max(abs(h) ** 2 * s for h, s in br) - 1e-9


def test_loss_examples():
    assert packet_loss_prob(0.0, 10.0) == 1.0
    assert packet_loss_prob(10.0, 10.0) == pytest.approx(0.36788, abs=1e-5)
    assert packet_loss_prob(40.0, 10.0) == pytest.approx(0.018316, abs=1e-6)


@given(st.floats(0, 100), st.floats(0.01, 50), st.floats(0.1, 50))
def test_loss_decreasing(snr, step, gamma):
    assume(packet_loss_prob(snr + step, gamma) > 0)
    assert packet_loss_prob(snr + step, gamma) < packet_loss_prob(snr, gamma)


def test_obstruction_examples():
    assert total_obstruction_prob(0.5, 4) == 0.0625
    assert total_obstruction_prob(0.3, 1) == 0.3
    assert total_obstruction_prob(0.0, 4) == 0.0


@given(st.floats(0.01, 0.99), st.integers(1, 20))
def test_obstruction_decreasing(p, n):
    assert total_obstruction_prob(p, n + 1) < total_obstruction_prob(p, n)


def test_correlated_blockage_exceeds_bound():
    rng = np.random.default_rng(1)
    emp = simulate_blockage(0.5, 4, 100_000, rng, correlation=0.5)
    assert emp > 0.0625 + 0.1


def test_reliability_examples():
    ok = np.ones((20, 3), dtype=bool)
    ok[:16, 1] = False
    rssi = np.full((20, 3), -60.0)
    rssi[:, 2] = -90.0
    r = score_reliability(ok, rssi)
    assert [x.reliable for x in r] == [True, False, False]
    assert r[1].window_drop_rate == pytest.approx(0.8)


def test_reliability_mask_matches_scorer():
    rng = np.random.default_rng(3)
    ok = rng.random((60, 4)) > 0.3
    rssi = rng.uniform(-95, -50, (60, 4))
    mask = reliability_mask(ok, rssi, window=20)
    for j in range(60):
        lo = max(0, j - 19)
        want = [x.reliable for x in score_reliability(ok[lo:j + 1], rssi[lo:j + 1])]
        assert mask[j].tolist() == want


def test_fuse_examples():
    rel = [DeviceReliability(i, 0.0, -60.0, True) for i in range(4)]
    assert fuse_distance([10.0, 10.2, 9.8, 10.0], rel) == pytest.approx(10.0)
    one = [DeviceReliability(0, 0.0, -60.0, True)] + [DeviceReliability(i, 0.9, -60.0, False) for i in range(1, 4)]
    assert fuse_distance([7.07, 1.0, 2.0, 3.0], one) == 7.07
    with pytest.raises(NoReliableDevice):
        fuse_distance([1.0], [DeviceReliability(0, 1.0, -99.0, False)])


@given(st.lists(st.tuples(st.floats(0, 100), st.booleans()), min_size=1, max_size=8))
def test_fuse_within_bounds(items):
    assume(any(r for _, r in items))
    vals = [v for v, _ in items]
    rel = [DeviceReliability(i, 0.0, -60.0, r) for i, (_, r) in enumerate(items)]
    chosen = [v for v, r in items if r]
    out = fuse_distance(vals, rel)
    assert min(chosen) - 1e-9 <= out <= max(chosen) + 1e-9
