"""Spatial diversity across devices: MRC SNR, loss and blockage models, fusion."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyBranchSet, NoReliableDevice, ZeroGainBranch


@dataclass(frozen=True)
class ChannelGain:
    h: complex

    def __post_init__(self):
        h = complex(self.h)
        if not (math.isfinite(h.real) and math.isfinite(h.imag)):
            raise ValueError("channel gain must be finite")
        object.__setattr__(self, "h", h)

    @property
    def power(self) -> float:
        return abs(self.h) ** 2


@dataclass(frozen=True)
class DiversityParams:
    n_devices: int = 4
    p_t: float = 1.0
    sigma2: float = 1.0
    gamma: float = 10.0
    p_obs: float = 0.5

    def __post_init__(self):
        if self.n_devices < 1:
            raise ValueError("n_devices must be >= 1")
        if self.sigma2 <= 0 or self.gamma <= 0 or self.p_t < 0:
            raise ValueError("p_t >= 0, sigma2 > 0 and gamma > 0 required")
        if not 0.0 <= self.p_obs <= 1.0:
            raise ValueError("p_obs must lie in [0, 1]")

    @property
    def branch_snr(self) -> float:
        return self.p_t / self.sigma2


@dataclass(frozen=True)
class DeviceReliability:
    device_id: int
    window_drop_rate: float
    window_mean_rssi_dbm: float
    reliable: bool


def mrc_weights(gains: Sequence[ChannelGain]) -> np.ndarray:
    """Per-branch combining weights h*/|h|^2 (NaN for zero-gain branches)."""
    h = np.array([g.h for g in gains], dtype=complex)
    p = np.abs(h) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(p > 0, np.conj(h) / p, np.nan + 0j)


def mrc_combined_snr(gains: Sequence[ChannelGain], per_branch_snr=None,
                     params: DiversityParams | None = None) -> float:
    """Combined SNR, sum |h_i|^2 * SNR_i.

    Without ``per_branch_snr`` every branch gets ``params.p_t / params.sigma2``.
    """
    if len(gains) == 0:
        raise EmptyBranchSet("MRC needs at least one branch")
    if per_branch_snr is None:
        params = params or DiversityParams(n_devices=len(gains))
        per_branch_snr = [params.branch_snr] * len(gains)
    if len(per_branch_snr) != len(gains):
        raise ValueError("gains and per_branch_snr differ in length")
    total = 0.0
    for g, snr in zip(gains, per_branch_snr):
        if snr < 0:
            raise ValueError("branch SNR must be >= 0")
        if g.power == 0.0:
            warnings.warn("zero-gain branch excluded from MRC", ZeroGainBranch, stacklevel=2)
            continue
        total += g.power * snr
    return total


def packet_loss_prob(snr_linear: float, gamma: float) -> float:
    if snr_linear < 0 or gamma <= 0:
        raise ValueError("snr must be >= 0 and gamma > 0")
    return math.exp(-snr_linear / gamma)


def total_obstruction_prob(p_obs: float, n: int) -> float:
    if not 0.0 <= p_obs <= 1.0 or n < 1:
        raise ValueError("p_obs in [0, 1] and n >= 1 required")
    return p_obs ** n


def score_reliability(ok_window, rssi_window, device_ids=None,
                      drop_threshold: float = 0.2, rssi_floor_dbm: float = -85.0) -> list:
    """Classify devices from their last W samples.

    ``ok_window`` and ``rssi_window`` are shaped (W, n_devices); RSSI of
    dropped samples is ignored. A device with no received sample in the
    window has mean RSSI -inf.
    """
    ok = np.asarray(ok_window, dtype=bool)
    rssi = np.asarray(rssi_window, dtype=float)
    if ok.ndim != 2 or ok.shape[0] < 1:
        raise ValueError("window must hold at least one sample per device")
    if device_ids is None:
        device_ids = range(1, ok.shape[1] + 1)
    out = []
    for col, dev in enumerate(device_ids):
        got = ok[:, col]
        drop = 1.0 - got.mean()
        mean_rssi = float(rssi[got, col].mean()) if got.any() else -math.inf
        out.append(DeviceReliability(
            device_id=int(dev),
            window_drop_rate=float(drop),
            window_mean_rssi_dbm=mean_rssi,
            reliable=bool(drop < drop_threshold and mean_rssi > rssi_floor_dbm),
        ))
    return out


def reliability_mask(ok, rssi, window: int = 20, drop_threshold: float = 0.2,
                     rssi_floor_dbm: float = -85.0) -> np.ndarray:
    """``score_reliability`` evaluated at every epoch over a trailing window.

    Row ``j`` uses samples ``max(0, j-window+1) .. j``; same rule as above.
    """
    ok = np.asarray(ok, dtype=bool)
    rssi = np.asarray(rssi, dtype=float)
    n = ok.shape[0]
    okf = ok.astype(float)
    rsum = np.where(ok, rssi, 0.0)
    c_ok = np.vstack([np.zeros((1, ok.shape[1])), np.cumsum(okf, axis=0)])
    c_r = np.vstack([np.zeros((1, ok.shape[1])), np.cumsum(rsum, axis=0)])
    hi = np.arange(1, n + 1)
    lo = np.maximum(0, hi - window)
    got = c_ok[hi] - c_ok[lo]
    length = (hi - lo)[:, None]
    drop = 1.0 - got / length
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_r = np.where(got > 0, (c_r[hi] - c_r[lo]) / np.maximum(got, 1), -np.inf)
    return (drop < drop_threshold) & (mean_r > rssi_floor_dbm)


def fuse_distance(values, reliability: Sequence[DeviceReliability] | None = None) -> float:
    """Mean of the values whose device is marked reliable."""
    values = list(values)
    if reliability is None:
        chosen = values
    else:
        if len(reliability) != len(values):
            raise ValueError("one reliability entry per value required")
        chosen = [v for v, r in zip(values, reliability) if r.reliable]
    if not chosen:
        raise NoReliableDevice("no reliable device to fuse")
    return float(np.mean(chosen))


def simulate_blockage(p_obs: float, n: int, trials: int, rng: np.random.Generator,
                      correlation: float = 0.0) -> float:
    """Empirical frequency of all ``n`` devices blocked at once.

    With ``correlation`` c > 0 each trial is, with probability c, a common
    blockage event shared by every device, which breaks the independence
    behind ``p_obs ** n``.
    """
    blocked = rng.random((trials, n)) < p_obs
    if correlation > 0:
        common = rng.random(trials) < correlation
        shared = rng.random(trials) < p_obs
        blocked[common] = shared[common, None]
    return float(blocked.all(axis=1).mean())


def simulate_rayleigh_loss(mean_snr: float, gamma: float, trials: int,
                           rng: np.random.Generator) -> float:
    """Monte Carlo packet-loss rate for the exponential loss model.

    Each packet's decoding threshold is a Rayleigh-faded margin: a unit
    complex Gaussian draw g gives the required SNR ``gamma * |g|^2``, which
    is exponentially distributed with mean gamma. A packet is lost when the
    link SNR falls short of it, so P(loss) = exp(-SNR/gamma).
    """
    g = (rng.standard_normal(trials) + 1j * rng.standard_normal(trials)) / math.sqrt(2.0)
    return float((gamma * np.abs(g) ** 2 > mean_snr).mean())
