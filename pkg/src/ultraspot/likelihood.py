"""Likelihood-ratio spot detection from RSSI and phase ranging, plus a grid scan."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from . import kernels
from .errors import ArityMismatch, EmptyWindow, SingularCovariance

CASES = ("RssiSingle", "RssiMulti", "JointSingle", "JointMulti")
LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class JointObservation:
    device_id: int
    rssi_dbm: float
    distance_m: float

    def __post_init__(self):
        if not (math.isfinite(self.rssi_dbm) and math.isfinite(self.distance_m)):
            raise ValueError("observation values must be finite")


def _cholesky(cov) -> np.ndarray:
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if cov.shape[0] != cov.shape[1] or not np.allclose(cov, cov.T, rtol=0, atol=1e-12):
        raise SingularCovariance("covariance must be square and symmetric")
    try:
        return linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularCovariance(f"covariance not positive definite: {exc}") from None


def gaussian_density(x, mean, cov) -> float:
    """Multivariate normal log-density."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    if x.shape != mean.shape:
        raise ValueError("x and mean differ in dimension")
    chol = _cholesky(cov)
    if chol.shape[0] != x.size:
        raise ValueError("covariance dimension does not match x")
    z = linalg.solve_triangular(chol, x - mean, lower=True)
    return float(-0.5 * (x.size * LOG_2PI + z @ z) - np.log(np.diag(chol)).sum())


@dataclass(frozen=True)
class GaussianModel:
    """Joint (RSSI, distance) Gaussian; the RSSI marginal serves RSSI-only cases."""

    mean: tuple
    cov: tuple

    def __post_init__(self):
        mean = tuple(float(v) for v in self.mean)
        cov = tuple(tuple(float(v) for v in row) for row in self.cov)
        if len(mean) != 2 or len(cov) != 2 or any(len(r) != 2 for r in cov):
            raise ValueError("joint model needs a 2-vector mean and 2x2 covariance")
        _cholesky(cov)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @classmethod
    def diagonal(cls, mean_rssi: float, mean_dist: float, sigma_rssi: float, sigma_dist: float,
                 rho: float = 0.0) -> "GaussianModel":
        c = rho * sigma_rssi * sigma_dist
        return cls((mean_rssi, mean_dist), ((sigma_rssi ** 2, c), (c, sigma_dist ** 2)))

    def log_pdf(self, obs: JointObservation, joint: bool) -> float:
        if joint:
            return gaussian_density((obs.rssi_dbm, obs.distance_m), self.mean, self.cov)
        return gaussian_density((obs.rssi_dbm,), (self.mean[0],), ((self.cov[0][0],),))


@dataclass(frozen=True)
class HypothesisModel:
    """Per-device H1 (spot here) and H0 (no spot) models, keyed by device id."""

    h1: dict
    h0: dict

    def __post_init__(self):
        if set(self.h1) != set(self.h0):
            raise ValueError("H1 and H0 must cover the same devices")


@dataclass(frozen=True)
class LikelihoodConfig:
    eta: float = 1.0
    grid_step_m: float = 0.1
    log_domain: bool = True

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be > 0")
        if not self.grid_step_m > 0:
            raise ValueError("grid step must be > 0")
        if not self.log_domain:
            raise ValueError("evaluation is always in the log domain")


@dataclass(frozen=True)
class LikelihoodResult:
    case: str
    log_lambda: float
    decision: bool
    per_device: tuple


def likelihood_ratio(case: str, obs: Sequence[JointObservation], model: HypothesisModel,
                     eta: float = 1.0, n_devices: int = 4) -> LikelihoodResult:
    """Sum of per-device log(p(x|H1)/p(x|H0)); decides H1 iff it exceeds log(eta)."""
    if case not in CASES:
        raise ValueError(f"unknown case {case!r}; expected one of {CASES}")
    if not eta > 0:
        raise ValueError("eta must be > 0")
    want = 1 if case.endswith("Single") else n_devices
    if len(obs) != want:
        raise ArityMismatch(f"{case} takes {want} observation(s), got {len(obs)}")
    if len({o.device_id for o in obs}) != len(obs):
        raise ArityMismatch("one observation per device expected")
    joint = case.startswith("Joint")
    parts = []
    for o in obs:
        if o.device_id not in model.h1:
            raise ArityMismatch(f"no model for device {o.device_id}")
        parts.append(model.h1[o.device_id].log_pdf(o, joint) - model.h0[o.device_id].log_pdf(o, joint))
    total = math.fsum(parts)
    return LikelihoodResult(case, total, total > math.log(eta), tuple(parts))


@dataclass
class ScanWindow:
    """Samples for a grid scan: B's along-track position and per-device data.

    ``distance_m`` holds center-referenced ranges (device range minus its
    lever arm); ``mask`` marks received samples.
    """

    x_b_m: np.ndarray
    rssi_dbm: np.ndarray
    distance_m: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        self.x_b_m = np.asarray(self.x_b_m, dtype=float)
        self.rssi_dbm = np.atleast_2d(np.asarray(self.rssi_dbm, dtype=float))
        self.distance_m = np.atleast_2d(np.asarray(self.distance_m, dtype=float))
        self.mask = np.atleast_2d(np.asarray(self.mask, dtype=bool))
        n = self.x_b_m.shape[0]
        if not (self.rssi_dbm.shape == self.distance_m.shape == self.mask.shape) or self.rssi_dbm.shape[0] != n:
            raise ValueError("window arrays disagree in shape")
        bad = self.mask & ~(np.isfinite(self.rssi_dbm) & np.isfinite(self.distance_m))
        if bad.any():
            raise ValueError("masked-in samples must be finite")

    @property
    def n_devices(self) -> int:
        return self.rssi_dbm.shape[1]


@dataclass(frozen=True)
class ScanModel:
    """Per-device noise levels for the scan; H1 means come from geometry.

    H0 uses each device's window-mean RSSI and range with standard deviations
    scaled by ``h0_inflation`` (so variances by its square).
    """

    a_m: float
    sigma_rssi_db: tuple
    sigma_dist_m: tuple
    rho: float = 0.0
    rssi_ref_dbm: float = -55.0
    rssi_ref_distance_m: float = 7.0
    path_loss_exponent: float = 2.0
    h0_inflation: float = 10.0

    def __post_init__(self):
        if len(self.sigma_rssi_db) != len(self.sigma_dist_m):
            raise ValueError("one RSSI and one range sigma per device")
        if min(self.sigma_rssi_db) <= 0 or min(self.sigma_dist_m) <= 0:
            raise SingularCovariance("sigmas must be > 0")
        if not -1.0 < self.rho < 1.0:
            raise SingularCovariance("|rho| must be < 1")

    def tables(self, window: ScanWindow):
        m = window.n_devices
        if len(self.sigma_rssi_db) != m:
            raise ArityMismatch(f"model has {len(self.sigma_rssi_db)} devices, window has {m}")
        h1 = np.zeros((m, 5))
        h0 = np.zeros((m, 5))
        k0 = self.h0_inflation
        for k in range(m):
            sel = window.mask[:, k]
            mr = float(window.rssi_dbm[sel, k].mean()) if sel.any() else 0.0
            md = float(window.distance_m[sel, k].mean()) if sel.any() else 0.0
            h1[k] = (self.sigma_rssi_db[k], self.sigma_dist_m[k], self.rho, 0.0, 0.0)
            h0[k] = (k0 * self.sigma_rssi_db[k], k0 * self.sigma_dist_m[k], self.rho, mr, md)
        return h1, h0


def calibrate_scan_model(window: ScanWindow, spot_x_m: float, a_m: float,
                         min_sigma_rssi_db: float = 1.0, min_sigma_dist_m: float = 0.01,
                         **kwargs) -> ScanModel:
    """Per-device residual spread against a calibration pass with a known spot."""
    dexp = np.sqrt(a_m ** 2 + (window.x_b_m - spot_x_m) ** 2)
    ref = kwargs.get("rssi_ref_dbm", -55.0)
    dref = kwargs.get("rssi_ref_distance_m", 7.0)
    n = kwargs.get("path_loss_exponent", 2.0)
    rexp = ref - 10.0 * n * np.log10(dexp / dref)
    sr, sd = [], []
    for k in range(window.n_devices):
        sel = window.mask[:, k]
        if sel.sum() < 2:
            raise EmptyWindow(f"device {k + 1} has fewer than two samples in the calibration window")
        sr.append(max(min_sigma_rssi_db, float(np.std(window.rssi_dbm[sel, k] - rexp[sel]))))
        sd.append(max(min_sigma_dist_m, float(np.std(window.distance_m[sel, k] - dexp[sel]))))
    return ScanModel(a_m, tuple(sr), tuple(sd), **kwargs)


@dataclass
class ScanResult:
    grid_m: np.ndarray
    log_lambda: np.ndarray  # (n_grid, 4) in CASES order
    estimates_m: dict
    single_device: int

    @property
    def estimate_m(self) -> float:
        return self.estimates_m["JointMulti"]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["position_m"] + [f"logLambda_case{i}" for i in range(1, 5)])
        for x, row in zip(self.grid_m.tolist(), self.log_lambda.tolist()):
            w.writerow([f"{x:.9g}"] + [f"{v:.9g}" for v in row])
        return buf.getvalue()


def _argmax_low(values: np.ndarray) -> int:
    """First index of the maximum, so ties go to the smaller coordinate."""
    return int(np.argmax(values))


def grid_scan(window: ScanWindow, model: ScanModel, cfg: LikelihoodConfig = LikelihoodConfig(),
              grid: Optional[np.ndarray] = None, single_device: int = 1,
              backend: Optional[str] = None) -> ScanResult:
    """Evaluate every case at each hypothesized along-track spot position.

    The default grid spans the flown segment at ``cfg.grid_step_m``.
    """
    if window.x_b_m.size == 0 or not window.mask.any():
        raise EmptyWindow("scan window has no received samples")
    if grid is None:
        lo, hi = float(window.x_b_m.min()), float(window.x_b_m.max())
        grid = lo + cfg.grid_step_m * np.arange(int(math.floor((hi - lo) / cfg.grid_step_m + 1e-9)) + 1)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise EmptyWindow("empty hypothesis grid")
    if not 1 <= single_device <= window.n_devices:
        raise ArityMismatch(f"device {single_device} not in window")
    h1, h0 = model.tables(window)
    common = (window.x_b_m, window.rssi_dbm, window.distance_m, window.mask, grid, model.a_m,
              model.rssi_ref_dbm, model.rssi_ref_distance_m, model.path_loss_exponent, h1, h0)
    rssi_only = kernels.grid_loglik(*common, use_rssi=True, use_dist=False, backend=backend)
    joint = kernels.grid_loglik(*common, use_rssi=True, use_dist=True, backend=backend)
    k = single_device - 1
    table = np.column_stack([rssi_only[:, k], rssi_only.sum(axis=1), joint[:, k], joint.sum(axis=1)])
    est = {case: float(grid[_argmax_low(table[:, i])]) for i, case in enumerate(CASES)}
    return ScanResult(grid, table, est, single_device)
