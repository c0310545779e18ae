"""Time the compiled kernels against the pure-Python fallback.

    python3 bench/bench_kernels.py [--repeat N]

Each kernel runs on the same inputs under both backends; the table shows the
best-of-N wall time and the speed-up. Outputs are checked for agreement first.
"""

import argparse
import math
import timeit

import numpy as np

from ultraspot import kernels
from ultraspot.diversity import reliability_mask
from ultraspot.sim import DropModel, ScenarioConfig, planned_range_rate, simulate


def unwrap_case():
    rng = np.random.default_rng(0)
    lam = 0.325
    d = 30.0 + np.cumsum(rng.uniform(-lam / 4, lam / 4, (200, 1000)), axis=1)
    ph = -2 * math.pi * d / lam
    ph = ph - 2 * math.pi * np.ceil((ph - math.pi) / (2 * math.pi))
    return "unwrap_series 200x1000", lambda b: kernels.unwrap_series(ph, d[:, 0], lam, backend=b)


def fuse_case():
    cfg = ScenarioConfig(phase_noise_std_rad=0.05, rssi_noise_std_db=3.0, drop_model=DropModel("iid", 0.2))
    tr = simulate(cfg)
    rel = reliability_mask(tr.packet_ok, tr.rssi_dbm)
    kw = dict(mounts=np.asarray(cfg.device_mounts), lateral=(-cfg.r_m, -cfg.h_m),
              initial_rate=planned_range_rate(cfg) / cfg.sample_hz)

    def run(b):
        return kernels.fuse_ranging(tr.phase_rad, tr.packet_ok, rel, tr.d0_measured_m, cfg.lambda_m,
                                    backend=b, **kw)

    return f"fuse_ranging {tr.phase_rad.shape[0]}x{tr.phase_rad.shape[1]}", run


def grid_case():
    rng = np.random.default_rng(1)
    nt, m = 400, 4
    x = np.linspace(0, 40, nt)
    rssi = rng.uniform(-80, -50, (nt, m))
    dist = rng.uniform(7, 20, (nt, m))
    mask = rng.random((nt, m)) > 0.2
    grid = np.arange(0, 40, 0.1)
    h1 = np.tile([3.0, 0.05, 0.0, 0.0, 0.0], (m, 1))
    h0 = np.column_stack([np.full(m, 30.0), np.full(m, 0.5), np.zeros(m), rssi.mean(0), dist.mean(0)])

    def run(b):
        return kernels.grid_loglik(x, rssi, dist, mask, grid, 7.07, -55.0, 7.0, 2.0, h1, h0, backend=b)

    return f"grid_loglik {len(grid)} cells x {nt} samples", run


def agree(a, b) -> bool:
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    return all(np.allclose(x, y, rtol=1e-12, atol=1e-9, equal_nan=True) for x, y in zip(a, b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if "cython" not in kernels.BACKENDS:
        raise SystemExit("compiled kernels not built; run: python3 setup.py build_ext --inplace")

    print(f"{'kernel':<36}{'python s':>12}{'cython s':>12}{'speed-up':>10}")
    for name, run in (unwrap_case(), fuse_case(), grid_case()):
        if not agree(run("python"), run("cython")):
            raise SystemExit(f"{name}: backends disagree")
        t_py = min(timeit.repeat(lambda: run("python"), number=1, repeat=args.repeat))
        t_c = min(timeit.repeat(lambda: run("cython"), number=1, repeat=args.repeat))
        print(f"{name:<36}{t_py:>12.4f}{t_c:>12.4f}{t_py / t_c:>9.0f}x")


if __name__ == "__main__":
    main()
