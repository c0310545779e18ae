"""Monte Carlo checks of the diversity models, shared by the CLI and the test-suite."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diversity import (ChannelGain, mrc_combined_snr, packet_loss_prob, simulate_blockage,
                        simulate_rayleigh_loss, total_obstruction_prob)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    observed: float
    target: float
    tolerance: float


def check_blockage(seed: int = 0, p_obs: float = 0.5, n: int = 4, trials: int = 100_000,
                   tol: float = 0.005) -> CheckResult:
    rng = np.random.default_rng([seed, 100])
    emp = simulate_blockage(p_obs, n, trials, rng)
    want = total_obstruction_prob(p_obs, n)
    return CheckResult("all_blocked_rate", abs(emp - want) <= tol, emp, want, tol)


def check_rayleigh_loss(seed: int = 0, gamma: float = 10.0, points: int = 10, trials: int = 100_000,
                        tol: float = 0.05) -> CheckResult:
    """Worst absolute gap between simulated and modelled loss over SNR/gamma in [0, 3]."""
    rng = np.random.default_rng([seed, 101])
    worst = 0.0
    for ratio in np.linspace(0.0, 3.0, points):
        snr = ratio * gamma
        gap = abs(simulate_rayleigh_loss(snr, gamma, trials, rng) - packet_loss_prob(snr, gamma))
        if gap > worst:
            worst = gap
    return CheckResult("rayleigh_loss_max_gap", worst <= tol, worst, 0.0, tol)


def check_mrc_identity(seed: int = 0, sets: int = 1000, tol: float = 1e-12) -> CheckResult:
    """Largest relative deviation of the combiner from the closed-form sum."""
    rng = np.random.default_rng([seed, 102])
    worst = 0.0
    for _ in range(sets):
        n = int(rng.integers(1, 9))
        h = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        snr = rng.uniform(0.0, 100.0, n)
        got = mrc_combined_snr([ChannelGain(complex(v)) for v in h], snr.tolist())
        want = math.fsum((abs(v) ** 2) * s for v, s in zip(h.tolist(), snr.tolist()))
        if want > 0:
            worst = max(worst, abs(got - want) / want)
    return CheckResult("mrc_identity_rel_err", worst <= tol, worst, 0.0, tol)


def check_obstruction_monotone(p_values=(0.1, 0.5, 0.9), n_max: int = 8) -> CheckResult:
    ok = all(total_obstruction_prob(p, n + 1) < total_obstruction_prob(p, n)
             for p in p_values for n in range(1, n_max))
    return CheckResult("obstruction_decreasing_in_n", ok, float(ok), 1.0, 0.0)


def run_checks(seed: int = 0) -> list:
    return [check_blockage(seed), check_rayleigh_loss(seed), check_mrc_identity(seed),
            check_obstruction_monotone()]
