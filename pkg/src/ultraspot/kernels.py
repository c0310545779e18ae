"""Backend selection for the inner-loop kernels.

The compiled extension is used when it imports; otherwise, or when
``ULTRASPOT_PURE_PYTHON=1`` is set, the pure-Python versions are used.
``get_backend(name)`` returns a specific backend for comparisons.
"""

import logging
import os
from types import ModuleType

import numpy as np

from . import _pykernels

log = logging.getLogger(__name__)

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels

if _ckernels is not None and os.environ.get("ULTRASPOT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    BACKEND = "cython"
else:
    BACKEND = "python"
    log.debug("using pure-Python kernels")

_impl: ModuleType = BACKENDS[BACKEND]


def get_backend(name: str) -> ModuleType:
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None


def unwrap_series(phase, d0, lambda_m, backend=None):
    """Unwrap rows of wrapped phase into distances, each row anchored at ``d0[i]``."""
    impl = get_backend(backend) if backend else _impl
    phase = np.ascontiguousarray(np.atleast_2d(phase), dtype=np.float64)
    d0 = np.array(np.broadcast_to(np.asarray(d0, dtype=np.float64), phase.shape[:1]))
    return impl.unwrap_series(phase, d0, float(lambda_m))


def fuse_ranging(phase, ok, reliable, d0, lambda_m, mounts=None, lateral=(0.0, 0.0),
                 hysteresis=0.01, n_iter=3, initial_rate=0.0, backend=None):
    """Multi-device ranging fused into one center-to-center distance.

    Each device keeps one absolute phase track. Per epoch the devices that
    were also received last epoch are fused first; devices back after a gap
    then take the cycle count that lands nearest that estimate (which must
    be good to lambda/2) and join a second fusion; devices seen for the first
    time are anchored at the result. With no usable device the last rate is
    extrapolated; before any rate is measured ``initial_rate`` (meters per
    epoch, e.g. from the flight plan) stands in.

    The lever-arm term of a device at body offset ``mount`` is
    ``|(p, ly, lz) - mount| - |(p, ly, lz)|``, with ``(ly, lz) = lateral``
    the fixed cross-track part of the line of sight and ``p`` the along-track
    part implied by the fused range; ``p`` flips sign once the fused range
    has risen ``hysteresis`` above its running minimum. A fusion is the mean
    of range minus lever arm over reliable devices (else all eligible ones),
    iterated ``n_iter`` times.

    Returns ``(fused, per_device, n_used)``; ``per_device`` holds each
    device's own range estimate, NaN where it had no packet.
    """
    impl = get_backend(backend) if backend else _impl
    phase = np.ascontiguousarray(phase, dtype=np.float64)
    ok = np.ascontiguousarray(ok, dtype=np.uint8)
    reliable = np.ascontiguousarray(reliable, dtype=np.uint8)
    if not (phase.shape == ok.shape == reliable.shape):
        raise ValueError("phase, ok and reliable must share a shape")
    if mounts is None:
        mounts = np.zeros((phase.shape[1], 3))
    mounts = np.ascontiguousarray(mounts, dtype=np.float64)
    if mounts.shape != (phase.shape[1], 3):
        raise ValueError("one 3-D mount offset per device required")
    lateral = np.ascontiguousarray(lateral, dtype=np.float64)
    if lateral.shape != (2,):
        raise ValueError("lateral must hold (y, z)")
    if n_iter < 1:
        raise ValueError("n_iter must be >= 1")
    return impl.fuse_ranging(phase, ok, reliable, float(d0), float(lambda_m), mounts, lateral,
                             float(hysteresis), int(n_iter), float(initial_rate))


def grid_loglik(x_b, rssi, dist, mask, grid, a_m, rssi_ref, d_ref, exponent,
                h1, h0, use_rssi=True, use_dist=True, backend=None):
    impl = get_backend(backend) if backend else _impl
    c = np.ascontiguousarray
    return impl.grid_loglik(
        c(x_b, dtype=np.float64), c(rssi, dtype=np.float64), c(dist, dtype=np.float64),
        c(mask, dtype=np.uint8), c(grid, dtype=np.float64),
        float(a_m), float(rssi_ref), float(d_ref), float(exponent),
        c(h1, dtype=np.float64), c(h0, dtype=np.float64), bool(use_rssi), bool(use_dist),
    )
