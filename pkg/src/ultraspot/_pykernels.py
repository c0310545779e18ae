"""Pure-Python/numpy implementations of the compiled kernels.

Same signatures and arithmetic order as ``_ckernels.pyx``.
"""

import math

import numpy as np

from .phase import wrap_phase

LOG_2PI = math.log(2.0 * math.pi)
TWO_PI = 2.0 * math.pi


def unwrap_series(phase, d0, lambda_m):
    phase = np.ascontiguousarray(phase, dtype=np.float64)
    n_traj, n = phase.shape
    half = lambda_m / 2.0
    out = np.empty((n_traj, n))
    for i in range(n_traj):
        if n == 0:
            continue
        row = phase[i].tolist()
        base = float(d0[i])
        phi0 = phi_u = row[0]
        res = [base]
        for j in range(1, n):
            phi_u = phi_u + wrap_phase(row[j] - row[j - 1])
            res.append(base + (-half * ((phi_u - phi0) / math.pi)))
        out[i] = res
    return out


def _lever(f, s, mx, my, mz, ly, lz, lat2):
    """Device range minus center range when the center range is ``f``."""
    q = f * f - lat2
    p = s * math.sqrt(q) if q > 0.0 else 0.0
    return math.sqrt((p - mx) * (p - mx) + (ly - my) * (ly - my) + (lz - mz) * (lz - mz)) \
        - math.sqrt(p * p + lat2)


def _fuse_epoch(row, kind, max_kind, relj, mnt, start, sgn, ly, lz, lat2, n_iter):
    """Mean lever-corrected range over devices with 0 < kind <= max_kind; (estimate, n_used)."""
    est = start
    used = 0
    m = len(row)
    for _ in range(n_iter):
        acc = acc_rel = 0.0
        cnt = cnt_rel = 0
        for i in range(m):
            if kind[i] == 0 or kind[i] > max_kind:
                continue
            mx, my, mz = mnt[i]
            c = row[i] - _lever(est, sgn, mx, my, mz, ly, lz, lat2)
            acc = acc + c
            cnt += 1
            if relj[i]:
                acc_rel = acc_rel + c
                cnt_rel += 1
        if cnt_rel > 0:
            est = acc_rel / cnt_rel
            used = cnt_rel
        elif cnt > 0:
            est = acc / cnt
            used = cnt
        else:
            break
    return est, used


def fuse_ranging(phase, ok, reliable, d0, lambda_m, mounts, lateral, hysteresis, n_iter, rate0):
    phase = np.ascontiguousarray(phase, dtype=np.float64)
    n, m = phase.shape
    half = lambda_m / 2.0
    ly, lz = float(lateral[0]), float(lateral[1])
    lat2 = ly * ly + lz * lz
    mnt = np.asarray(mounts, dtype=float).tolist()
    fused = float(d0)
    rate = float(rate0)
    fmin = fused
    past = False

    fused_out = np.empty(n)
    dev_out = np.full((n, m), np.nan)
    used_out = np.zeros(n, dtype=np.int64)

    has_ref = [False] * m
    seen = [False] * m
    prev_phase = [0.0] * m
    phi0 = [0.0] * m
    phiu = [0.0] * m
    dref = [0.0] * m
    ph_rows = phase.tolist()
    ok_rows = np.asarray(ok, dtype=bool).tolist()
    rel_rows = np.asarray(reliable, dtype=bool).tolist()

    for j in range(n):
        ph, okj, relj = ph_rows[j], ok_rows[j], rel_rows[j]
        pred = fused + rate if j > 0 else fused
        sgn = -1.0 if past else 1.0
        row = [math.nan] * m
        # kind: 0 no packet, 1 continuous, 2 back after a gap, 3 never anchored
        kind = [0] * m
        n_bridge = 0
        for i in range(m):
            if not okj[i]:
                seen[i] = False
            elif has_ref[i] and seen[i]:
                phiu[i] = phiu[i] + wrap_phase(ph[i] - prev_phase[i])
                row[i] = dref[i] + (-half * ((phiu[i] - phi0[i]) / math.pi))
                kind[i] = 1
            elif has_ref[i]:
                kind[i] = 2
                n_bridge += 1
            else:
                kind[i] = 3

        est, used = _fuse_epoch(row, kind, 1, relj, mnt, pred, sgn, ly, lz, lat2, n_iter)
        ref = est if used > 0 else pred
        if n_bridge > 0:
            for i in range(m):
                if kind[i] != 2:
                    continue
                mx, my, mz = mnt[i]
                # cycle count closest to the consensus range
                target = ref + _lever(ref, sgn, mx, my, mz, ly, lz, lat2)
                base = dref[i] + (-half * ((ph[i] - phi0[i]) / math.pi))
                k = math.floor((base - target) / lambda_m + 0.5)
                phiu[i] = ph[i] + TWO_PI * k
                row[i] = dref[i] + (-half * ((phiu[i] - phi0[i]) / math.pi))
            est, used = _fuse_epoch(row, kind, 2, relj, mnt, ref, sgn, ly, lz, lat2, n_iter)
        fin = est if used > 0 else pred
        # a first packet waits for an informed epoch unless nothing is anchored yet
        can_anchor = used > 0 or j == 0 or not any(has_ref)
        for i in range(m):
            if kind[i] == 3 and not can_anchor:
                kind[i] = 0
            if kind[i] == 3:
                mx, my, mz = mnt[i]
                dref[i] = fin + _lever(fin, sgn, mx, my, mz, ly, lz, lat2)
                phi0[i] = ph[i]
                phiu[i] = ph[i]
                row[i] = dref[i]
                has_ref[i] = True
            if kind[i] != 0:
                seen[i] = True
                prev_phase[i] = ph[i]

        if used > 0 and j > 0:
            rate = fin - fused
        fused = fin
        used_out[j] = used
        fused_out[j] = fused
        if fused < fmin:
            fmin = fused
        elif not past and fused > fmin + hysteresis:
            past = True
        dev_out[j] = row
    return fused_out, dev_out, used_out


def _log_norm(sr, sd, rho, use_rssi, use_dist):
    if use_rssi and use_dist:
        return -LOG_2PI - np.log(sr) - np.log(sd) - 0.5 * np.log(1.0 - rho * rho)
    if use_rssi:
        return -0.5 * LOG_2PI - np.log(sr)
    return -0.5 * LOG_2PI - np.log(sd)


def _quad(zr, zd, rho, use_rssi, use_dist):
    if use_rssi and use_dist:
        return -(zr * zr - 2.0 * rho * zr * zd + zd * zd) / (2.0 * (1.0 - rho * rho))
    if use_rssi:
        return -0.5 * zr * zr
    return -0.5 * zd * zd


def grid_loglik(x_b, rssi, dist, mask, grid, a_m, rssi_ref, d_ref, exponent,
                h1, h0, use_rssi, use_dist):
    x_b = np.asarray(x_b, dtype=float)
    grid = np.asarray(grid, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    m = rssi.shape[1]
    out = np.zeros((grid.size, m))
    dx = x_b[None, :] - grid[:, None]
    dexp = np.sqrt(a_m * a_m + dx * dx)
    rexp = rssi_ref - 10.0 * exponent * np.log10(dexp / d_ref)
    for k in range(m):
        sel = mask[:, k]
        if not sel.any():
            continue
        r = rssi[sel, k]
        d = dist[sel, k]
        s1r, s1d, rho1 = h1[k, 0], h1[k, 1], h1[k, 2]
        s0r, s0d, rho0, mu0r, mu0d = h0[k]
        ll1 = _quad((r[None, :] - rexp[:, sel]) / s1r, (d[None, :] - dexp[:, sel]) / s1d,
                    rho1, use_rssi, use_dist) + _log_norm(s1r, s1d, rho1, use_rssi, use_dist)
        ll0 = _quad((r - mu0r) / s0r, (d - mu0d) / s0d, rho0, use_rssi, use_dist) \
            + _log_norm(s0r, s0d, rho0, use_rssi, use_dist)
        out[:, k] = ll1.sum(axis=1) - ll0.sum()
    return out
