# cython: language_level=3
"""Compiled versions of the ranging and likelihood-grid inner loops.

Must stay numerically in step with ``_pykernels``; the test-suite compares
the two backends sample by sample.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport ceil, floor, sqrt, log, log10, M_PI

cnp.import_array()

cdef double TWO_PI = 2.0 * M_PI
cdef double LOG_2PI = log(2.0 * M_PI)


cdef inline double wrap_phase(double x) nogil:
    return x - TWO_PI * ceil((x - M_PI) / TWO_PI)


def unwrap_series(const double[:, ::1] phase, const double[::1] d0, double lambda_m):
    cdef Py_ssize_t n_traj = phase.shape[0], n = phase.shape[1]
    cdef Py_ssize_t i, j
    cdef double phi0, phi_u, half = lambda_m / 2.0
    out = np.empty((n_traj, n), dtype=np.float64)
    cdef double[:, ::1] d = out
    with nogil:
        for i in range(n_traj):
            if n == 0:
                continue
            phi0 = phase[i, 0]
            phi_u = phi0
            d[i, 0] = d0[i]
            for j in range(1, n):
                phi_u = phi_u + wrap_phase(phase[i, j] - phase[i, j - 1])
                d[i, j] = d0[i] + (-half * ((phi_u - phi0) / M_PI))
    return out


cdef inline double _lever(double f, double s, double mx, double my, double mz,
                          double ly, double lz, double lat2) nogil:
    cdef double q = f * f - lat2
    cdef double p = s * sqrt(q) if q > 0.0 else 0.0
    return sqrt((p - mx) * (p - mx) + (ly - my) * (ly - my) + (lz - mz) * (lz - mz)) \
        - sqrt(p * p + lat2)


cdef double _fuse_epoch(Py_ssize_t j, const cnp.uint8_t[::1] kind, int max_kind,
                        const double[:, ::1] dd, const cnp.uint8_t[:, ::1] reliable,
                        const double[:, ::1] mounts, double start, double sgn,
                        double ly, double lz, double lat2, int n_iter, Py_ssize_t* used) nogil:
    cdef Py_ssize_t i, it, cnt, cnt_rel, m = kind.shape[0]
    cdef double est = start, acc, acc_rel, c
    used[0] = 0
    for it in range(n_iter):
        acc = 0.0
        acc_rel = 0.0
        cnt = 0
        cnt_rel = 0
        for i in range(m):
            if kind[i] == 0 or kind[i] > max_kind:
                continue
            c = dd[j, i] - _lever(est, sgn, mounts[i, 0], mounts[i, 1], mounts[i, 2], ly, lz, lat2)
            acc = acc + c
            cnt = cnt + 1
            if reliable[j, i]:
                acc_rel = acc_rel + c
                cnt_rel = cnt_rel + 1
        if cnt_rel > 0:
            est = acc_rel / cnt_rel
            used[0] = cnt_rel
        elif cnt > 0:
            est = acc / cnt
            used[0] = cnt
        else:
            break
    return est


def fuse_ranging(const double[:, ::1] phase, const cnp.uint8_t[:, ::1] ok,
                 const cnp.uint8_t[:, ::1] reliable, double d0, double lambda_m,
                 const double[:, ::1] mounts, const double[::1] lateral, double hysteresis,
                 int n_iter, double rate0):
    cdef Py_ssize_t n = phase.shape[0], m = phase.shape[1]
    cdef Py_ssize_t i, j, used = 0, n_bridge
    cdef double half = lambda_m / 2.0
    cdef double ly = lateral[0], lz = lateral[1]
    cdef double lat2 = ly * ly + lz * lz
    cdef double fused = d0, rate = rate0, fmin = d0, pred, sgn, est, ref, fin, target, base, k
    cdef bint past = 0, can_anchor

    fused_out = np.empty(n, dtype=np.float64)
    dev_out = np.full((n, m), np.nan, dtype=np.float64)
    used_out = np.zeros(n, dtype=np.int64)
    cdef double[::1] f = fused_out
    cdef double[:, ::1] dd = dev_out
    cdef cnp.int64_t[::1] used_v = used_out

    has_ref_a = np.zeros(m, dtype=np.uint8)
    seen_a = np.zeros(m, dtype=np.uint8)
    kind_a = np.zeros(m, dtype=np.uint8)
    prev_phase_a = np.zeros(m)
    phi0_a = np.zeros(m)
    phiu_a = np.zeros(m)
    dref_a = np.zeros(m)
    cdef cnp.uint8_t[::1] has_ref = has_ref_a, seen = seen_a, kind = kind_a
    cdef double[::1] prev_phase = prev_phase_a, phi0 = phi0_a, phiu = phiu_a, dref = dref_a

    with nogil:
        for j in range(n):
            pred = fused + rate if j > 0 else fused
            sgn = -1.0 if past else 1.0
            # kind: 0 no packet, 1 continuous, 2 back after a gap, 3 never anchored
            n_bridge = 0
            for i in range(m):
                kind[i] = 0
                if not ok[j, i]:
                    seen[i] = 0
                elif has_ref[i] and seen[i]:
                    phiu[i] = phiu[i] + wrap_phase(phase[j, i] - prev_phase[i])
                    dd[j, i] = dref[i] + (-half * ((phiu[i] - phi0[i]) / M_PI))
                    kind[i] = 1
                elif has_ref[i]:
                    kind[i] = 2
                    n_bridge = n_bridge + 1
                else:
                    kind[i] = 3

            est = _fuse_epoch(j, kind, 1, dd, reliable, mounts, pred, sgn, ly, lz, lat2, n_iter, &used)
            ref = est if used > 0 else pred
            if n_bridge > 0:
                for i in range(m):
                    if kind[i] != 2:
                        continue
                    target = ref + _lever(ref, sgn, mounts[i, 0], mounts[i, 1], mounts[i, 2], ly, lz, lat2)
                    base = dref[i] + (-half * ((phase[j, i] - phi0[i]) / M_PI))
                    k = floor((base - target) / lambda_m + 0.5)
                    phiu[i] = phase[j, i] + TWO_PI * k
                    dd[j, i] = dref[i] + (-half * ((phiu[i] - phi0[i]) / M_PI))
                est = _fuse_epoch(j, kind, 2, dd, reliable, mounts, ref, sgn, ly, lz, lat2, n_iter, &used)
            fin = est if used > 0 else pred
            # a first packet waits for an informed epoch unless nothing is anchored yet
            can_anchor = used > 0 or j == 0
            if not can_anchor:
                can_anchor = 1
                for i in range(m):
                    if has_ref[i]:
                        can_anchor = 0
            for i in range(m):
                if kind[i] == 3 and not can_anchor:
                    kind[i] = 0
                if kind[i] == 3:
                    dref[i] = fin + _lever(fin, sgn, mounts[i, 0], mounts[i, 1], mounts[i, 2], ly, lz, lat2)
                    phi0[i] = phase[j, i]
                    phiu[i] = phase[j, i]
                    dd[j, i] = dref[i]
                    has_ref[i] = 1
                if kind[i] != 0:
                    seen[i] = 1
                    prev_phase[i] = phase[j, i]

            if used > 0 and j > 0:
                rate = fin - fused
            fused = fin
            used_v[j] = used
            f[j] = fused
            if fused < fmin:
                fmin = fused
            elif not past and fused > fmin + hysteresis:
                past = 1
    return fused_out, dev_out, used_out


def grid_loglik(const double[::1] x_b, const double[:, ::1] rssi, const double[:, ::1] dist,
                const cnp.uint8_t[:, ::1] mask, const double[::1] grid,
                double a_m, double rssi_ref, double d_ref, double exponent,
                const double[:, ::1] h1, const double[:, ::1] h0,
                bint use_rssi, bint use_dist):
    """Per-device log-likelihood-ratio sums for every grid hypothesis.

    ``h1``/``h0`` rows are per device: (sigma_r, sigma_d, rho, mean_r, mean_d);
    the H1 means are replaced by the path-loss/geometry prediction.
    """
    cdef Py_ssize_t ng = grid.shape[0], nt = x_b.shape[0], m = rssi.shape[1]
    cdef Py_ssize_t g, t, k
    cdef double dx, dexp, rexp, zr, zd, s, a2 = a_m * a_m
    cdef double slope = 10.0 * exponent
    out = np.zeros((ng, m), dtype=np.float64)
    cdef double[:, ::1] o = out

    norm1_a = np.zeros(m)
    norm0_a = np.zeros(m)
    cdef double[::1] norm1 = norm1_a, norm0 = norm0_a
    for k in range(m):
        norm1[k] = _log_norm(h1[k, 0], h1[k, 1], h1[k, 2], use_rssi, use_dist)
        norm0[k] = _log_norm(h0[k, 0], h0[k, 1], h0[k, 2], use_rssi, use_dist)

    with nogil:
        for g in range(ng):
            for t in range(nt):
                dx = x_b[t] - grid[g]
                dexp = sqrt(a2 + dx * dx)
                rexp = rssi_ref - slope * log10(dexp / d_ref)
                for k in range(m):
                    if not mask[t, k]:
                        continue
                    s = 0.0
                    # H1
                    zr = (rssi[t, k] - rexp) / h1[k, 0]
                    zd = (dist[t, k] - dexp) / h1[k, 1]
                    s = s + _quad(zr, zd, h1[k, 2], use_rssi, use_dist) + norm1[k]
                    # H0
                    zr = (rssi[t, k] - h0[k, 3]) / h0[k, 0]
                    zd = (dist[t, k] - h0[k, 4]) / h0[k, 1]
                    s = s - _quad(zr, zd, h0[k, 2], use_rssi, use_dist) - norm0[k]
                    o[g, k] = o[g, k] + s
    return out


cdef inline double _quad(double zr, double zd, double rho, bint use_rssi, bint use_dist) nogil:
    if use_rssi and use_dist:
        return -(zr * zr - 2.0 * rho * zr * zd + zd * zd) / (2.0 * (1.0 - rho * rho))
    if use_rssi:
        return -0.5 * zr * zr
    return -0.5 * zd * zd


cdef double _log_norm(double sr, double sd, double rho, bint use_rssi, bint use_dist):
    if use_rssi and use_dist:
        return -LOG_2PI - log(sr) - log(sd) - 0.5 * log(1.0 - rho * rho)
    if use_rssi:
        return -0.5 * LOG_2PI - log(sr)
    return -0.5 * LOG_2PI - log(sd)
