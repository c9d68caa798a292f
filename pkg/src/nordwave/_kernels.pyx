# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. ``_kernels_py`` holds the reference twins."""

from libc.math cimport exp, fabs, sqrt, isfinite, pow
import numpy as np

# Dormand-Prince 5(4) tableau
cdef double C2 = 1.0 / 5.0, C3 = 3.0 / 10.0, C4 = 4.0 / 5.0, C5 = 8.0 / 9.0
cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0, A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0, A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0, B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0, E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0


cdef inline double accel(double t, double F, double dF, double kappa, double a0) nogil:
    cdef double w = 1.0 + F
    return exp(-kappa * t) * a0 * (w * w * w) - 2.0 * kappa * dF


def affine_modes(const double complex[::1] u, const double complex[::1] v,
                 const double[::1] a11, const double[::1] a12,
                 const double[::1] a21, const double[::1] a22,
                 const double[:, ::1] wu, const double[:, ::1] wv,
                 const double complex[:, ::1] n,
                 double complex[::1] out_u, double complex[::1] out_v):
    """out = A (u, v) + sum_j W_j n_j, mode by mode."""
    cdef Py_ssize_t i, j, M = u.shape[0], J = n.shape[0]
    cdef double complex su, sv
    with nogil:
        for i in range(M):
            su = a11[i] * u[i] + a12[i] * v[i]
            sv = a21[i] * u[i] + a22[i] * v[i]
            for j in range(J):
                su = su + wu[j, i] * n[j, i]
                sv = sv + wv[j, i] * n[j, i]
            out_u[i] = su
            out_v[i] = sv


def dopri_blowup(double kappa, double a0, double f0, double g0, double t_max,
                 double threshold, double rtol, double atol, double h_min,
                 double h0, t_eval, long max_steps):
    """Adaptive DP5(4) for F'' + 2 kappa F' = exp(-kappa t) a0 (1 + F)^3.

    Returns ``(t, F, dF, status, t_cross)`` where status is 0 (horizon),
    1 (threshold crossed), 2 (step collapse) or 3 (step budget or
    non-finite state).
    """
    cdef double[::1] tev = np.ascontiguousarray(t_eval, dtype=float)
    cdef Py_ssize_t n_eval = tev.shape[0], ie = 0
    cdef Py_ssize_t cap = 1024, n = 0
    ts_arr = np.empty(cap)
    fs_arr = np.empty(cap)
    ds_arr = np.empty(cap)
    cdef double[::1] ts = ts_arr, fs = fs_arr, ds = ds_arr
    cdef double t = 0.0, F = f0, dF = g0, h = h0, t_cross = -1.0
    cdef double k1f, k1d, k2f, k2d, k3f, k3d, k4f, k4d, k5f, k5d, k6f, k6d, k7f, k7d
    cdef double yf, yd, nf, nd, ef, ed, sf, sd, err, fac, hh, target
    cdef int status = 0
    cdef long steps = 0
    cdef bint hit

    while ie < n_eval and tev[ie] <= 0.0:
        ie += 1
    ts[0] = t; fs[0] = F; ds[0] = dF; n = 1
    k1f = dF
    k1d = accel(t, F, dF, kappa, a0)
    while True:
        if t >= t_max:
            status = 0
            break
        if steps >= max_steps:
            status = 3
            break
        hh = h
        hit = False
        target = t_max
        if ie < n_eval and tev[ie] < target:
            target = tev[ie]
        if t + hh >= target:
            hh = target - t
            hit = True
        yf = F + hh * A21 * k1f
        yd = dF + hh * A21 * k1d
        k2f = yd; k2d = accel(t + C2 * hh, yf, yd, kappa, a0)
        yf = F + hh * (A31 * k1f + A32 * k2f)
        yd = dF + hh * (A31 * k1d + A32 * k2d)
        k3f = yd; k3d = accel(t + C3 * hh, yf, yd, kappa, a0)
        yf = F + hh * (A41 * k1f + A42 * k2f + A43 * k3f)
        yd = dF + hh * (A41 * k1d + A42 * k2d + A43 * k3d)
        k4f = yd; k4d = accel(t + C4 * hh, yf, yd, kappa, a0)
        yf = F + hh * (A51 * k1f + A52 * k2f + A53 * k3f + A54 * k4f)
        yd = dF + hh * (A51 * k1d + A52 * k2d + A53 * k3d + A54 * k4d)
        k5f = yd; k5d = accel(t + C5 * hh, yf, yd, kappa, a0)
        yf = F + hh * (A61 * k1f + A62 * k2f + A63 * k3f + A64 * k4f + A65 * k5f)
        yd = dF + hh * (A61 * k1d + A62 * k2d + A63 * k3d + A64 * k4d + A65 * k5d)
        k6f = yd; k6d = accel(t + hh, yf, yd, kappa, a0)
        nf = F + hh * (B1 * k1f + B3 * k3f + B4 * k4f + B5 * k5f + B6 * k6f)
        nd = dF + hh * (B1 * k1d + B3 * k3d + B4 * k4d + B5 * k5d + B6 * k6d)
        k7f = nd; k7d = accel(t + hh, nf, nd, kappa, a0)
        ef = hh * (E1 * k1f + E3 * k3f + E4 * k4f + E5 * k5f + E6 * k6f + E7 * k7f)
        ed = hh * (E1 * k1d + E3 * k3d + E4 * k4d + E5 * k5d + E6 * k6d + E7 * k7d)
        sf = atol + rtol * (fabs(F) if fabs(F) > fabs(nf) else fabs(nf))
        sd = atol + rtol * (fabs(dF) if fabs(dF) > fabs(nd) else fabs(nd))
        err = sqrt(0.5 * ((ef / sf) * (ef / sf) + (ed / sd) * (ed / sd)))
        steps += 1
        if not (isfinite(err) and isfinite(nf) and isfinite(nd)):
            h = 0.2 * hh
            if h < h_min:
                status = 2
                break
            continue
        if err <= 1.0:
            if nf >= threshold:
                # F ~ c / (T - t) near blow-up, so 1/F is close to linear in t
                t_cross = t + hh * (1.0 / F - 1.0 / threshold) / (1.0 / F - 1.0 / nf)
                status = 1
                t = t + hh
                F = nf
                dF = nd
            else:
                t = target if hit else t + hh
                F = nf
                dF = nd
                k1f = k7f
                k1d = k7d
                if hit and ie < n_eval and tev[ie] == target:
                    ie += 1
            if n == cap:
                cap *= 2
                ts_arr = np.resize(ts_arr, cap); ts = ts_arr
                fs_arr = np.resize(fs_arr, cap); fs = fs_arr
                ds_arr = np.resize(ds_arr, cap); ds = ds_arr
            ts[n] = t; fs[n] = F; ds[n] = dF; n += 1
            if status == 1:
                break
            if err == 0.0:
                fac = 5.0
            else:
                fac = 0.9 * pow(err, -0.2)
                if fac > 5.0:
                    fac = 5.0
                if fac < 0.2:
                    fac = 0.2
            if not hit or fac * hh > h:
                h = fac * hh
        else:
            fac = 0.9 * pow(err, -0.2)
            if fac < 0.2:
                fac = 0.2
            h = fac * hh
            if h < h_min:
                status = 2
                break
    return ts_arr[:n].copy(), fs_arr[:n].copy(), ds_arr[:n].copy(), status, t_cross
