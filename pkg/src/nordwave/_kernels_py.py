"""Pure-Python reference implementations of the compiled kernels.

Operation order mirrors ``_kernels.pyx`` so both backends agree to the last
bit on the same inputs. ``dopri_blowup_general`` additionally accepts a
time-dependent forcing floor, which the compiled kernel does not.
"""

from __future__ import annotations

import math

import numpy as np

C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                           49.0 / 176.0, -5103.0 / 18656.0)
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                          -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)


def affine_modes(u, v, a11, a12, a21, a22, wu, wv, n, out_u, out_v):
    """out = A (u, v) + sum_j W_j n_j, mode by mode."""
    su = a11 * u + a12 * v
    sv = a21 * u + a22 * v
    for j in range(n.shape[0]):
        su = su + wu[j] * n[j]
        sv = sv + wv[j] * n[j]
    out_u[:] = su
    out_v[:] = sv


def dopri_blowup(kappa, a0, f0, g0, t_max, threshold, rtol, atol, h_min, h0, t_eval, max_steps):
    a0 = float(a0)
    return dopri_blowup_general(kappa, lambda t: a0, f0, g0, t_max, threshold, rtol, atol,
                                h_min, h0, t_eval, max_steps)


def dopri_blowup_general(kappa, a_fn, f0, g0, t_max, threshold, rtol, atol, h_min, h0,
                         t_eval, max_steps):
    """Adaptive DP5(4) for F'' + 2 kappa F' = exp(-kappa t) a(t) (1 + F)^3."""
    exp = math.exp

    def accel(t, F, dF):
        w = 1.0 + F
        return exp(-kappa * t) * a_fn(t) * (w * w * w) - 2.0 * kappa * dF

    tev = np.ascontiguousarray(t_eval, dtype=float)
    n_eval = tev.shape[0]
    ie = 0
    while ie < n_eval and tev[ie] <= 0.0:
        ie += 1
    t, F, dF, h = 0.0, float(f0), float(g0), float(h0)
    t_cross = -1.0
    status = 0
    steps = 0
    ts, fs, ds = [t], [F], [dF]
    k1f = dF
    k1d = accel(t, F, dF)
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
            target = float(tev[ie])
        if t + hh >= target:
            hh = target - t
            hit = True
        yf = F + hh * A21 * k1f
        yd = dF + hh * A21 * k1d
        k2f = yd
        k2d = accel(t + C2 * hh, yf, yd)
        yf = F + hh * (A31 * k1f + A32 * k2f)
        yd = dF + hh * (A31 * k1d + A32 * k2d)
        k3f = yd
        k3d = accel(t + C3 * hh, yf, yd)
        yf = F + hh * (A41 * k1f + A42 * k2f + A43 * k3f)
        yd = dF + hh * (A41 * k1d + A42 * k2d + A43 * k3d)
        k4f = yd
        k4d = accel(t + C4 * hh, yf, yd)
        yf = F + hh * (A51 * k1f + A52 * k2f + A53 * k3f + A54 * k4f)
        yd = dF + hh * (A51 * k1d + A52 * k2d + A53 * k3d + A54 * k4d)
        k5f = yd
        k5d = accel(t + C5 * hh, yf, yd)
        yf = F + hh * (A61 * k1f + A62 * k2f + A63 * k3f + A64 * k4f + A65 * k5f)
        yd = dF + hh * (A61 * k1d + A62 * k2d + A63 * k3d + A64 * k4d + A65 * k5d)
        k6f = yd
        k6d = accel(t + hh, yf, yd)
        nf = F + hh * (B1 * k1f + B3 * k3f + B4 * k4f + B5 * k5f + B6 * k6f)
        nd = dF + hh * (B1 * k1d + B3 * k3d + B4 * k4d + B5 * k5d + B6 * k6d)
        k7f = nd
        k7d = accel(t + hh, nf, nd)
        ef = hh * (E1 * k1f + E3 * k3f + E4 * k4f + E5 * k5f + E6 * k6f + E7 * k7f)
        ed = hh * (E1 * k1d + E3 * k3d + E4 * k4d + E5 * k5d + E6 * k6d + E7 * k7d)
        sf = atol + rtol * (abs(F) if abs(F) > abs(nf) else abs(nf))
        sd = atol + rtol * (abs(dF) if abs(dF) > abs(nd) else abs(nd))
        err = math.sqrt(0.5 * ((ef / sf) * (ef / sf) + (ed / sd) * (ed / sd)))
        steps += 1
        if not (math.isfinite(err) and math.isfinite(nf) and math.isfinite(nd)):
            h = 0.2 * hh
            if h < h_min:
                status = 2
                break
            continue
        if err <= 1.0:
            if nf >= threshold:
                t_cross = t + hh * (1.0 / F - 1.0 / threshold) / (1.0 / F - 1.0 / nf)
                status = 1
                t = t + hh
                F, dF = nf, nd
            else:
                t = target if hit else t + hh
                F, dF = nf, nd
                k1f, k1d = k7f, k7d
                if hit and ie < n_eval and tev[ie] == target:
                    ie += 1
            ts.append(t)
            fs.append(F)
            ds.append(dF)
            if status == 1:
                break
            if err == 0.0:
                fac = 5.0
            else:
                fac = min(5.0, max(0.2, 0.9 * err ** -0.2))
            if not hit or fac * hh > h:
                h = fac * hh
        else:
            fac = max(0.2, 0.9 * err ** -0.2)
            h = fac * hh
            if h < h_min:
                status = 2
                break
    return np.array(ts), np.array(fs), np.array(ds), status, t_cross
