# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-pixel kernels; rows are split across OpenMP threads.

Every pixel is computed independently and written exactly once, so the
output does not depend on the thread count.
"""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport atan2, hypot, tan, sqrt, fabs, isfinite, NAN

cnp.import_array()

NAME = "cython"

MODE_EST1, MODE_EST2, MODE_AVG = 0, 1, 2
cdef double _MIN_DENOM = 1e-12


cdef inline void _angles(double col, double row, double fx, double fy,
                         double cx, double cy, double* th, double* ph) noexcept nogil:
    cdef double y = -(col - cx) / fx
    cdef double z = -(row - cy) / fy
    th[0] = atan2(y, 1.0)
    ph[0] = atan2(z, hypot(1.0, y))


def rates_from_flow(double[:, ::1] u, double[:, ::1] v, cnp.uint8_t[:, ::1] valid,
                    double fx, double fy, double cx, double cy, double dt, int nthreads=1):
    cdef Py_ssize_t h = u.shape[0], w = u.shape[1], i, j
    theta_a = np.empty((h, w)); phi_a = np.empty((h, w))
    td_a = np.empty((h, w)); pd_a = np.empty((h, w))
    ok_a = np.zeros((h, w), dtype=np.uint8)
    # grid azimuth and horizontal norm depend on the column only
    col_theta_a = np.empty(w); col_rho_a = np.empty(w)
    cdef double[:, ::1] theta = theta_a, phi = phi_a, td = td_a, pd = pd_a
    cdef double[::1] col_theta = col_theta_a, col_rho = col_rho_a
    cdef cnp.uint8_t[:, ::1] ok = ok_a
    cdef double c2, r2, ph, th2, ph2, y
    for j in range(w):
        y = -(<double>j - cx) / fx
        col_theta[j] = atan2(y, 1.0)
        col_rho[j] = hypot(1.0, y)
    for i in prange(h, nogil=True, num_threads=nthreads, schedule="static"):
        for j in range(w):
            ph = atan2(-(<double>i - cy) / fy, col_rho[j])
            theta[i, j] = col_theta[j]
            phi[i, j] = ph
            c2 = j + u[i, j]
            r2 = i + v[i, j]
            if (valid[i, j] and isfinite(c2) and isfinite(r2) and c2 >= -0.5 and c2 <= w - 0.5
                    and r2 >= -0.5 and r2 <= h - 0.5):
                _angles(c2, r2, fx, fy, cx, cy, &th2, &ph2)
                td[i, j] = (th2 - col_theta[j]) / dt
                pd[i, j] = (ph2 - ph) / dt
                ok[i, j] = 1
            else:
                td[i, j] = NAN
                pd[i, j] = NAN
    return theta_a, phi_a, td_a, pd_a, ok_a


def axis_partials(double[:, ::1] theta, double[:, ::1] phi, double[:, ::1] theta_dot,
                  double[:, ::1] phi_dot, cnp.uint8_t[:, ::1] valid, int nthreads=1):
    cdef Py_ssize_t h = theta.shape[0], w = theta.shape[1], i, j, lo, hi
    dtd_a = np.full((h, w), np.nan); dpd_a = np.full((h, w), np.nan)
    vt_a = np.zeros((h, w), dtype=np.uint8); vp_a = np.zeros((h, w), dtype=np.uint8)
    cdef double[:, ::1] dtd = dtd_a, dpd = dpd_a
    cdef cnp.uint8_t[:, ::1] vt = vt_a, vp = vp_a
    cdef double den
    for i in prange(h, nogil=True, num_threads=nthreads, schedule="static"):
        for j in range(w):
            if not valid[i, j]:
                continue
            if w >= 2:
                lo = j - 1 if j > 0 else 0
                hi = j + 1 if j < w - 1 else w - 1
                if valid[i, lo] and valid[i, hi]:
                    den = theta[i, hi] - theta[i, lo]
                    if fabs(den) >= _MIN_DENOM:
                        dtd[i, j] = (theta_dot[i, hi] - theta_dot[i, lo]) / den
                        vt[i, j] = 1
            if h >= 2:
                lo = i - 1 if i > 0 else 0
                hi = i + 1 if i < h - 1 else h - 1
                if valid[lo, j] and valid[hi, j]:
                    den = phi[hi, j] - phi[lo, j]
                    if fabs(den) >= _MIN_DENOM:
                        dpd[i, j] = (phi_dot[hi, j] - phi_dot[lo, j]) / den
                        vp[i, j] = 1
    return dtd_a, dpd_a, vt_a, vp_a


def looming_grid(double[:, ::1] phi, double[:, ::1] phi_dot, double[:, ::1] dtd,
                 double[:, ::1] dpd, cnp.uint8_t[:, ::1] valid_t, cnp.uint8_t[:, ::1] valid_p,
                 int mode, int nthreads=1):
    if mode not in (MODE_EST1, MODE_EST2, MODE_AVG):
        raise ValueError(f"unknown mode {mode!r}")
    cdef Py_ssize_t h = phi.shape[0], w = phi.shape[1], i, j
    out_a = np.full((h, w), np.nan)
    ok_a = np.zeros((h, w), dtype=np.uint8)
    cdef double[:, ::1] out = out_a
    cdef cnp.uint8_t[:, ::1] ok = ok_a
    cdef double e1
    for i in prange(h, nogil=True, num_threads=nthreads, schedule="static"):
        for j in range(w):
            if mode == 0:
                if valid_t[i, j]:
                    out[i, j] = dtd[i, j] - phi_dot[i, j] * tan(phi[i, j])
                    ok[i, j] = 1
            elif mode == 1:
                if valid_p[i, j]:
                    out[i, j] = dpd[i, j]
                    ok[i, j] = 1
            else:
                if valid_t[i, j] and valid_p[i, j]:
                    e1 = dtd[i, j] - phi_dot[i, j] * tan(phi[i, j])
                    out[i, j] = 0.5 * (e1 + dpd[i, j])
                    ok[i, j] = 1
    return out_a, ok_a


def synth_flow_grid(double[::1] normal, double offset, double[:, ::1] motion,
                    double fx, double fy, double cx, double cy, int width, int height,
                    int nthreads=1):
    cdef Py_ssize_t i, j
    u_a = np.full((height, width), np.nan); v_a = np.full((height, width), np.nan)
    ok_a = np.zeros((height, width), dtype=np.uint8)
    cdef double[:, ::1] u = u_a, v = v_a
    cdef cnp.uint8_t[:, ::1] ok = ok_a
    cdef double dy, dz, den, s, x0, x1, x2, y0, y1, y2
    for i in prange(height, nogil=True, num_threads=nthreads, schedule="static"):
        for j in range(width):
            dy = -(j - cx) / fx
            dz = -(i - cy) / fy
            den = normal[0] + normal[1] * dy + normal[2] * dz
            if fabs(den) < _MIN_DENOM * sqrt(1.0 + dy * dy + dz * dz):
                continue
            s = offset / den
            if s <= 0:
                continue
            x0 = s
            x1 = s * dy
            x2 = s * dz
            y0 = motion[0, 0] * x0 + motion[0, 1] * x1 + motion[0, 2] * x2 + motion[0, 3]
            y1 = motion[1, 0] * x0 + motion[1, 1] * x1 + motion[1, 2] * x2 + motion[1, 3]
            y2 = motion[2, 0] * x0 + motion[2, 1] * x1 + motion[2, 2] * x2 + motion[2, 3]
            if y0 <= 0:
                continue
            # displacement in normalised coordinates; exactly zero for the identity
            u[i, j] = -fx * (y1 - dy * y0) / y0
            v[i, j] = -fy * (y2 - dz * y0) / y0
            ok[i, j] = 1
    return u_a, v_a, ok_a


def jacobian_partials(double[:, ::1] theta, double[:, ::1] phi, double[:, ::1] theta_dot,
                      double[:, ::1] phi_dot, cnp.uint8_t[:, ::1] valid, int nthreads=1):
    """Full 2x2 chain-rule solve from row and column neighbours.

    Returns (dtd/dtheta, dpd/dphi, dtd/dphi, dpd/dtheta, valid).
    """
    cdef Py_ssize_t h = theta.shape[0], w = theta.shape[1], i, j, cl, ch, rl, rh
    a_a = np.full((h, w), np.nan); b_a = np.full((h, w), np.nan)
    c_a = np.full((h, w), np.nan); d_a = np.full((h, w), np.nan)
    ok_a = np.zeros((h, w), dtype=np.uint8)
    if h < 2 or w < 2:
        return a_a, b_a, c_a, d_a, ok_a
    cdef double[:, ::1] oa = a_a, ob = b_a, oc = c_a, od = d_a
    cdef cnp.uint8_t[:, ::1] ok = ok_a
    cdef double th_r, ph_r, td_r, pd_r, th_c, ph_c, td_c, pd_c, det
    for i in prange(h, nogil=True, num_threads=nthreads, schedule="static"):
        for j in range(w):
            cl = j - 1 if j > 0 else 0
            ch = j + 1 if j < w - 1 else w - 1
            rl = i - 1 if i > 0 else 0
            rh = i + 1 if i < h - 1 else h - 1
            if not (valid[i, j] and valid[i, cl] and valid[i, ch]
                    and valid[rl, j] and valid[rh, j]):
                continue
            th_r = theta[i, ch] - theta[i, cl]
            ph_r = phi[i, ch] - phi[i, cl]
            td_r = theta_dot[i, ch] - theta_dot[i, cl]
            pd_r = phi_dot[i, ch] - phi_dot[i, cl]
            th_c = theta[rh, j] - theta[rl, j]
            ph_c = phi[rh, j] - phi[rl, j]
            td_c = theta_dot[rh, j] - theta_dot[rl, j]
            pd_c = phi_dot[rh, j] - phi_dot[rl, j]
            det = th_r * ph_c - ph_r * th_c
            if (fabs(th_r) < _MIN_DENOM or fabs(ph_c) < _MIN_DENOM
                    or fabs(det) < _MIN_DENOM * fabs(th_r * ph_c)):
                continue
            oa[i, j] = (td_r * ph_c - ph_r * td_c) / det
            ob[i, j] = (th_r * pd_c - pd_r * th_c) / det
            oc[i, j] = (th_r * td_c - td_r * th_c) / det
            od[i, j] = (pd_r * ph_c - ph_r * pd_c) / det
            ok[i, j] = 1
    return a_a, b_a, c_a, d_a, ok_a
