"""Pure numpy implementations of the per-pixel kernels.

Same signatures and semantics as the compiled ``_kernels`` module; the
``nthreads`` argument is accepted and ignored.
"""
import numpy as np

NAME = "python"

MODE_EST1, MODE_EST2, MODE_AVG = 0, 1, 2
_MIN_DENOM = 1e-12


def _angles(col, row, fx, fy, cx, cy):
    y = -(col - cx) / fx
    z = -(row - cy) / fy
    return np.arctan2(y, 1.0), np.arctan2(z, np.hypot(1.0, y))


def rates_from_flow(u, v, valid, fx, fy, cx, cy, dt, nthreads=1):
    h, w = u.shape
    cc, rr = np.meshgrid(np.arange(w, dtype=float), np.arange(h, dtype=float))
    theta, phi = _angles(cc, rr, fx, fy, cx, cy)
    c2 = cc + u
    r2 = rr + v
    ok = (valid.astype(bool) & np.isfinite(c2) & np.isfinite(r2)
          & (c2 >= -0.5) & (c2 <= w - 0.5) & (r2 >= -0.5) & (r2 <= h - 0.5))
    theta2, phi2 = _angles(np.where(ok, c2, cc), np.where(ok, r2, rr), fx, fy, cx, cy)
    theta_dot = np.where(ok, (theta2 - theta) / dt, np.nan)
    phi_dot = np.where(ok, (phi2 - phi) / dt, np.nan)
    return theta, phi, theta_dot, phi_dot, ok.astype(np.uint8)


def _axis_derivative(ang, rate, ok, axis):
    """d(rate)/d(ang) along ``axis`` with central differences, one-sided at borders."""
    n = ang.shape[axis]
    out = np.full(ang.shape, np.nan)
    good = np.zeros(ang.shape, dtype=bool)
    if n < 2:
        return out, good
    idx = np.arange(n)
    lo = np.clip(idx - 1, 0, n - 1)
    hi = np.clip(idx + 1, 0, n - 1)
    lo[0], hi[-1] = 0, n - 1

    def take(a, i):
        return np.take(a, i, axis=axis)

    d_ang = take(ang, hi) - take(ang, lo)
    d_rate = take(rate, hi) - take(rate, lo)
    good = ok & take(ok, hi) & take(ok, lo) & (np.abs(d_ang) >= _MIN_DENOM)
    np.divide(d_rate, d_ang, out=out, where=good)
    return out, good


def axis_partials(theta, phi, theta_dot, phi_dot, valid, nthreads=1):
    ok = valid.astype(bool)
    dtd, vt = _axis_derivative(theta, theta_dot, ok, axis=1)
    dpd, vp = _axis_derivative(phi, phi_dot, ok, axis=0)
    return dtd, dpd, vt.astype(np.uint8), vp.astype(np.uint8)


def looming_grid(phi, phi_dot, dtd, dpd, valid_t, valid_p, mode, nthreads=1):
    vt = valid_t.astype(bool)
    vp = valid_p.astype(bool)
    if mode == MODE_EST1:
        ok = vt
        vals = dtd - phi_dot * np.tan(phi)
    elif mode == MODE_EST2:
        ok = vp
        vals = dpd.copy()
    elif mode == MODE_AVG:
        ok = vt & vp
        vals = 0.5 * ((dtd - phi_dot * np.tan(phi)) + dpd)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return np.where(ok, vals, np.nan), ok.astype(np.uint8)


def synth_flow_grid(normal, offset, motion, fx, fy, cx, cy, width, height, nthreads=1):
    """Flow of the plane ``normal . x = offset`` under ``x' = M[:, :3] x + M[:, 3]``."""
    cc, rr = np.meshgrid(np.arange(width, dtype=float), np.arange(height, dtype=float))
    dy = -(cc - cx) / fx
    dz = -(rr - cy) / fy
    denom = normal[0] + normal[1] * dy + normal[2] * dz
    norm_d = np.sqrt(1.0 + dy * dy + dz * dz)
    ok = np.abs(denom) >= _MIN_DENOM * norm_d
    s = np.divide(offset, denom, out=np.zeros_like(denom), where=ok)
    ok &= s > 0
    X = np.stack([s, s * dy, s * dz], axis=-1)
    Xp = X @ motion[:, :3].T + motion[:, 3]
    ok &= Xp[..., 0] > 0
    xs = np.where(ok, Xp[..., 0], 1.0)
    # displacement in normalised coordinates; exactly zero for the identity
    u = np.where(ok, -fx * (Xp[..., 1] - dy * xs) / xs, np.nan)
    v = np.where(ok, -fy * (Xp[..., 2] - dz * xs) / xs, np.nan)
    return u, v, ok.astype(np.uint8)


def jacobian_partials(theta, phi, theta_dot, phi_dot, valid, nthreads=1):
    """Full 2x2 chain-rule solve from row and column neighbours.

    Returns (dtd/dtheta, dpd/dphi, dtd/dphi, dpd/dtheta, valid).
    """
    ok = valid.astype(bool)
    h, w = ok.shape
    shape = ok.shape
    outs = [np.full(shape, np.nan) for _ in range(4)]
    good = np.zeros(shape, dtype=bool)
    if h < 2 or w < 2:
        return (*outs, good.astype(np.uint8))

    def stencil(n):
        idx = np.arange(n)
        lo = np.clip(idx - 1, 0, n - 1)
        hi = np.clip(idx + 1, 0, n - 1)
        return lo, hi

    clo, chi = stencil(w)
    rlo, rhi = stencil(h)

    def drow(a):
        return a[:, chi] - a[:, clo]

    def dcol(a):
        return a[rhi, :] - a[rlo, :]

    th_r, ph_r, td_r, pd_r = drow(theta), drow(phi), drow(theta_dot), drow(phi_dot)
    th_c, ph_c, td_c, pd_c = dcol(theta), dcol(phi), dcol(theta_dot), dcol(phi_dot)
    det = th_r * ph_c - ph_r * th_c
    good = (ok & ok[:, chi] & ok[:, clo] & ok[rhi, :] & ok[rlo, :]
            & (np.abs(th_r) >= _MIN_DENOM) & (np.abs(ph_c) >= _MIN_DENOM)
            & (np.abs(det) >= _MIN_DENOM * np.abs(th_r * ph_c)))
    for out, num in zip(outs, (td_r * ph_c - ph_r * td_c, th_r * pd_c - pd_r * th_c,
                               th_r * td_c - td_r * th_c, pd_r * ph_c - ph_r * pd_c)):
        np.divide(num, det, out=out, where=good)
    return (*outs, good.astype(np.uint8))
