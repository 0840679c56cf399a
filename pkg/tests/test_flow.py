import hashlib
import math
import struct

import numpy as np
import pytest

from loomkit import CameraIntrinsics, MotionState, frame_at, plane_field
from loomkit.errors import BadMagic, DimensionMismatch, NonPositiveDt, TruncatedFile
from loomkit.flow import _backend, _kernels_py
from loomkit.flow import io as fio
from loomkit.flow.pipeline import (AngularRateGrids, DenseFlow, box_prefilter,
                                   estimate_looming, flow_to_angular_rates, load_flo,
                                   looming_map, plane_ground_truth, spatial_partials,
                                   synth_flow)
from loomkit.spherical import Direction, pixel_grid_directions
from loomkit.surface import patch_normal

from conftest import plane_patch, random_flow_scene

WALL = plane_patch((-1, 0, 0), -10.0)


def interior(shape, margin=10):
    m = np.zeros(shape, dtype=bool)
    m[margin:-margin, margin:-margin] = True
    return m


# -- .flo and CSV files --------------------------------------------------------

def test_single_pixel_flo(tmp_path):
    path = tmp_path / "one.flo"
    path.write_bytes(struct.pack("<fii", 202021.25, 1, 1) + struct.pack("<ff", 1.5, -0.5))
    u, v = fio.read_flo(path)
    assert u.shape == (1, 1) and u[0, 0] == 1.5 and v[0, 0] == -0.5


def test_flo_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    u = rng.normal(size=(37, 53)).astype(np.float32)
    v = rng.normal(size=(37, 53)).astype(np.float32)
    path = tmp_path / "x.flo"
    fio.write_flo(path, u, v)
    u2, v2 = fio.read_flo(path)
    assert u2.tobytes() == u.tobytes() and v2.tobytes() == v.tobytes()
    again = tmp_path / "y.flo"
    fio.write_flo(again, u2, v2)
    assert again.read_bytes() == path.read_bytes()


def test_flo_rejects_bad_files(tmp_path):
    good = tmp_path / "g.flo"
    fio.write_flo(good, np.zeros((4, 5)), np.zeros((4, 5)))
    data = good.read_bytes()
    bad = tmp_path / "b.flo"
    bad.write_bytes(struct.pack("<f", 1.0) + data[4:])
    with pytest.raises(BadMagic):
        fio.read_flo(bad)
    short = tmp_path / "s.flo"
    short.write_bytes(data[:-1])
    with pytest.raises(TruncatedFile):
        fio.read_flo(short)
    stub = tmp_path / "h.flo"
    stub.write_bytes(data[:6])
    with pytest.raises(TruncatedFile):
        fio.read_flo(stub)


def test_grid_csv_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    vals = rng.normal(size=(20, 30)) * 1e-3
    valid = rng.random((20, 30)) > 0.1
    path = tmp_path / "m.csv"
    fio.write_grid_csv(path, vals, valid)
    back = fio.read_grid_csv(path)
    assert np.all(np.isnan(back[~valid]))
    assert np.max(np.abs(back[valid] - vals[valid])) <= 1e-12


def test_unknown_flow_is_invalid():
    u = np.zeros((3, 3))
    u[1, 1] = 1e10
    f = DenseFlow(u, np.zeros((3, 3)), 0.1)
    assert not f.valid[1, 1] and f.valid.sum() == 8
    with pytest.raises(NonPositiveDt):
        DenseFlow(u, u, 0.0)
    with pytest.raises(DimensionMismatch):
        DenseFlow(u, np.zeros((3, 4)), 0.1)


# -- angular rates ---------------------------------------------------------------

def test_zero_flow_zero_rates(intr):
    g = flow_to_angular_rates(DenseFlow(np.zeros((240, 320)), np.zeros((240, 320)), 0.1), intr)
    assert g.valid.all()
    assert np.all(g.theta_dot == 0) and np.all(g.phi_dot == 0)


def test_principal_point_rate():
    k = CameraIntrinsics(100, 100, 2.0, 2.0, 5, 5)
    u = np.zeros((5, 5))
    u[2, 2] = 1.0
    g = flow_to_angular_rates(DenseFlow(u, np.zeros((5, 5)), 0.1), k)
    assert g.theta_dot[2, 2] == pytest.approx(math.atan(-0.01) / 0.1, abs=1e-15)
    assert g.theta_dot[2, 2] == pytest.approx(-0.1, abs=1e-3)
    assert g.phi_dot[2, 2] == 0.0


def test_flow_leaving_image_is_masked():
    k = CameraIntrinsics(100, 100, 2.0, 2.0, 5, 5)
    u = np.zeros((5, 5))
    u[2, 4] = 0.6
    g = flow_to_angular_rates(DenseFlow(u, np.zeros((5, 5)), 0.1), k)
    assert not g.valid[2, 4] and g.valid.sum() == 24


def test_dimension_mismatch(intr):
    with pytest.raises(DimensionMismatch):
        flow_to_angular_rates(DenseFlow(np.zeros((10, 10)), np.zeros((10, 10)), 0.1), intr)


def test_rates_match_motion_field(intr):
    rng = np.random.default_rng(2)
    theta, phi = pixel_grid_directions(intr)
    for _ in range(5):
        plane, t, w = random_flow_scene(rng)
        state = MotionState(t, w)
        g = flow_to_angular_rates(synth_flow(plane, state, intr, 1e-4), intr)
        n = patch_normal(plane)
        for i, j in [(120, 160), (30, 30), (200, 290), (60, 250), (180, 50)]:
            s = plane_field(n, float(n @ plane.a), state, Direction(theta[i, j], phi[i, j])).sample
            assert abs(g.theta_dot[i, j] - s.theta_dot) < 1e-4
            assert abs(g.phi_dot[i, j] - s.phi_dot) < 1e-4


# -- spatial partials -----------------------------------------------------------

@pytest.mark.parametrize("method", ["jacobian", "axis"])
def test_linear_ramp_partials_exact(intr, method):
    theta, phi = pixel_grid_directions(intr)
    g = AngularRateGrids(theta, phi, 0.7 * theta + 0.1, -0.3 * phi + 0.2, np.ones(theta.shape, bool))
    p = spatial_partials(g, method=method)
    assert p.valid_theta.all() and p.valid_phi.all()
    assert np.max(np.abs(p.dtheta_dot_dtheta - 0.7)) < 1e-9
    assert np.max(np.abs(p.dphi_dot_dphi + 0.3)) < 1e-9


def test_constant_grids_zero_partials(intr):
    theta, phi = pixel_grid_directions(intr)
    g = AngularRateGrids(theta, phi, np.full(theta.shape, 0.4), np.full(theta.shape, -1.0),
                         np.ones(theta.shape, bool))
    p = spatial_partials(g)
    assert np.all(p.dtheta_dot_dtheta == 0) and np.all(p.dphi_dot_dphi == 0)


def test_plane_partials_match_closed_form(intr):
    rng = np.random.default_rng(3)
    theta, phi = pixel_grid_directions(intr)
    for _ in range(5):
        plane, t, w = random_flow_scene(rng)
        state = MotionState(t, w)
        g = flow_to_angular_rates(synth_flow(plane, state, intr, 1e-3), intr)
        p = spatial_partials(g)
        n = patch_normal(plane)
        for i, j in [(120, 160), (30, 30), (200, 290), (60, 250), (180, 50)]:
            a = plane_field(n, float(n @ plane.a), state, Direction(theta[i, j], phi[i, j])).partials
            assert p.dtheta_dot_dtheta[i, j] == pytest.approx(a.dtheta_dot_dtheta, rel=0.02)
            assert p.dphi_dot_dphi[i, j] == pytest.approx(a.dphi_dot_dphi, rel=0.02)
            assert p.dtheta_dot_dphi[i, j] == pytest.approx(a.dtheta_dot_dphi, rel=0.02, abs=1e-3)
            assert p.dphi_dot_dtheta[i, j] == pytest.approx(a.dphi_dot_dtheta, rel=0.02, abs=1e-3)


def test_unknown_partials_method(intr):
    theta, phi = pixel_grid_directions(intr)
    g = AngularRateGrids(theta, phi, theta, phi, np.ones(theta.shape, bool))
    with pytest.raises(ValueError):
        spatial_partials(g, method="sobel")


def test_gate_flags_spikes(intr):
    theta, phi = pixel_grid_directions(intr)
    td = 0.1 * theta
    td[100, 100] += 5.0
    g = AngularRateGrids(theta, phi, td, 0.1 * phi, np.ones(theta.shape, bool))
    p = spatial_partials(g)
    assert p.flagged[100, 99] and p.flagged[100, 101]
    assert p.flagged.sum() < 10
    assert not spatial_partials(g, gate=None).flagged.any()


# -- looming maps ---------------------------------------------------------------

def test_head_on_wall_map(intr):
    m = estimate_looming(synth_flow(WALL, MotionState((1, 0, 0)), intr, 1 / 30), intr)
    theta, phi = pixel_grid_directions(intr)
    truth = 0.1 * np.cos(theta) ** 2 * np.cos(phi) ** 2
    # EstAvg of a fronto-parallel wall carries a closed-form tilt bias away from the centre
    estimator = truth - (np.sin(theta) ** 2 + np.sin(phi) ** 2 * np.cos(theta) ** 2) / 20
    ok = m.valid & interior(m.L.shape)
    assert m.L[119, 159] == pytest.approx(0.1, rel=5e-3)
    assert np.max(np.abs(m.L - estimator)[ok] / estimator[ok]) < 0.01
    centre = ok & (np.abs(theta) < math.radians(10)) & (np.abs(phi) < math.radians(10))
    assert np.max(np.abs(m.L - truth)[centre] / truth[centre]) < 0.03


def test_receding_map_is_negative(intr):
    m = estimate_looming(synth_flow(WALL, MotionState((-1, 0, 0)), intr, 1 / 30), intr)
    assert m.valid.sum() > 0.9 * m.valid.size
    assert np.all(m.values() < 0)


def test_zero_flow_zero_map(intr):
    m = estimate_looming(DenseFlow(np.zeros((240, 320)), np.zeros((240, 320)), 0.05), intr)
    assert m.valid.all() and np.all(m.L == 0)


@pytest.mark.parametrize("mode", ["est1", "est2", "avg"])
def test_modes(intr, mode):
    m = estimate_looming(synth_flow(WALL, MotionState((1, 0, 0)), intr, 1 / 30), intr, mode=mode)
    assert m.L[119, 159] == pytest.approx(0.1, rel=5e-3)
    with pytest.raises(ValueError):
        estimate_looming(DenseFlow(np.zeros((240, 320)), np.zeros((240, 320)), 0.05), intr, mode="max")


def test_rotation_robustness(intr):
    rng = np.random.default_rng(4)
    dt = 1 / 200
    for _ in range(5):
        plane, t, w = random_flow_scene(rng)
        still = estimate_looming(synth_flow(plane, MotionState(t), intr, dt), intr)
        turning = estimate_looming(synth_flow(plane, MotionState(t, w), intr, dt), intr)
        ok = still.valid & turning.valid & interior(still.L.shape)
        assert np.max(np.abs(turning.L - still.L)[ok] / np.abs(still.L[ok])) <= 0.02


def test_mask_soundness(intr):
    rng = np.random.default_rng(5)
    flow = synth_flow(WALL, MotionState((1, 0.1, 0), (0, 0, 0.1)), intr, 1 / 30)
    holes = rng.random(flow.valid.shape) < 0.05
    flow.u[holes] = np.nan
    u = flow.u
    flow = DenseFlow(u, flow.v, flow.dt)
    for prefilter in (False, True):
        g = flow_to_angular_rates(flow, intr, prefilter=prefilter)
        m = looming_map(g, spatial_partials(g))
        bad = np.pad(~flow.valid, 2, constant_values=False)
        h, w = flow.valid.shape
        reach = 2 if prefilter else 1
        touched = np.zeros((h, w), dtype=bool)
        for di in range(-reach, reach + 1):
            for dj in range(-reach, reach + 1):
                # plus-shaped partials stencil, widened by the 3x3 box when prefiltering
                if (di == 0 or dj == 0) if not prefilter else not (abs(di) == 2 and abs(dj) == 2):
                    touched |= bad[2 + di:2 + di + h, 2 + dj:2 + dj + w]
        assert not (m.valid & touched).any()
        assert np.all(np.isnan(m.L[~m.valid]))


def test_box_prefilter_on_affine_data(intr):
    theta, phi = pixel_grid_directions(intr)
    rows, cols = np.mgrid[0:240, 0:320].astype(float)
    g = AngularRateGrids(theta, phi, 0.01 * cols, -0.02 * rows, np.ones(theta.shape, bool))
    f = box_prefilter(g)
    assert not f.valid[0].any() and f.valid[1:-1, 1:-1].all()
    np.testing.assert_allclose(f.theta_dot[f.valid], g.theta_dot[f.valid], atol=1e-12)


# -- synthetic flow ---------------------------------------------------------------

def test_zero_motion_zero_flow(intr):
    f = synth_flow(WALL, MotionState((0, 0, 0)), intr, 0.1)
    assert f.valid.all() and np.all(f.u == 0) and np.all(f.v == 0)


def test_yaw_flow_is_range_independent(intr):
    spin = MotionState((0, 0, 0), (0, 0, 0.3))
    near = synth_flow(plane_patch((-1, 0.2, 0.1), -4.0), spin, intr, 0.05)
    far = synth_flow(plane_patch((-1, -0.1, 0.3), -40.0), spin, intr, 0.05)
    ok = near.valid & far.valid
    assert ok.all()
    assert np.max(np.abs(near.u - far.u)) < 1e-9 and np.max(np.abs(near.v - far.v)) < 1e-9


def test_focus_of_expansion_at_centre():
    k = CameraIntrinsics(300, 300, 160.0, 120.0, 321, 241)
    f = synth_flow(WALL, MotionState((1, 0, 0)), k, 0.05)
    assert abs(f.u[120, 160]) < 1e-12 and abs(f.v[120, 160]) < 1e-12
    rows, cols = np.mgrid[0:241, 0:321]
    dc, dr = cols - 160.0, rows - 120.0
    radial = f.u * dc + f.v * dr
    off = (dc ** 2 + dr ** 2) > 0
    assert np.all(radial[off] > 0)
    np.testing.assert_allclose(f.u * dr, f.v * dc, atol=1e-9)


def test_synth_round_trip_through_file(tmp_path, intr):
    f = synth_flow(WALL, MotionState((1, 0.2, 0), (0.01, 0, 0.05)), intr, 1 / 30)
    path = tmp_path / "s.flo"
    fio.write_flo(path, f.u, f.v)
    back = load_flo(path, f.dt)
    assert back.u.tobytes() == f.u.astype(np.float32).tobytes()
    assert back.valid.all()


def test_ground_truth_grid(intr):
    truth = plane_ground_truth(WALL, MotionState((1, 0, 0)), intr)
    theta, phi = pixel_grid_directions(intr)
    np.testing.assert_allclose(truth.L, 0.1 * np.cos(theta) ** 2 * np.cos(phi) ** 2, rtol=1e-12)
    np.testing.assert_allclose(truth.gamma, np.arctan(-np.tan(theta) / np.cos(phi)), atol=1e-12)


# -- backends and threads -----------------------------------------------------

compiled = pytest.mark.skipif(_backend.compiled is None, reason="compiled kernels not built")


def _pipeline(kernels, threads, monkeypatch, intr):
    monkeypatch.setattr(_backend, "kernels", kernels)
    monkeypatch.setenv("LOOMKIT_THREADS", str(threads))
    f = synth_flow(plane_patch((-1, 0.2, -0.1), -12.0), MotionState((1.5, 0.2, -0.1), (0.05, -0.1, 0.2)),
                   intr, 1 / 30)
    g = flow_to_angular_rates(f, intr)
    out = {"u": f.u, "v": f.v, "td": g.theta_dot, "pd": g.phi_dot}
    for method in ("jacobian", "axis"):
        p = spatial_partials(g, method=method)
        for mode in ("est1", "est2", "avg"):
            m = looming_map(g, p, mode)
            out[f"{method}-{mode}"] = np.where(m.valid, m.L, 0.0)
            out[f"{method}-{mode}-mask"] = m.valid
    return out


@compiled
def test_backend_parity(monkeypatch, intr):
    ref = _pipeline(_kernels_py, 1, monkeypatch, intr)
    fast = _pipeline(_backend.compiled, 4, monkeypatch, intr)
    for k in ref:
        if k.endswith("mask"):
            assert np.array_equal(ref[k], fast[k]), k
            continue
        ok = np.isfinite(ref[k])
        assert np.array_equal(ok, np.isfinite(fast[k])), k
        # undifferentiated grids agree to rounding; one-pixel differencing then
        # amplifies last-bit differences of the angle maps by roughly 1/step
        tol = 1e-12 if k in ("u", "v", "td", "pd") else 1e-10
        assert np.max(np.abs(ref[k][ok] - fast[k][ok])) <= tol, k


@pytest.mark.parametrize("kernels", [_kernels_py, pytest.param("compiled", marks=compiled)])
def test_thread_count_determinism(monkeypatch, intr, kernels):
    if kernels == "compiled":
        kernels = _backend.compiled
    one = _pipeline(kernels, 1, monkeypatch, intr)
    many = _pipeline(kernels, 8, monkeypatch, intr)
    for k in one:
        assert one[k].tobytes() == many[k].tobytes(), k


def test_backend_selection():
    assert _backend.BACKEND in ("cython", "python")
    assert _backend.get("python") is _kernels_py
    with pytest.raises(ValueError):
        _backend.get("fortran")
