"""Dense flow -> angular rates -> spatial partials -> per-pixel looming.

Also hosts the synthetic-flow generator used as an oracle: a plane seen by a
pinhole camera under a known rigid motion.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import expm

from ..errors import BehindCamera, DimensionMismatch, NonPositiveDt
from ..looming import LoomKind
from ..motion import MotionState
from ..spherical import CameraIntrinsics, frame_arrays, pixel_grid_directions
from ..surface import PlanarPatch, patch_normal
from . import _backend
from .io import read_flo

UNKNOWN_FLOW = 1e9
DEFAULT_GATE = 10.0

_MODE_CODES = {LoomKind.EST1: 0, LoomKind.EST2: 1, LoomKind.EST_AVG: 2}
_MODE_NAMES = {"est1": LoomKind.EST1, "est2": LoomKind.EST2, "avg": LoomKind.EST_AVG,
               "estavg": LoomKind.EST_AVG}


def parse_mode(mode) -> LoomKind:
    if isinstance(mode, LoomKind):
        if mode not in _MODE_CODES:
            raise ValueError(f"{mode} is not a flow estimator")
        return mode
    try:
        return _MODE_NAMES[str(mode).lower()]
    except KeyError:
        raise ValueError(f"unknown looming mode {mode!r}") from None


@dataclass(eq=False)
class DenseFlow:
    """Per-pixel displacement (pixels per frame) over a frame interval ``dt``."""
    u: np.ndarray
    v: np.ndarray
    dt: float
    valid: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.u.shape != self.v.shape or self.u.ndim != 2:
            raise DimensionMismatch("u and v grids must share one 2-D shape")
        if not self.dt > 0:
            raise NonPositiveDt(f"frame interval must be positive, got {self.dt!r}")
        if self.valid is None:
            self.valid = (np.isfinite(self.u) & np.isfinite(self.v)
                          & (np.abs(self.u) < UNKNOWN_FLOW) & (np.abs(self.v) < UNKNOWN_FLOW))
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.valid.shape != self.u.shape:
            raise DimensionMismatch("validity mask does not match the flow grid")

    @property
    def height(self) -> int:
        return self.u.shape[0]

    @property
    def width(self) -> int:
        return self.u.shape[1]


@dataclass(eq=False)
class AngularRateGrids:
    theta: np.ndarray
    phi: np.ndarray
    theta_dot: np.ndarray
    phi_dot: np.ndarray
    valid: np.ndarray


@dataclass(eq=False)
class GridPartials:
    dtheta_dot_dtheta: np.ndarray
    dphi_dot_dphi: np.ndarray
    valid_theta: np.ndarray
    valid_phi: np.ndarray
    flagged: np.ndarray
    dtheta_dot_dphi: Optional[np.ndarray] = None
    dphi_dot_dtheta: Optional[np.ndarray] = None


@dataclass(eq=False)
class LoomingMap:
    L: np.ndarray
    valid: np.ndarray
    provenance: LoomKind
    flagged: Optional[np.ndarray] = None

    def values(self) -> np.ndarray:
        return self.L[self.valid]


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _u8(a):
    return np.ascontiguousarray(a, dtype=np.uint8)


def load_flo(path, dt: float) -> DenseFlow:
    u, v = read_flo(path)
    return DenseFlow(u, v, dt)


def box_prefilter(g: AngularRateGrids) -> AngularRateGrids:
    """3x3 mean of the rate grids; a pixel survives only if its window is all valid."""
    h, w = g.valid.shape
    ok = np.pad(g.valid, 1, constant_values=False)
    td = np.pad(np.where(g.valid, g.theta_dot, 0.0), 1)
    pd = np.pad(np.where(g.valid, g.phi_dot, 0.0), 1)
    all_ok = np.ones((h, w), dtype=bool)
    s_td = np.zeros((h, w))
    s_pd = np.zeros((h, w))
    for di in range(3):
        for dj in range(3):
            all_ok &= ok[di:di + h, dj:dj + w]
            s_td += td[di:di + h, dj:dj + w]
            s_pd += pd[di:di + h, dj:dj + w]
    return AngularRateGrids(g.theta, g.phi,
                            np.where(all_ok, s_td / 9.0, np.nan),
                            np.where(all_ok, s_pd / 9.0, np.nan), all_ok)


def flow_to_angular_rates(flow: DenseFlow, intr: CameraIntrinsics,
                          prefilter: bool = False) -> AngularRateGrids:
    """Convert pixel displacements into (theta_dot, phi_dot) in rad/s.

    Pixels whose displaced position leaves the image are masked.
    """
    if (flow.width, flow.height) != (intr.width, intr.height):
        raise DimensionMismatch(
            f"flow is {flow.width}x{flow.height} but intrinsics describe "
            f"{intr.width}x{intr.height}")
    k = _backend.get()
    theta, phi, td, pd, ok = k.rates_from_flow(
        _f64(flow.u), _f64(flow.v), _u8(flow.valid),
        float(intr.fx), float(intr.fy), float(intr.cx), float(intr.cy), float(flow.dt),
        _backend.threads())
    g = AngularRateGrids(theta, phi, td, pd, ok.astype(bool))
    return box_prefilter(g) if prefilter else g


def _gate(values, valid, factor):
    flagged = np.zeros(valid.shape, dtype=bool)
    if factor is None or not valid.any():
        return flagged
    mags = np.abs(values[valid])
    med = np.median(mags)
    flagged[valid] = mags > factor * med
    return flagged


PARTIAL_METHODS = ("jacobian", "axis")


def spatial_partials(g: AngularRateGrids, gate: Optional[float] = DEFAULT_GATE,
                     method: str = "jacobian") -> GridPartials:
    """Partials of the rate grids with respect to theta and phi.

    ``jacobian`` solves the 2x2 chain rule from row and column differences,
    so the result is a true partial even where image rows are not lines of
    constant phi. ``axis`` divides row differences by theta steps and column
    differences by phi steps, which is cheaper but leaks the cross partial
    away from the image centre lines.

    Pixels with a gradient above ``gate`` times the map median are flagged
    (not removed); ``gate=None`` disables flagging.
    """
    k = _backend.get()
    args = (_f64(g.theta), _f64(g.phi), _f64(g.theta_dot), _f64(g.phi_dot), _u8(g.valid),
            _backend.threads())
    cross_t = cross_p = None
    if method == "jacobian":
        dtd, dpd, cross_t, cross_p, ok = k.jacobian_partials(*args)
        vt = vp = ok.astype(bool)
    elif method == "axis":
        dtd, dpd, vt, vp = k.axis_partials(*args)
        vt = vt.astype(bool)
        vp = vp.astype(bool)
    else:
        raise ValueError(f"unknown partials method {method!r}; expected one of {PARTIAL_METHODS}")
    flagged = _gate(dtd, vt, gate) | _gate(dpd, vp, gate)
    return GridPartials(dtd, dpd, vt, vp, flagged, cross_t, cross_p)


def looming_map(g: AngularRateGrids, partials: GridPartials, mode="avg") -> LoomingMap:
    """Per-pixel range-free looming; the average needs both estimators valid."""
    kind = parse_mode(mode)
    k = _backend.get()
    L, ok = k.looming_grid(_f64(g.phi), _f64(g.phi_dot), _f64(partials.dtheta_dot_dtheta),
                           _f64(partials.dphi_dot_dphi), _u8(partials.valid_theta),
                           _u8(partials.valid_phi), _MODE_CODES[kind], _backend.threads())
    ok = ok.astype(bool)
    return LoomingMap(L, ok, kind, partials.flagged & ok)


def estimate_looming(flow: DenseFlow, intr: CameraIntrinsics, mode="avg",
                     prefilter: bool = False, gate: Optional[float] = DEFAULT_GATE,
                     method: str = "jacobian") -> LoomingMap:
    g = flow_to_angular_rates(flow, intr, prefilter=prefilter)
    return looming_map(g, spatial_partials(g, gate=gate, method=method), mode)


# -- synthetic oracle ------------------------------------------------------------

def rigid_motion_matrix(state: MotionState, dt: float) -> np.ndarray:
    """3x4 map taking a static point's camera coordinates from time 0 to ``dt``.

    Exact solution of x' = -t - omega x x over ``dt`` for constant motion.
    """
    w = state.omega
    twist = np.zeros((4, 4))
    twist[:3, :3] = -np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])
    twist[:3, 3] = -state.t
    return np.ascontiguousarray(expm(twist * dt)[:3, :])


def _plane_in_camera(plane: PlanarPatch):
    n = patch_normal(plane)
    return n, float(n @ plane.a)


def synth_flow(plane: PlanarPatch, state: MotionState, intr: CameraIntrinsics, dt: float) -> DenseFlow:
    """Flow field a pinhole camera would observe while moving past ``plane``.

    ``plane`` and ``state`` are in camera axes at the first frame.
    """
    if not dt > 0:
        raise NonPositiveDt(f"frame interval must be positive, got {dt!r}")
    n, offset = _plane_in_camera(plane)
    k = _backend.get()
    u, v, ok = k.synth_flow_grid(_f64(n), offset, rigid_motion_matrix(state, dt),
                                 float(intr.fx), float(intr.fy), float(intr.cx), float(intr.cy),
                                 int(intr.width), int(intr.height), _backend.threads())
    if not ok.any():
        raise BehindCamera("plane is not visible from the camera at any pixel")
    return DenseFlow(u, v, dt, ok.astype(bool))


@dataclass(eq=False)
class PlaneTruth:
    L: np.ndarray
    r: np.ndarray
    gamma: np.ndarray
    delta: np.ndarray
    valid: np.ndarray


def plane_ground_truth(plane: PlanarPatch, state: MotionState, intr: CameraIntrinsics) -> PlaneTruth:
    """Per-pixel t.e_r / r and tilt angles for a plane seen head-on by ``intr``."""
    n, offset = _plane_in_camera(plane)
    theta, phi = pixel_grid_directions(intr)
    e_r, e_t, e_p = frame_arrays(theta, phi)
    nr, nt, np_ = e_r @ n, e_t @ n, e_p @ n
    valid = np.abs(nr) > 1e-9
    r = np.divide(offset, nr, out=np.full(nr.shape, np.nan), where=valid)
    valid &= r > 0
    r = np.where(valid, r, np.nan)
    L = (e_r @ state.t) / r
    with np.errstate(divide="ignore", invalid="ignore"):
        gamma = np.arctan(nt / nr)
        delta = np.arctan(np_ / nr)
    return PlaneTruth(L, r, gamma, delta, valid)
