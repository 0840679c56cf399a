"""Planar patches: range along a ray, normals, log-range partials, tilt angles,
and the analytic motion field (with all its spatial partials) over a plane.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import BehindCamera, DegeneratePatch, EdgeOnSurface, ParallelRay
from .looming import PartialsSample
from .motion import FieldSample, MotionState, SphericalMotionComponents, decompose
from .spherical import Direction, frame_at, vec3

_DEGENERATE_AREA = 1e-9
_EDGE_ON = 1e-9


@dataclass(frozen=True, eq=False)
class PlanarPatch:
    """Triangle ABC; only its supporting plane is used for range queries."""
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __init__(self, a, b, c):
        object.__setattr__(self, "a", vec3(a))
        object.__setattr__(self, "b", vec3(b))
        object.__setattr__(self, "c", vec3(c))
        if np.linalg.norm(np.cross(self.b - self.a, self.c - self.a)) <= _DEGENERATE_AREA:
            raise DegeneratePatch("patch vertices are collinear")

    @property
    def centroid(self) -> np.ndarray:
        return (self.a + self.b + self.c) / 3.0

    def transformed(self, rot, shift=(0.0, 0.0, 0.0)) -> "PlanarPatch":
        """Apply ``x -> rot @ x + shift`` to every vertex."""
        rot = np.asarray(rot, dtype=float)
        shift = vec3(shift)
        return PlanarPatch(rot @ self.a + shift, rot @ self.b + shift, rot @ self.c + shift)


class TiltAngles(NamedTuple):
    gamma: float
    delta: float


def patch_normal(p: PlanarPatch, viewpoint=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Unit normal oriented toward ``viewpoint``."""
    n = np.cross(p.b - p.a, p.c - p.a)
    norm = np.linalg.norm(n)
    if norm <= _DEGENERATE_AREA:
        raise DegeneratePatch("patch vertices are collinear")
    n = n / norm
    if n @ (p.a - vec3(viewpoint)) > 0:
        n = -n
    return n


def ray_range(p: PlanarPatch, d: Direction, cam_pos=(0.0, 0.0, 0.0), cam_orient=None) -> float:
    """Distance along the ray from ``cam_pos`` to the patch plane.

    ``cam_orient`` maps camera axes into the patch's frame (columns are the
    camera forward/left/up axes); identity when omitted.
    """
    ray = frame_at(d).e_r
    if cam_orient is not None:
        ray = np.asarray(cam_orient, dtype=float) @ ray
    n = np.cross(p.b - p.a, p.c - p.a)
    n = n / np.linalg.norm(n)
    denom = float(n @ ray)
    if abs(denom) < 1e-9:
        raise ParallelRay("ray is parallel to the patch plane")
    r = float(n @ (p.a - vec3(cam_pos))) / denom
    if r <= 0:
        raise BehindCamera("patch plane lies behind the camera along this ray")
    return r


def _normal_ratios(n, d: Direction):
    f = frame_at(d)
    nr = float(f.e_r @ n)
    if abs(nr) <= _EDGE_ON:
        raise EdgeOnSurface("surface is seen edge-on along this direction")
    return f, float(f.e_theta @ n) / nr, float(f.e_phi @ n) / nr


def log_range_partials(n, d: Direction) -> tuple[float, float]:
    """((1/r) dr/dtheta, (1/r) dr/dphi) on a plane with normal ``n``."""
    _, q_theta, q_phi = _normal_ratios(vec3(n), d)
    return -math.cos(d.phi) * q_theta, -q_phi


def tilt_angles(n, d: Direction) -> TiltAngles:
    _, q_theta, q_phi = _normal_ratios(vec3(n), d)
    return TiltAngles(math.atan(q_theta), math.atan(q_phi))


class PlaneField(NamedTuple):
    r: float
    comp: SphericalMotionComponents
    sample: FieldSample
    partials: PartialsSample


def plane_field(n, offset: float, state: MotionState, d: Direction) -> PlaneField:
    """Closed-form motion field and partials for the plane ``n . x = offset``.

    Everything is in camera axes.  Derivatives follow from differentiating
    theta_dot = (-t_theta/r - omega_phi)/cos(phi) and
    phi_dot = -t_phi/r + omega_theta with 1/r = (n.e_r)/offset.
    """
    n = vec3(n)
    f = frame_at(d)
    nr, nt, np_ = float(f.e_r @ n), float(f.e_theta @ n), float(f.e_phi @ n)
    if abs(nr) <= _EDGE_ON:
        raise EdgeOnSurface("surface is seen edge-on along this direction")
    inv_r = nr / offset
    if inv_r <= 0:
        raise BehindCamera("plane lies behind the camera along this ray")
    r = 1.0 / inv_r
    cp, sp = math.cos(d.phi), math.sin(d.phi)
    dinv_dth = cp * nt / offset
    dinv_dph = np_ / offset

    c = decompose(state, d)
    tr, tt, tp = c.t_r, c.t_theta, c.t_phi
    wr, wt, wp = c.omega_r, c.omega_theta, c.omega_phi

    a = -tt * inv_r - wp
    theta_dot = a / cp
    phi_dot = -tp * inv_r + wt

    da_dth = -((-cp * tr + sp * tp) * inv_r + tt * dinv_dth) + sp * wt
    da_dph = -tt * dinv_dph + wr
    partials = PartialsSample(
        dtheta_dot_dtheta=da_dth / cp,
        dphi_dot_dphi=tr * inv_r - tp * dinv_dph,
        dphi_dot_dtheta=sp * tt * inv_r - tp * dinv_dth - cp * wr + sp * wp,
        dtheta_dot_dphi=da_dph / cp + a * sp / (cp * cp),
        dr_dot_dtheta=-cp * tt,
        dr_dot_dphi=-tp,
        log_r_dtheta=-cp * nt / nr,
        log_r_dphi=-np_ / nr,
    )
    return PlaneField(r, c, FieldSample(d, theta_dot, phi_dot, -tr * inv_r), partials)
