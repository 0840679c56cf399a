"""Viewing-sphere conventions shared by every other module.

Camera axes: x along the optical axis, y to the left, z up.  A direction is
the pair (theta, phi) where theta is the azimuth measured from x in the
XY-plane and phi the elevation above the XY-plane.

Image axes: column grows to the right (-y), row grows downward (-z).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import BehindCamera, OutOfBounds, PolarSingularity, ZeroVector

# Directions closer than this to the poles are rejected: tan(phi) and
# 1/cos(phi) show up in the looming and rotation formulas.
POLAR_GUARD = 1e-6
_AXIS_TOL = 1e-9


def vec3(x, y=None, z=None) -> np.ndarray:
    """Build a float64 3-vector from three scalars or one sequence."""
    if y is None:
        v = np.asarray(x, dtype=float).reshape(3)
    else:
        v = np.array([x, y, z], dtype=float)
    return v


@dataclass(frozen=True)
class Direction:
    theta: float
    phi: float

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.phi)):
            raise ValueError("direction angles must be finite")
        if abs(self.phi) >= math.pi / 2 - POLAR_GUARD:
            raise PolarSingularity(f"elevation {self.phi!r} too close to a pole")


class Frame(NamedTuple):
    e_r: np.ndarray
    e_theta: np.ndarray
    e_phi: np.ndarray


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (self.width > 0 and self.height > 0):
            raise ValueError("image dimensions must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "CameraIntrinsics":
        return cls(float(d["fx"]), float(d["fy"]), float(d["cx"]), float(d["cy"]),
                   int(d["width"]), int(d["height"]))

    def to_dict(self) -> dict:
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
                "width": self.width, "height": self.height}


def frame_at(d: Direction) -> Frame:
    ct, st = math.cos(d.theta), math.sin(d.theta)
    cp, sp = math.cos(d.phi), math.sin(d.phi)
    return Frame(
        np.array([cp * ct, cp * st, sp]),
        np.array([-st, ct, 0.0]),
        np.array([-sp * ct, -sp * st, cp]),
    )


def frame_arrays(theta, phi):
    """Vectorised :func:`frame_at`; returns three ``(..., 3)`` arrays."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(phi), np.sin(phi)
    e_r = np.stack([cp * ct, cp * st, sp], axis=-1)
    e_theta = np.stack([-st, ct, np.zeros_like(ct)], axis=-1)
    e_phi = np.stack([-sp * ct, -sp * st, cp], axis=-1)
    return e_r, e_theta, e_phi


def cart_to_spherical(v) -> tuple[float, Direction]:
    """Split a vector into its range and viewing direction."""
    x, y, z = (float(c) for c in np.asarray(v, dtype=float).reshape(3))
    r = math.sqrt(x * x + y * y + z * z)
    if r == 0.0:
        raise ZeroVector("cannot take the direction of a zero vector")
    rho = math.hypot(x, y)
    if rho <= _AXIS_TOL * r:
        raise PolarSingularity("vector lies on the vertical axis")
    phi = math.atan2(z, rho)
    if abs(phi) >= math.pi / 2 - POLAR_GUARD:
        raise PolarSingularity(f"elevation {phi!r} too close to a pole")
    return r, Direction(math.atan2(y, x), phi)


def pixel_ray(col, row, intr: CameraIntrinsics):
    """Unnormalised camera-frame ray through a (possibly fractional) pixel."""
    return (1.0, -(col - intr.cx) / intr.fx, -(row - intr.cy) / intr.fy)


def in_bounds(col, row, intr: CameraIntrinsics):
    """Pixel edges are at -0.5 and size - 0.5."""
    return ((col >= -0.5) & (col <= intr.width - 0.5)
            & (row >= -0.5) & (row <= intr.height - 0.5))


def pixel_to_direction(px, intr: CameraIntrinsics) -> Direction:
    col, row = float(px[0]), float(px[1])
    if not in_bounds(col, row, intr):
        raise OutOfBounds(f"pixel ({col}, {row}) outside {intr.width}x{intr.height} image")
    _, d = cart_to_spherical(pixel_ray(col, row, intr))
    return d


def direction_to_pixel(d: Direction, intr: CameraIntrinsics) -> tuple[float, float]:
    """Inverse of :func:`pixel_to_direction`; the result may leave the image."""
    e_r = frame_at(d).e_r
    if e_r[0] <= 0.0:
        raise BehindCamera("direction does not point in front of the camera")
    return (intr.cx - intr.fx * e_r[1] / e_r[0], intr.cy - intr.fy * e_r[2] / e_r[0])


def pixel_grid_directions(intr: CameraIntrinsics):
    """(theta, phi) at every pixel centre, each shaped ``(height, width)``."""
    cols = np.arange(intr.width, dtype=float)
    rows = np.arange(intr.height, dtype=float)
    cc, rr = np.meshgrid(cols, rows)
    y = -(cc - intr.cx) / intr.fx
    z = -(rr - intr.cy) / intr.fy
    return np.arctan2(y, 1.0), np.arctan2(z, np.hypot(1.0, y))
