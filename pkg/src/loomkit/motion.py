"""Relative velocity field and the angular motion field it induces."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .spherical import Direction, cart_to_spherical, frame_at, vec3


@dataclass(frozen=True, eq=False)
class MotionState:
    """Camera translation ``t`` (m/s) and rotation ``omega`` (rad/s), camera axes."""
    t: np.ndarray
    omega: np.ndarray

    def __init__(self, t, omega=(0.0, 0.0, 0.0)):
        object.__setattr__(self, "t", vec3(t))
        object.__setattr__(self, "omega", vec3(omega))
        if not (np.all(np.isfinite(self.t)) and np.all(np.isfinite(self.omega))):
            raise ValueError("motion components must be finite")


@dataclass(frozen=True)
class SphericalMotionComponents:
    t_r: float
    t_theta: float
    t_phi: float
    omega_r: float
    omega_theta: float
    omega_phi: float

    def scaled(self, k: float) -> "SphericalMotionComponents":
        return SphericalMotionComponents(*(k * x for x in (
            self.t_r, self.t_theta, self.t_phi,
            self.omega_r, self.omega_theta, self.omega_phi)))


@dataclass(frozen=True)
class FieldSample:
    dir: Direction
    theta_dot: float
    phi_dot: float
    r_dot_over_r: Optional[float] = None


def relative_velocity(state: MotionState, r_vec) -> np.ndarray:
    """Velocity of a static scene point as seen from the moving camera."""
    r_vec = vec3(r_vec)
    return -state.t - np.cross(state.omega, r_vec)


def decompose(state: MotionState, d: Direction) -> SphericalMotionComponents:
    f = frame_at(d)
    t, w = state.t, state.omega
    return SphericalMotionComponents(
        float(t @ f.e_r), float(t @ f.e_theta), float(t @ f.e_phi),
        float(w @ f.e_r), float(w @ f.e_theta), float(w @ f.e_phi),
    )


def field_from_components(comp: SphericalMotionComponents, r: float, d: Direction) -> FieldSample:
    """Motion field of a point at range ``r`` along ``d``."""
    return FieldSample(
        d,
        (-comp.t_theta / r - comp.omega_phi) / math.cos(d.phi),
        -comp.t_phi / r + comp.omega_theta,
        -comp.t_r / r,
    )


def field_sample(state: MotionState, r_vec) -> FieldSample:
    r, d = cart_to_spherical(r_vec)
    return field_from_components(decompose(state, d), r, d)
