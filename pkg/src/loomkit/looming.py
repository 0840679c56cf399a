"""Looming L = -rdot/r: ground truth, closed forms from the motion field,
range-free estimators, tilt-angle forms, rotation recovery and
equal-looming spheres.

The ``*_raw`` helpers are plain arithmetic and accept numpy arrays; the
flow pipeline evaluates them per pixel.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import (MissingRangePartials, NearZeroGroundTruth, NonPositiveDt,
                     NonPositiveLooming, NonPositiveRange, PolarSingularity,
                     TiltSingularity, ZeroTranslation)
from .motion import FieldSample, SphericalMotionComponents
from .spherical import POLAR_GUARD, vec3

DEFAULT_LOOMING_FLOOR = 1e-6


class LoomKind(enum.Enum):
    GROUND_TRUTH = "GroundTruth"
    EXACT_THETA = "ExactTheta"
    EXACT_PHI = "ExactPhi"
    EST1 = "Est1"
    EST2 = "Est2"
    EST_AVG = "EstAvg"
    TILT_THETA = "TiltTheta"
    TILT_PHI = "TiltPhi"


@dataclass(frozen=True)
class LoomingValue:
    value: float
    kind: LoomKind

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class PartialsSample:
    """Spatial partials of the motion field at one direction.

    Only the first two are measurable from flow; the rest need range and
    are ``None`` on flow-derived samples.
    """
    dtheta_dot_dtheta: float
    dphi_dot_dphi: float
    dphi_dot_dtheta: Optional[float] = None
    dtheta_dot_dphi: Optional[float] = None
    dr_dot_dtheta: Optional[float] = None
    dr_dot_dphi: Optional[float] = None
    log_r_dtheta: Optional[float] = None
    log_r_dphi: Optional[float] = None

    def scaled_rates(self, k: float) -> "PartialsSample":
        """Scale every rate-bearing partial by ``k`` (range partials are unitless)."""
        def s(x):
            return None if x is None else k * x
        return PartialsSample(s(self.dtheta_dot_dtheta), s(self.dphi_dot_dphi),
                              s(self.dphi_dot_dtheta), s(self.dtheta_dot_dphi),
                              s(self.dr_dot_dtheta), s(self.dr_dot_dphi),
                              self.log_r_dtheta, self.log_r_dphi)


class LoomingSphere(NamedTuple):
    center: np.ndarray
    radius: float


class RecoveredRotation(NamedTuple):
    omega_r: float
    omega_theta: float
    omega_phi: float
    omega_r_alt: float


def _check_phi(phi: float):
    if abs(phi) >= math.pi / 2 - POLAR_GUARD:
        raise PolarSingularity(f"elevation {phi!r} too close to a pole")


def _need(*values):
    if any(v is None for v in values):
        raise MissingRangePartials("range-dependent partials are required")


# -- array-friendly formulas -------------------------------------------------

def est1_raw(dtheta_dot_dtheta, phi_dot, phi):
    return dtheta_dot_dtheta - phi_dot * np.tan(phi)


def est2_raw(dphi_dot_dphi):
    return dphi_dot_dphi


def est_avg_raw(dtheta_dot_dtheta, dphi_dot_dphi, phi_dot, phi):
    return 0.5 * (est1_raw(dtheta_dot_dtheta, phi_dot, phi) + dphi_dot_dphi)


# -- public operations ---------------------------------------------------------

def looming_discrete(r1: float, r2: float, dt: float) -> float:
    """Finite-difference looming between two range samples."""
    if not r1 > 0:
        raise NonPositiveRange(f"r1 must be positive, got {r1!r}")
    if not dt > 0:
        raise NonPositiveDt(f"dt must be positive, got {dt!r}")
    return -((r2 - r1) / dt) / r1


def looming_ground_truth(comp: SphericalMotionComponents, r: float) -> LoomingValue:
    """L = t.e_r / r, the continuous-time definition."""
    if not r > 0:
        raise NonPositiveRange(f"range must be positive, got {r!r}")
    return LoomingValue(comp.t_r / r, LoomKind.GROUND_TRUTH)


def looming_exact_theta(s: FieldSample, p: PartialsSample,
                        comp: SphericalMotionComponents, r: float) -> LoomingValue:
    _need(p.log_r_dtheta)
    phi = s.dir.phi
    _check_phi(phi)
    value = (p.dtheta_dot_dtheta - s.phi_dot * math.tan(phi)
             - (comp.t_theta / r) * (1.0 / math.cos(phi)) * p.log_r_dtheta)
    return LoomingValue(value, LoomKind.EXACT_THETA)


def looming_exact_phi(s: FieldSample, p: PartialsSample,
                      comp: SphericalMotionComponents, r: float) -> LoomingValue:
    _need(p.log_r_dphi)
    _check_phi(s.dir.phi)
    value = p.dphi_dot_dphi - (comp.t_phi / r) * p.log_r_dphi
    return LoomingValue(value, LoomKind.EXACT_PHI)


def looming_est1(p: PartialsSample, s: FieldSample) -> LoomingValue:
    _check_phi(s.dir.phi)
    return LoomingValue(float(est1_raw(p.dtheta_dot_dtheta, s.phi_dot, s.dir.phi)), LoomKind.EST1)


def looming_est2(p: PartialsSample) -> LoomingValue:
    return LoomingValue(float(est2_raw(p.dphi_dot_dphi)), LoomKind.EST2)


def looming_est_avg(p: PartialsSample, s: FieldSample) -> LoomingValue:
    _check_phi(s.dir.phi)
    value = est_avg_raw(p.dtheta_dot_dtheta, p.dphi_dot_dphi, s.phi_dot, s.dir.phi)
    return LoomingValue(float(value), LoomKind.EST_AVG)


def _check_tilt(angle: float, name: str):
    if abs(angle) >= math.pi / 2 - POLAR_GUARD:
        raise TiltSingularity(f"tilt angle {name}={angle!r} too close to +-pi/2")


def looming_tilt_theta(p: PartialsSample, s: FieldSample, comp: SphericalMotionComponents,
                       r: float, gamma: float) -> LoomingValue:
    _check_phi(s.dir.phi)
    _check_tilt(gamma, "gamma")
    value = looming_est1(p, s).value + (comp.t_theta / r) * math.tan(gamma)
    return LoomingValue(value, LoomKind.TILT_THETA)


def looming_tilt_phi(p: PartialsSample, comp: SphericalMotionComponents,
                     r: float, delta: float) -> LoomingValue:
    _check_tilt(delta, "delta")
    value = p.dphi_dot_dphi + (comp.t_phi / r) * math.tan(delta)
    return LoomingValue(value, LoomKind.TILT_PHI)


def recover_rotation(s: FieldSample, p: PartialsSample,
                     comp: SphericalMotionComponents, r: float) -> RecoveredRotation:
    """Spherical rotation components from the motion field and range partials.

    ``omega_r`` comes from the phi-derivatives, ``omega_r_alt`` from the
    theta-derivatives; they agree on a consistent field.
    """
    _need(p.dr_dot_dtheta, p.dr_dot_dphi, p.log_r_dtheta, p.log_r_dphi,
          p.dtheta_dot_dphi, p.dphi_dot_dtheta)
    phi = s.dir.phi
    _check_phi(phi)
    cp, sp = math.cos(phi), math.sin(phi)
    omega_phi = p.dr_dot_dtheta / (r * cp) - s.theta_dot * cp
    omega_theta = -p.dr_dot_dphi / r + s.phi_dot
    omega_r = -s.theta_dot * sp + cp * p.dtheta_dot_dphi - (comp.t_theta / r) * p.log_r_dphi
    omega_r_alt = (-s.theta_dot * sp - p.dphi_dot_dtheta / cp
                   + p.log_r_dtheta * comp.t_phi / (r * cp))
    return RecoveredRotation(omega_r, omega_theta, omega_phi, omega_r_alt)


def error_percent(L_i: float, L: float, floor: float = DEFAULT_LOOMING_FLOOR) -> float:
    """Relative estimation error in percent."""
    if not abs(L) > floor:
        raise NearZeroGroundTruth(f"|L|={abs(L)!r} is below the {floor!r} 1/s floor")
    return (L_i - L) / L * 100.0


def equal_looming_sphere(t, L: float) -> LoomingSphere:
    """Sphere through the camera centre on which every point has looming ``L``."""
    t = vec3(t)
    speed = float(np.linalg.norm(t))
    if speed == 0.0:
        raise ZeroTranslation("equal-looming spheres need a nonzero translation")
    if not L > 0:
        raise NonPositiveLooming(f"looming must be positive, got {L!r}")
    return LoomingSphere(t / (2.0 * L), speed / (2.0 * L))


def looming_from_radial(t, point) -> float:
    """t.e_r / r for a static point at ``point`` (camera at the origin)."""
    point = vec3(point)
    return float(vec3(t) @ point / (point @ point))
