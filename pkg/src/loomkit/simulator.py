"""6-DOF observer approaching a tracked point on a planar patch.

Poses are integrated with fixed-step RK4 at the sample rate (quaternion
orientation, renormalised every step).  At each sample the camera-frame
geometry is evaluated in closed form: ground-truth looming, the two
range-free estimates, their errors and the patch tilt angles.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError, LoomError, NearZeroGroundTruth
from .looming import (DEFAULT_LOOMING_FLOOR, error_percent, looming_discrete,
                      looming_est1, looming_est2, looming_exact_phi,
                      looming_exact_theta)
from .motion import MotionState
from .spherical import cart_to_spherical, vec3
from .surface import PlanarPatch, patch_normal, plane_field, tilt_angles

CSV_FIELDS = ("time", "r", "L_true", "L1", "L2", "err1", "err2", "gamma", "delta")

REFERENCE_SPEED = 11.11


class TimeFunction:
    """Named, parameterised ``time -> Vec3`` used for translation and rotation."""

    def __init__(self, role: str, name: str, params: Sequence[float] = ()):
        self.role, self.name, self.params = role, name, [float(p) for p in params]
        if name == "constant":
            if len(self.params) != 3:
                raise ConfigError("constant time function takes three parameters")
            value = vec3(self.params)
            self._f = lambda t: value.copy()
        elif name == "paper" and role == "translation":
            s = self.params[0] if self.params else REFERENCE_SPEED
            self._f = lambda t: np.array([s, 0.1 * s * math.cos(0.1 * t), 0.1 * s * math.cos(0.2 * t)])
        elif name == "paper" and role == "rotation":
            # i and j carry no unit factor as printed; params[0] rescales them.
            k = self.params[0] if self.params else 1.0
            self._f = lambda t: np.array([k * math.cos(0.1 * t), -k * math.cos(0.3 * t),
                                          8.0 * (math.pi / 180.0) * math.sin(0.3 * t)])
        elif name == "zero":
            self._f = lambda t: np.zeros(3)
        else:
            raise ConfigError(f"unknown {role} function {name!r}")

    def __call__(self, t: float) -> np.ndarray:
        return self._f(t)

    def to_dict(self) -> dict:
        return {"name": self.name, "params": list(self.params)}


@dataclass(eq=False)
class SimConfig:
    duration: float
    rate: float
    start_pos: np.ndarray
    start_orient: np.ndarray
    patch: PlanarPatch
    t_fn: Callable[[float], np.ndarray]
    omega_fn: Callable[[float], np.ndarray]
    tracked_point_mode: str = "centroid"
    custom_point: Optional[np.ndarray] = None
    frame: str = "world"

    def __post_init__(self):
        if not self.duration > 0:
            raise ConfigError("duration must be positive")
        if not self.rate > 0:
            raise ConfigError("rate must be positive")
        self.start_pos = vec3(self.start_pos)
        self.start_orient = np.asarray(self.start_orient, dtype=float).reshape(3, 3)
        if not np.allclose(self.start_orient.T @ self.start_orient, np.eye(3), atol=1e-9):
            raise ConfigError("start orientation must be orthonormal")
        if np.linalg.det(self.start_orient) < 0:
            raise ConfigError("start orientation must be right-handed")
        if self.frame not in ("world", "body"):
            raise ConfigError(f"frame must be 'world' or 'body', got {self.frame!r}")
        if self.tracked_point_mode not in ("centroid", "vertex_a", "custom"):
            raise ConfigError(f"unknown tracked point mode {self.tracked_point_mode!r}")
        if self.tracked_point_mode == "custom":
            if self.custom_point is None:
                raise ConfigError("custom tracked point needs 'point'")
            self.custom_point = vec3(self.custom_point)

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.rate))

    def tracked_point(self) -> np.ndarray:
        if self.tracked_point_mode == "centroid":
            return self.patch.centroid
        if self.tracked_point_mode == "vertex_a":
            return self.patch.a.copy()
        return self.custom_point

    def interpretation(self) -> str:
        k = getattr(self.omega_fn, "params", None)
        units = "rad/s"
        if getattr(self.omega_fn, "name", None) == "paper" and k and not math.isclose(k[0], 1.0):
            units = f"scaled by {k[0]!r}"
        return (f"frame={self.frame} omega_ij_units={units} "
                f"tracked_point={self.tracked_point_mode}")


@dataclass
class SimRecord:
    time: float
    r: float
    L_true: float
    L1: float
    L2: float
    err1: float
    err2: float
    gamma: float
    delta: float
    theta: float = math.nan
    phi: float = math.nan
    theta_dot: float = math.nan
    phi_dot: float = math.nan
    L_exact_theta: float = math.nan
    L_exact_phi: float = math.nan
    L_discrete: float = math.nan
    flags: tuple = field(default_factory=tuple)


def reference_config(frame: str = "world", omega_ij_degrees: bool = False,
                     tracked_point_mode: str = "centroid") -> SimConfig:
    forward, left, up = (-1.0, 0.0, 0.0), (0.0, -1.0, 0.0), (0.0, 0.0, 1.0)
    return SimConfig(
        duration=23.0,
        rate=60.0,
        start_pos=(-75.0, 75.0, 44.3),
        start_orient=np.column_stack([forward, left, up]),
        patch=PlanarPatch((80.0, -40.0, 40.0), (80.0, -80.0, 35.0), (85.0, -60.0, 58.0)),
        t_fn=TimeFunction("translation", "paper", [REFERENCE_SPEED]),
        omega_fn=TimeFunction("rotation", "paper", [math.pi / 180.0 if omega_ij_degrees else 1.0]),
        tracked_point_mode=tracked_point_mode,
        frame=frame,
    )


# -- quaternion helpers (w, x, y, z), rotating camera axes into world axes ----

def _qmul(a, b):
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def matrix_to_quat(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    tr = np.trace(m)
    if tr > 0:
        s = 2.0 * math.sqrt(1.0 + tr)
        q = [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = 2.0 * math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
        q = [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
    elif m[1, 1] > m[2, 2]:
        s = 2.0 * math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2])
        q = [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
    else:
        s = 2.0 * math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1])
        q = [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
    q = np.array(q)
    return q / np.linalg.norm(q)


class _Dynamics:
    def __init__(self, cfg: SimConfig):
        self.cfg = cfg

    def __call__(self, t, p, q):
        q = q / np.linalg.norm(q)
        w = np.concatenate([[0.0], self.cfg.omega_fn(t)])
        if self.cfg.frame == "world":
            return self.cfg.t_fn(t), 0.5 * _qmul(w, q)
        return quat_to_matrix(q) @ self.cfg.t_fn(t), 0.5 * _qmul(q, w)


def _rk4_step(f, t, p, q, h):
    k1p, k1q = f(t, p, q)
    k2p, k2q = f(t + h / 2, p + h / 2 * k1p, q + h / 2 * k1q)
    k3p, k3q = f(t + h / 2, p + h / 2 * k2p, q + h / 2 * k2q)
    k4p, k4q = f(t + h, p + h * k3p, q + h * k3q)
    p = p + h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
    q = q + h / 6 * (k1q + 2 * k2q + 2 * k3q + k4q)
    return p, q / np.linalg.norm(q)


def trajectory(cfg: SimConfig):
    """Yield ``(time, position, camera->world rotation)`` per sample."""
    f = _Dynamics(cfg)
    h = 1.0 / cfg.rate
    p = cfg.start_pos.copy()
    q = matrix_to_quat(cfg.start_orient)
    for k in range(cfg.n_samples):
        t = k * h
        yield t, p, quat_to_matrix(q)
        p, q = _rk4_step(f, t, p, q, h)


def camera_motion(cfg: SimConfig, t: float, rot: np.ndarray) -> MotionState:
    if cfg.frame == "world":
        return MotionState(rot.T @ cfg.t_fn(t), rot.T @ cfg.omega_fn(t))
    return MotionState(cfg.t_fn(t), cfg.omega_fn(t))


def _sample(cfg, t, pos, rot, point, n_world, floor) -> SimRecord:
    nan = math.nan
    flags = []
    try:
        state = camera_motion(cfg, t, rot)
        r_vec = rot.T @ (point - pos)
        r, d = cart_to_spherical(r_vec)
        n = rot.T @ n_world
        if n @ r_vec > 0:
            n = -n
        pf = plane_field(n, float(n @ r_vec), state, d)
        L_true = pf.comp.t_r / r
        L1 = looming_est1(pf.partials, pf.sample).value
        L2 = looming_est2(pf.partials).value
        tilt = tilt_angles(n, d)
        ex_t = looming_exact_theta(pf.sample, pf.partials, pf.comp, r).value
        ex_p = looming_exact_phi(pf.sample, pf.partials, pf.comp, r).value
    except LoomError as exc:
        return SimRecord(t, nan, nan, nan, nan, nan, nan, nan, nan, flags=(exc.code,))
    errs = []
    for est in (L1, L2):
        try:
            errs.append(error_percent(est, L_true, floor))
        except NearZeroGroundTruth as exc:
            errs.append(nan)
            if exc.code not in flags:
                flags.append(exc.code)
    return SimRecord(t, r, L_true, L1, L2, errs[0], errs[1], tilt.gamma, tilt.delta,
                     d.theta, d.phi, pf.sample.theta_dot, pf.sample.phi_dot,
                     ex_t, ex_p, flags=tuple(flags))


def run(cfg: SimConfig, floor: float = DEFAULT_LOOMING_FLOOR) -> list[SimRecord]:
    point = cfg.tracked_point()
    n_world = patch_normal(cfg.patch, cfg.start_pos)
    records = [_sample(cfg, t, pos, rot, point, n_world, floor)
               for t, pos, rot in trajectory(cfg)]
    dt = 1.0 / cfg.rate
    for a, b in zip(records, records[1:]):
        if math.isfinite(a.r) and math.isfinite(b.r):
            a.L_discrete = looming_discrete(a.r, b.r, dt)
    return records


def peak_summary(records: Sequence[SimRecord]) -> dict:
    """Values at the ground-truth peak plus each series' own maximum."""
    def argmax(attr):
        best = None
        for i, rec in enumerate(records):
            v = getattr(rec, attr)
            if math.isfinite(v) and (best is None or v > getattr(records[best], attr)):
                best = i
        return best

    i = argmax("L_true")
    at = records[i]
    out = {
        "peak_time": at.time, "peak_L_true": at.L_true,
        "peak_L1": at.L1, "peak_L2": at.L2,
        "peak_err1": at.err1, "peak_err2": at.err2,
        "peak_gamma_deg": math.degrees(at.gamma), "peak_delta_deg": math.degrees(at.delta),
    }
    for attr in ("L1", "L2"):
        j = argmax(attr)
        out[f"max_{attr}"] = getattr(records[j], attr)
        out[f"max_{attr}_time"] = records[j].time
    return out


def export_csv(records: Sequence[SimRecord], path) -> None:
    if not records:
        raise ValueError("no records to export")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for rec in records:
            w.writerow([repr(float(getattr(rec, k))) for k in CSV_FIELDS])


def load_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: float(v) for k, v in row.items()} for row in rows]


# -- JSON configuration ------------------------------------------------------------

def config_from_dict(doc: dict) -> SimConfig:
    if doc.get("preset") == "paper":
        base = reference_config(frame=doc.get("frame", "world"),
                                    omega_ij_degrees=bool(doc.get("omega_ij_degrees", False)),
                                    tracked_point_mode=doc.get("tracked_point", {}).get("mode", "centroid"))
        if base.tracked_point_mode == "custom":
            base.custom_point = vec3(doc["tracked_point"]["point"])
        return base
    try:
        patch = doc["patch"]
        orient = doc.get("start_orient", {"forward": [1, 0, 0], "left": [0, 1, 0], "up": [0, 0, 1]})
        if isinstance(orient, dict):
            orient = np.column_stack([orient["forward"], orient["left"], orient["up"]])
        t_doc = doc.get("t_fn", {"name": "paper"})
        w_doc = doc.get("omega_fn", {"name": "paper"})
        w_params = list(w_doc.get("params", []))
        if w_doc.get("name") == "paper" and doc.get("omega_ij_degrees") and not w_params:
            w_params = [math.pi / 180.0]
        tracked = doc.get("tracked_point", {"mode": "centroid"})
        return SimConfig(
            duration=float(doc["duration"]),
            rate=float(doc["rate"]),
            start_pos=doc["start_pos"],
            start_orient=orient,
            patch=PlanarPatch(patch["a"], patch["b"], patch["c"]),
            t_fn=TimeFunction("translation", t_doc["name"], t_doc.get("params", [])),
            omega_fn=TimeFunction("rotation", w_doc["name"], w_params),
            tracked_point_mode=tracked.get("mode", "centroid"),
            custom_point=tracked.get("point"),
            frame=doc.get("frame", "world"),
        )
    except KeyError as exc:
        raise ConfigError(f"missing config field {exc.args[0]!r}") from None


def load_config(path) -> SimConfig:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
    return config_from_dict(doc)
