import math

import numpy as np
import pytest

from loomkit import CameraIntrinsics, Direction, MotionState, PlanarPatch


def plane_patch(normal, offset):
    """Three points spanning the plane ``normal . x = offset``."""
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    base = n * offset
    u = np.cross(n, [0.0, 0.0, 1.0])
    if np.linalg.norm(u) < 1e-6:
        u = np.cross(n, [0.0, 1.0, 0.0])
    u /= np.linalg.norm(u)
    return PlanarPatch(base, base + u, base + np.cross(n, u))


def random_direction(rng, max_phi=1.2):
    return Direction(rng.uniform(-math.pi, math.pi), rng.uniform(-max_phi, max_phi))


def random_plane_config(rng):
    """A plane in front of a random viewing direction plus a random rigid motion.

    Returns (normal, offset, state, direction) with ``normal . x = offset`` and the
    normal facing the camera (offset < 0), tilt kept away from edge-on.
    """
    while True:
        d = random_direction(rng)
        from loomkit.spherical import frame_at
        e_r = frame_at(d).e_r
        n = -e_r + 0.6 * rng.normal(size=3)
        n /= np.linalg.norm(n)
        if n @ e_r < -0.3:
            break
    offset = -rng.uniform(2.0, 40.0)
    state = MotionState(rng.normal(size=3) * 2.0, rng.normal(size=3) * 0.5)
    return n, offset, state, d


def random_flow_scene(rng):
    """Forward-dominant motion past a plane roughly facing the camera.

    Normal within about 23 degrees of the optical axis, plane 5-30 m away,
    forward speed 0.5-3 m/s with up to 20% lateral/vertical drift, rotation up
    to 0.3 rad/s per axis.  Returns (plane, t, omega).
    """
    n = np.array([-1.0, rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)])
    plane = plane_patch(n / np.linalg.norm(n), -rng.uniform(5, 30))
    t = np.array([1.0, rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)]) * rng.uniform(0.5, 3)
    return plane, t, rng.uniform(-0.3, 0.3, 3)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def intr():
    return CameraIntrinsics(fx=300.0, fy=300.0, cx=159.5, cy=119.5, width=320, height=240)
