import hashlib

import numpy as np
import pytest

from loomkit import MotionState
from loomkit.errors import BadThresholds
from loomkit.flow.pipeline import LoomingMap, estimate_looming, synth_flow
from loomkit.flow.render import (INVALID_GRAY, check_thresholds, read_ppm, render_threat_map,
                                 threat_image, threat_zones)
from loomkit.looming import LoomKind

from conftest import plane_patch

T = (0.05, 0.08, 0.12)
# threat image of the 320x240 head-on wall scene (plane 10 m ahead, 1 m/s, dt 1/30),
# generated once and frozen
GOLDEN = {
    False: "4bdda20812d3ba6e4831de19128fb4107d0427f2468709941c4952736f2ba27a",
    True: "048e0c341235d46f90f728efce553b726a215ea894633a735bf9d807e42517eb",
}


def test_zero_map_is_black():
    img = threat_image(np.zeros((4, 6)), np.ones((4, 6), bool), T)
    assert img.shape == (4, 6, 3) and not img.any()


def test_saturation_and_sign():
    L = np.array([[0.12, 0.5, -0.12, 0.06]])
    img = threat_image(L, np.ones(L.shape, bool), T)
    assert tuple(img[0, 0]) == (255, 0, 0)
    assert tuple(img[0, 1]) == (255, 0, 0)
    assert tuple(img[0, 2]) == (0, 0, 255)
    assert tuple(img[0, 3]) == (128, 0, 0)


def test_invalid_pixels_gray():
    L = np.array([[0.1, np.nan]])
    img = threat_image(L, np.array([[False, False]]), T)
    assert np.all(img == INVALID_GRAY)


def test_zones():
    L = np.array([[0.01, 0.06, 0.1, 0.2, -0.3]])
    assert threat_zones(L, T).tolist() == [[0, 1, 2, 3, 0]]
    img = threat_image(L, np.ones(L.shape, bool), T, zones=True)
    assert img[0, :, 0].tolist() == [0, 85, 170, 255, 0]
    assert img[0, 4, 2] == 255


@pytest.mark.parametrize("bad", [(0.1, 0.1, 0.2), (0.3, 0.2, 0.1), (0.0, 0.1, 0.2), (1, 2)])
def test_bad_thresholds(bad):
    with pytest.raises(BadThresholds):
        check_thresholds(bad)


@pytest.mark.parametrize("zones", [False, True])
def test_golden_head_on_image(tmp_path, intr, zones):
    m = estimate_looming(synth_flow(plane_patch((-1, 0, 0), -10.0), MotionState((1, 0, 0)), intr, 1 / 30), intr)
    path = tmp_path / "t.ppm"
    img = render_threat_map(m, T, path, zones=zones)
    assert hashlib.sha256(img.tobytes()).hexdigest() == GOLDEN[zones]
    assert path.read_bytes().startswith(b"P6\n320 240\n255\n")
    assert np.array_equal(read_ppm(path), img)


def test_render_is_deterministic(tmp_path):
    rng = np.random.default_rng(0)
    m = LoomingMap(rng.normal(size=(30, 40)) * 0.1, rng.random((30, 40)) > 0.2, LoomKind.EST_AVG)
    render_threat_map(m, T, tmp_path / "a.ppm")
    render_threat_map(m, T, tmp_path / "b.ppm")
    assert (tmp_path / "a.ppm").read_bytes() == (tmp_path / "b.ppm").read_bytes()
