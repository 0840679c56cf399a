"""Threat-map rendering as binary PPM (P6)."""
from __future__ import annotations

import numpy as np

from ..errors import BadThresholds

INVALID_GRAY = 128
ZONE_LEVELS = np.array([0, 85, 170, 255], dtype=np.uint8)


def check_thresholds(thresholds) -> tuple[float, float, float]:
    try:
        l1, l2, l3 = (float(x) for x in thresholds)
    except (TypeError, ValueError):
        raise BadThresholds("expected three numeric thresholds") from None
    if not (0 < l1 < l2 < l3):
        raise BadThresholds(f"thresholds must be positive and strictly increasing, got {thresholds!r}")
    return l1, l2, l3


def threat_zones(L, thresholds) -> np.ndarray:
    """0 below L1, 1 low, 2 medium, 3 high danger (L > L3)."""
    l1, l2, l3 = check_thresholds(thresholds)
    L = np.nan_to_num(np.asarray(L, dtype=float), nan=-np.inf)
    return (L > l1).astype(np.uint8) + (L > l2) + (L > l3)


def threat_image(L, valid, thresholds, zones: bool = False) -> np.ndarray:
    """RGB uint8 image: approaching in red, receding in blue, invalid gray."""
    _, _, l3 = check_thresholds(thresholds)
    L = np.asarray(L, dtype=float)
    valid = np.asarray(valid, dtype=bool)
    safe = np.where(valid, L, 0.0)
    img = np.zeros(L.shape + (3,), dtype=np.uint8)
    red = np.floor(255.0 * np.clip(safe / l3, 0.0, 1.0) + 0.5).astype(np.uint8)
    blue = np.floor(255.0 * np.clip(-safe / l3, 0.0, 1.0) + 0.5).astype(np.uint8)
    if zones:
        red = np.where(safe > 0, ZONE_LEVELS[threat_zones(safe, thresholds)], 0).astype(np.uint8)
    img[..., 0] = red
    img[..., 2] = blue
    img[~valid] = INVALID_GRAY
    return img


def write_ppm(path, img) -> None:
    img = np.ascontiguousarray(img, dtype=np.uint8)
    h, w, _ = img.shape
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (w, h))
        fh.write(img.tobytes())


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6":
        raise ValueError("not a binary PPM")
    w, h = (int(x) for x in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3)


def render_threat_map(m, thresholds, path, zones: bool = False) -> np.ndarray:
    img = threat_image(m.L, m.valid, thresholds, zones=zones)
    write_ppm(path, img)
    return img
