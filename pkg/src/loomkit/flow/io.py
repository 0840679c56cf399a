"""Middlebury ``.flo`` files, intrinsics JSON and CSV grid dumps."""
from __future__ import annotations

import json
import struct

import numpy as np

from ..errors import BadMagic, TruncatedFile
from ..spherical import CameraIntrinsics

FLO_MAGIC = 202021.25
_HEADER = struct.Struct("<fii")


def read_flo(path) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(u, v)`` as float32 ``(height, width)`` arrays."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise TruncatedFile(f"{path}: {len(data)} bytes is shorter than the header")
    magic, width, height = _HEADER.unpack_from(data)
    if magic != FLO_MAGIC:
        raise BadMagic(f"{path}: bad sanity tag {magic!r}")
    if width <= 0 or height <= 0:
        raise TruncatedFile(f"{path}: nonsensical dimensions {width}x{height}")
    need = _HEADER.size + 8 * width * height
    if len(data) < need:
        raise TruncatedFile(f"{path}: expected {need} bytes, found {len(data)}")
    uv = np.frombuffer(data, dtype="<f4", count=2 * width * height, offset=_HEADER.size)
    uv = uv.reshape(height, width, 2)
    return uv[..., 0].astype(np.float32), uv[..., 1].astype(np.float32)


def write_flo(path, u, v) -> None:
    u = np.asarray(u, dtype="<f4")
    v = np.asarray(v, dtype="<f4")
    if u.shape != v.shape or u.ndim != 2:
        raise ValueError("u and v must be 2-D arrays of the same shape")
    height, width = u.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FLO_MAGIC, width, height))
        fh.write(np.stack([u, v], axis=-1).tobytes())


def load_intrinsics(path) -> CameraIntrinsics:
    with open(path) as fh:
        return CameraIntrinsics.from_dict(json.load(fh))


def save_intrinsics(path, intr: CameraIntrinsics) -> None:
    with open(path, "w") as fh:
        json.dump(intr.to_dict(), fh, indent=2)


def write_grid_csv(path, values, valid=None) -> None:
    """Row-major dump, one image row per line; invalid pixels as ``nan``."""
    values = np.asarray(values, dtype=float)
    if valid is not None:
        values = np.where(np.asarray(valid, dtype=bool), values, np.nan)
    with open(path, "w") as fh:
        for row in values:
            fh.write(",".join(repr(float(x)) for x in row))
            fh.write("\n")


def read_grid_csv(path) -> np.ndarray:
    with open(path) as fh:
        rows = [[float(x) for x in line.split(",")] for line in fh if line.strip()]
    return np.array(rows, dtype=float)
