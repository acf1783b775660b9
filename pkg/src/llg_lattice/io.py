"""Binary field snapshots and grayscale images.

Snapshot layout (little-endian): magic ``b"LLGF"``, ``u32`` version (1),
``u32 nx``, ``u32 ny``, ``f64 h``, ``u8`` boundary code, then ``nx * ny * 3``
``f64`` values of the ``(nx, ny, 3)`` array in C order.
"""
from __future__ import annotations

import re
import struct
from pathlib import Path

import numpy as np

from .grid import Boundary, GridSpec, VectorField

__all__ = ["SnapshotError", "write_snapshot", "read_snapshot", "write_pgm", "read_pgm"]

MAGIC = b"LLGF"
VERSION = 1
_HEADER = struct.Struct("<4sIIIdB")


class SnapshotError(ValueError):
    """Malformed snapshot file."""


def write_snapshot(u: VectorField, path) -> None:
    spec = u.spec
    header = _HEADER.pack(MAGIC, VERSION, spec.nx, spec.ny, spec.h, int(spec.boundary))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(u.values, dtype="<f8").tobytes())


def read_snapshot(path, far_field=(0.0, 0.0, 1.0)) -> VectorField:
    """Read a snapshot.  The far-field value is not stored and is supplied here."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise SnapshotError("file too short for a snapshot header")
    magic, version, nx, ny, h, code = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotError(f"bad magic {magic!r}")
    if version != VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    count = nx * ny * 3
    body = data[_HEADER.size:]
    if len(body) != 8 * count:
        raise SnapshotError(f"expected {8 * count} value bytes, found {len(body)}")
    try:
        boundary = Boundary(code)
    except ValueError as exc:
        raise SnapshotError(f"unknown boundary code {code}") from exc
    values = np.frombuffer(body, dtype="<f8").reshape(nx, ny, 3).astype(float)
    return VectorField(GridSpec(h, nx, ny, boundary, tuple(far_field)), values)


def write_pgm(image: np.ndarray, path) -> tuple[float, float]:
    """Binary 8-bit PGM of ``image`` mapped linearly from ``[min, max]`` to ``[0, 255]``.

    Rows of the file run along the first array axis.  Returns ``(min, max)``.
    """
    image = np.asarray(image, dtype=float)
    lo, hi = float(image.min()), float(image.max())
    scale = (image - lo) / (hi - lo) if hi > lo else np.zeros_like(image)
    pixels = np.clip(np.rint(255 * scale), 0, 255).astype(np.uint8)
    rows, cols = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())
    return lo, hi


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    m = re.match(rb"P5\s+(\d+)\s+(\d+)\s+255\s", data)
    if m is None:
        raise ValueError("not an 8-bit binary PGM")
    cols, rows = int(m.group(1)), int(m.group(2))
    return np.frombuffer(data[m.end(): m.end() + rows * cols], dtype=np.uint8).reshape(rows, cols)
