"""Temporally bilinear voxel-grid encoding and its binary file format."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from . import _backend
from .errors import FormatError, InputError
from .types import EventStream, VoxelGrid

MAGIC = b"VOXG"
_HEADER = struct.Struct("<4sIII")


def encode_voxel_grid(stream: EventStream, t0: int, t1: int, bins: int = 5, *, backend=None) -> VoxelGrid:
    """Accumulate events in ``[t0, t1)`` into ``bins`` temporal bins.

    An event at normalized time ``t* = (bins - 1)(t - t0) / (t1 - t0)``
    adds ``polarity * max(0, 1 - |b - t*|)`` to each bin ``b``. No
    normalization is applied.
    """
    if not t0 < t1:
        raise InputError(f"voxel interval requires t0 < t1, got [{t0}, {t1})")
    if int(bins) != bins or bins < 1:
        raise InputError(f"bins must be a positive integer, got {bins!r}")
    bins = int(bins)
    kernels = _backend.kernels if backend is None else _backend.load(backend)
    w, h = stream.width, stream.height
    sel = (stream.t >= t0) & (stream.t < t1)
    t = stream.t[sel]
    tstar = (bins - 1) * (t - t0).astype(np.float64) / float(t1 - t0)
    pix = stream.y[sel].astype(np.int64) * w + stream.x[sel]
    flat = kernels.voxel_accumulate(
        np.ascontiguousarray(tstar), np.ascontiguousarray(pix), np.ascontiguousarray(stream.p[sel]), bins, w * h
    )
    return VoxelGrid(flat.reshape(bins, h, w), t0, t1)


def normalized(grid: VoxelGrid) -> VoxelGrid:
    """Copy scaled so the largest absolute value is 1 (all-zero grids unchanged)."""
    peak = np.abs(grid.values).max()
    values = grid.values / peak if peak > 0 else grid.values
    return VoxelGrid(values, grid.t0, grid.t1, {"normalized_by": float(peak)})


def write_voxel_file(grid: VoxelGrid, path) -> Path:
    """Write header + little-endian float32 payload; sidecar ``<path>.txt`` holds "t0 t1"."""
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, grid.bins, grid.height, grid.width))
        fh.write(grid.values.astype("<f4").tobytes(order="C"))
    sidecar = path.with_name(path.name + ".txt")
    sidecar.write_text(f"{grid.t0} {grid.t1}\n")
    return sidecar


def read_voxel_file(path) -> VoxelGrid:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated voxel header")
    magic, bins, height, width = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    payload = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    if payload.size != bins * height * width:
        raise FormatError(f"{path}: expected {bins * height * width} values, found {payload.size}")
    sidecar = path.with_name(path.name + ".txt")
    t0, t1 = 0, 1
    if sidecar.exists():
        t0, t1 = (int(v) for v in sidecar.read_text().split())
    return VoxelGrid(payload.reshape(bins, height, width).astype(np.float64), t0, t1)
