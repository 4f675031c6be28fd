"""Stand-alone reader for the SARM binary matrix container.

Layout (all little-endian, no padding):

    8 bytes   magic ``SARMATRX``
    u32       version (must be 1)
    u64       rows
    u64       cols
    f64       amp_scale
    rows f64  row axis
    cols f64  column axis
    rows*cols f64, row-major  data
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"SARMATRX"
_HEADER = struct.Struct("<8sIQQd")

__all__ = ["Sarm", "SarmFormatError", "read_sarm"]


class SarmFormatError(ValueError):
    """The file is not a well-formed SARM container."""


@dataclass(frozen=True)
class Sarm:
    data: np.ndarray
    row_axis: np.ndarray
    col_axis: np.ndarray
    amp_scale: float

    @property
    def shape(self) -> tuple:
        return self.data.shape


def read_sarm(path) -> Sarm:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _HEADER.size:
        raise SarmFormatError(f"{path}: shorter than the SARM header")
    magic, version, rows, cols, amp_scale = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SarmFormatError(f"{path}: bad magic {magic!r}")
    if version != 1:
        raise SarmFormatError(f"{path}: unsupported version {version}")
    need = _HEADER.size + 8 * (rows + cols + rows * cols)
    if len(raw) != need:
        raise SarmFormatError(
            f"{path}: expected {need} bytes for {rows}x{cols}, "
            f"got {len(raw)}")
    off = _HEADER.size
    row_axis = np.frombuffer(raw, "<f8", rows, off)
    off += 8 * rows
    col_axis = np.frombuffer(raw, "<f8", cols, off)
    off += 8 * cols
    data = np.frombuffer(raw, "<f8", rows * cols, off).reshape(rows, cols)
    return Sarm(data=data, row_axis=row_axis, col_axis=col_axis,
                amp_scale=float(amp_scale))
