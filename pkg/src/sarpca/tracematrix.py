"""Trace-matrix container, fast-time windowing/reassembly, and SARM file I/O.

SARM format: 8-byte magic ``SARMATRX``, little-endian u32 version (=1),
u64 rows, u64 cols, f64 amp_scale, f64 s_axis[rows], f64 t_axis[cols],
then row-major f64 data.  IEEE-754, no padding.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "TraceMatrix",
    "WindowPlan",
    "SarmError",
    "make_windows",
    "reassemble",
    "save",
    "load",
    "save_csv",
]

_MAGIC = b"SARMATRX"
_VERSION = 1
_HEADER = struct.Struct("<IQQd")
_MAX_ELEMS = 1 << 33  # refuse absurd allocations on load


class SarmError(Exception):
    """Raised for malformed SARM files."""


def _check_axis(axis: np.ndarray, n: int, name: str):
    if axis.ndim != 1 or axis.size != n:
        raise ValueError(f"axis mismatch: {name} has length {axis.size}, "
                         f"expected {n}")
    if axis.size >= 2:
        steps = np.diff(axis)
        if np.any(steps <= 0):
            raise ValueError(f"{name} must be strictly increasing")
        step = steps[0]
        # rounding jitter scales with the largest axis value, not the step
        tol = 1e-12 * abs(step) + 8 * np.finfo(float).eps * np.max(np.abs(axis))
        if np.max(np.abs(steps - step)) > tol:
            raise ValueError(f"{name} must be uniformly spaced")


@dataclass
class TraceMatrix:
    """Real matrix of range-compressed echoes: rows are slow time, columns
    fast time.  `amp_scale` stores the factored-out amplitude prefactor."""

    data: np.ndarray
    s_axis: np.ndarray
    t_axis: np.ndarray
    amp_scale: float = 1.0

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=float)
        self.s_axis = np.asarray(self.s_axis, dtype=float)
        self.t_axis = np.asarray(self.t_axis, dtype=float)
        if self.data.ndim != 2:
            raise ValueError("data must be a 2-D matrix")
        _check_axis(self.s_axis, self.data.shape[0], "s_axis")
        _check_axis(self.t_axis, self.data.shape[1], "t_axis")

    @property
    def shape(self):
        return self.data.shape

    @property
    def delta_s(self) -> float:
        return float(self.s_axis[1] - self.s_axis[0])

    @property
    def delta_t(self) -> float:
        return float(self.t_axis[1] - self.t_axis[0])

    def copy(self) -> "TraceMatrix":
        return TraceMatrix(self.data.copy(), self.s_axis.copy(),
                           self.t_axis.copy(), self.amp_scale)


@dataclass(frozen=True)
class WindowPlan:
    """Fast-time windowing scheme: `width` columns per window, `overlap`
    columns shared between neighbours.  Windows tile the column range; the
    last window may be narrower."""

    width: int
    overlap: int = 0

    def __post_init__(self):
        if self.width < 1:
            raise ValueError("window width must be >= 1")
        if not (0 <= self.overlap < self.width):
            raise ValueError("overlap must satisfy 0 <= overlap < width")

    def bounds(self, ncols: int):
        """(start, stop) column ranges covering [0, ncols)."""
        if self.width > ncols:
            raise ValueError(f"window width {self.width} exceeds column "
                             f"count {ncols}")
        step = self.width - self.overlap
        out = []
        start = 0
        while True:
            stop = min(start + self.width, ncols)
            out.append((start, stop))
            if stop >= ncols:
                return out
            start += step

    def count(self, ncols: int) -> int:
        return len(self.bounds(ncols))


def make_windows(tm: TraceMatrix, plan: WindowPlan):
    """Split into fast-time windows (views on the underlying data)."""
    parts = []
    for start, stop in plan.bounds(tm.shape[1]):
        parts.append(TraceMatrix(tm.data[:, start:stop], tm.s_axis,
                                 tm.t_axis[start:stop], tm.amp_scale))
    return parts


def reassemble(parts, plan: WindowPlan) -> TraceMatrix:
    """Inverse of make_windows; overlapped columns are averaged."""
    if not parts:
        raise ValueError("no parts to reassemble")
    nrows = parts[0].shape[0]
    ncols = int(round((parts[-1].t_axis[-1] - parts[0].t_axis[0])
                      / parts[0].delta_t)) + 1
    bounds = plan.bounds(ncols)
    if len(bounds) != len(parts):
        raise ValueError(f"expected {len(bounds)} parts, got {len(parts)}")
    acc = np.zeros((nrows, ncols))
    hits = np.zeros(ncols)
    t_axis = np.empty(ncols)
    for (start, stop), part in zip(bounds, parts):
        if part.shape != (nrows, stop - start):
            raise ValueError("part shape does not conform to the plan")
        acc[:, start:stop] += part.data
        hits[start:stop] += 1.0
        t_axis[start:stop] = part.t_axis
    out = acc / hits
    # bit-exact round trip when nothing overlaps
    out[:, hits == 1.0] = acc[:, hits == 1.0]
    return TraceMatrix(out, parts[0].s_axis.copy(), t_axis,
                       parts[0].amp_scale)


def save(tm: TraceMatrix, path):
    rows, cols = tm.shape
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(_HEADER.pack(_VERSION, rows, cols, tm.amp_scale))
        f.write(np.ascontiguousarray(tm.s_axis, "<f8").tobytes())
        f.write(np.ascontiguousarray(tm.t_axis, "<f8").tobytes())
        f.write(np.ascontiguousarray(tm.data, "<f8").tobytes())


def load(path) -> TraceMatrix:
    raw = Path(path).read_bytes()
    if len(raw) < len(_MAGIC) + _HEADER.size:
        raise SarmError("truncated header")
    if raw[:len(_MAGIC)] != _MAGIC:
        raise SarmError("bad magic")
    version, rows, cols, amp_scale = _HEADER.unpack_from(raw, len(_MAGIC))
    if version != _VERSION:
        raise SarmError(f"unsupported version {version}")
    if rows * cols > _MAX_ELEMS or rows > _MAX_ELEMS or cols > _MAX_ELEMS:
        raise SarmError("dimension overflow")
    off = len(_MAGIC) + _HEADER.size
    need = off + 8 * (rows + cols + rows * cols)
    if len(raw) < need:
        raise SarmError("truncated payload")
    s_axis = np.frombuffer(raw, "<f8", count=rows, offset=off)
    off += 8 * rows
    t_axis = np.frombuffer(raw, "<f8", count=cols, offset=off)
    off += 8 * cols
    data = np.frombuffer(raw, "<f8", count=rows * cols, offset=off)
    try:
        return TraceMatrix(data.reshape(rows, cols).copy(), s_axis.copy(),
                           t_axis.copy(), amp_scale)
    except ValueError as e:
        raise SarmError(f"axis mismatch: {e}") from e


def save_csv(tm: TraceMatrix, path):
    """Row-major CSV with 17 significant digits, for the plotting component.

    First row is the fast-time axis, first column the slow-time axis;
    top-left cell holds the amplitude scale.
    """
    rows, cols = tm.shape
    with open(path, "w") as f:
        header = [f"{tm.amp_scale:.17g}"] + [f"{t:.17g}" for t in tm.t_axis]
        f.write(",".join(header) + "\n")
        for j in range(rows):
            line = [f"{tm.s_axis[j]:.17g}"]
            line += [f"{v:.17g}" for v in tm.data[j]]
            f.write(",".join(line) + "\n")
