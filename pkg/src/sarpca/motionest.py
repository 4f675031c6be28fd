"""Target velocity estimation from separated traces.

Given traces dominated by one moving target and its position at the
center of the aperture (the anchor), recover the in-plane velocity by
focus maximization.  The search exploits the structure of the focus
landscape: range velocity is pinned down by the range walk of the trace
envelope and by the cross-range displacement of the compensated image
peak (a residual range-velocity error of du shifts the focused peak by
du*L/V in cross-range, without defocusing it), while cross-range
velocity is found by a coarse-to-fine focus scan, which is smooth on
the m/s scale in that direction.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .geometry import SceneFrame, Target, Trajectory, delay_rate
from .imaging import ImageGrid, backproject_points
from .tracematrix import TraceMatrix

__all__ = [
    "VelocityEstimate",
    "NoMovingEnergyError",
    "estimate_velocity",
    "trajectory_error",
]

_FLAT_TOL = 1e-6


class NoMovingEnergyError(RuntimeError):
    """The traces carry no usable moving-target energy."""


@dataclass
class VelocityEstimate:
    """Estimated in-plane velocity plus search diagnostics: the scanned
    cross-range velocity grids and their focus scores per level."""

    u_hat: np.ndarray
    score: float
    grids: list = field(default_factory=list)
    scores: list = field(default_factory=list)


def _peak(tm, traj, rho_o, c, patch, u):
    """(max |image|, cross-range offset of the peak) on the patch."""
    vals, _ = backproject_points(tm, patch.positions(), traj, rho_o, c,
                                 motion=np.asarray(u, dtype=float))
    vals = np.abs(vals).reshape(patch.nx, patch.ny)
    i, j = np.unravel_index(np.argmax(vals), vals.shape)
    return float(vals[i, j]), float(patch.y_axis[j])


def _range_walk_velocity(tm, traj, rho_o, c, anchor) -> float:
    """Range velocity from a weighted linear fit of the per-row envelope
    peak delay, relative to a stationary target at the anchor."""
    peaks = tm.t_axis[np.argmax(np.abs(tm.data), axis=1)]
    w = np.max(np.abs(tm.data), axis=1)
    if w.max() <= 0.0:
        raise NoMovingEnergyError("traces are identically zero")
    keep = w > 0.2 * w.max()
    if np.sum(keep) < 3:
        raise NoMovingEnergyError(
            "too few energetic rows to fit the range walk")
    slope = np.polyfit(tm.s_axis[keep], peaks[keep], 1, w=w[keep])[0]
    frame = SceneFrame.from_geometry(traj, rho_o)
    slope_stat = delay_rate(frame, traj, Target(rho0=anchor), c)
    return -c * (slope - slope_stat) / 2.0


def estimate_velocity(tm_sparse: TraceMatrix, traj: Trajectory, rho_o,
                      c: float, anchor, half_speed: float = 25.0,
                      coarse_step: float = 1.0, refine: int = 3,
                      patch_size: float = 5.0,
                      coarse_decimate: int = 4,
                      threads: int = 1) -> VelocityEstimate:
    """Estimate the (range, cross-range) velocity of the dominant moving
    target whose position at s=0 is `anchor`.

    Range velocity starts from the trace envelope's range-walk slope and
    is then corrected from the cross-range offset of the compensated
    image peak.  Cross-range velocity is scanned coarsely over
    [-half_speed, half_speed] and refined with halving steps `refine`
    times.  Raises NoMovingEnergyError for traces with no energy or a
    flat focus landscape.
    """
    anchor = np.asarray(anchor, dtype=float)
    rho_o = np.asarray(rho_o, dtype=float)
    if tm_sparse.shape[0] > 2 * max(coarse_decimate, 1) > 2:
        tm_coarse = TraceMatrix(tm_sparse.data[::coarse_decimate],
                                tm_sparse.s_axis[::coarse_decimate],
                                tm_sparse.t_axis, tm_sparse.amp_scale)
    else:
        tm_coarse = tm_sparse

    ux = float(np.clip(_range_walk_velocity(tm_sparse, traj, rho_o, c,
                                            anchor),
                       -half_speed, half_speed))
    # a residual range-velocity error du displaces the compensated peak
    # by du*L/V in cross-range; invert that to correct ux from the
    # observed peak offset
    L = float(np.linalg.norm(traj.position(0.0) - anchor))
    tsign = float(np.sign(traj.tangent[1])) or 1.0
    gain = traj.speed * tsign / L

    def wide_patch(half_y):
        ny = max(int(np.ceil(half_y / 0.25)) * 2 + 1, 21)
        return ImageGrid(center=anchor, extent=(patch_size, 2.0 * half_y),
                         nx=11, ny=ny)

    def scan(tm, patch, ux_now, uys):
        cands = [np.array([ux_now, uy]) for uy in uys]
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                out = list(pool.map(
                    lambda u: _peak(tm, traj, rho_o, c, patch, u), cands))
        else:
            out = [_peak(tm, traj, rho_o, c, patch, u) for u in cands]
        return np.array(uys), np.array([o[0] for o in out]), \
            np.array([o[1] for o in out])

    grids, all_scores = [], []
    # coarse cross-range-velocity scan with a patch wide enough to keep
    # the (possibly displaced) peak in view
    uys = np.arange(-half_speed, half_speed + 0.5 * coarse_step,
                    coarse_step)
    patch = wide_patch(40.0)
    g, sc, off = scan(tm_coarse, patch, ux, uys)
    grids.append(g)
    all_scores.append(sc)
    top, lo = float(np.max(sc)), float(np.min(sc))
    if top <= 0 or (top - lo) <= _FLAT_TOL * top:
        raise NoMovingEnergyError(
            "no moving energy detected: focus score is flat over the "
            "velocity search box")
    best = int(np.argmax(sc))
    uy = float(g[best])
    ux = float(np.clip(ux + gain * off[best], -half_speed, half_speed))
    step = coarse_step / 2.0
    score = top
    for _ in range(refine):
        patch = wide_patch(10.0)
        uys = np.clip(uy + step * np.arange(-2, 3), -half_speed,
                      half_speed)
        g, sc, off = scan(tm_sparse, patch, ux, uys)
        grids.append(g)
        all_scores.append(sc)
        best = int(np.argmax(sc))
        uy = float(g[best])
        ux = float(np.clip(ux + gain * off[best], -half_speed, half_speed))
        score = float(sc[best])
        step /= 2.0
    return VelocityEstimate(u_hat=np.array([ux, uy]), score=score,
                            grids=grids, scores=all_scores)


def trajectory_error(u_hat, u_true, s_axis) -> np.ndarray:
    """Position error |s| * ||u_hat - u_true|| of the estimated uniform
    trajectory at each slow time (zero at s=0 by construction, since the
    anchor position is shared)."""
    u_hat = np.asarray(u_hat, dtype=float)
    u_true = np.asarray(u_true, dtype=float)
    s_axis = np.asarray(s_axis, dtype=float)
    return np.abs(s_axis) * float(np.linalg.norm(u_hat - u_true))
