"""Platform trajectories, target kinematics, travel times, and the scalar
offset/motion parameters that control the rank of the trace matrix.

Coordinate convention: scene axes are (range, cross-range, elevation) with
origin at the reference point.  The unit range vector points from the
reference point toward the platform position at the center of the aperture.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RadarConstants",
    "Trajectory",
    "LinearTrajectory",
    "CircularTrajectory",
    "Target",
    "SceneFrame",
    "FresnelCheck",
    "travel_time",
    "delta_tau",
    "alpha",
    "delay_rate",
    "alpha_j_beta",
    "fresnel_check",
]

_UNIT_TOL = 1e-12


def _as_vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class RadarConstants:
    """Wave speed, carrier, and bandwidth of the probing signal."""

    c: float
    nu_o: float
    B: float

    def __post_init__(self):
        if self.c <= 0 or self.nu_o <= 0 or self.B <= 0:
            raise ValueError("c, nu_o, B must all be strictly positive")
        if self.B >= self.nu_o:
            raise ValueError("bandwidth must be below the carrier frequency")

    @property
    def omega_o(self) -> float:
        """Angular carrier frequency, 2*pi*nu_o."""
        return 2.0 * np.pi * self.nu_o

    @property
    def lambda_o(self) -> float:
        """Carrier wavelength, c/nu_o."""
        return self.c / self.nu_o


class Trajectory:
    """Platform path r(s), parametrized by slow time s (arc length / speed)."""

    kind = "abstract"
    center: np.ndarray
    speed: float
    tangent: np.ndarray

    def position(self, s):
        raise NotImplementedError


@dataclass(frozen=True)
class LinearTrajectory(Trajectory):
    center: np.ndarray
    speed: float
    tangent: np.ndarray
    kind: str = field(default="linear", init=False)

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vec3(self.center))
        t = _as_vec3(self.tangent)
        if abs(np.linalg.norm(t) - 1.0) > _UNIT_TOL:
            raise ValueError("tangent must be a unit vector")
        object.__setattr__(self, "tangent", t)
        if self.speed < 0:
            raise ValueError("speed must be nonnegative")

    def position(self, s):
        s = np.asarray(s, dtype=float)
        return self.center + np.multiply.outer(self.speed * s, self.tangent)


@dataclass(frozen=True)
class CircularTrajectory(Trajectory):
    """Circle of radius R in the horizontal plane of `center`, parametrized by
    arc length so that s and speed mean the same thing as the linear case.
    Passes through `center` at s=0 with the given tangent."""

    center: np.ndarray
    speed: float
    tangent: np.ndarray
    radius: float
    kind: str = field(default="circular", init=False)

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vec3(self.center))
        t = _as_vec3(self.tangent)
        if abs(np.linalg.norm(t) - 1.0) > _UNIT_TOL:
            raise ValueError("tangent must be a unit vector")
        if abs(t[2]) > _UNIT_TOL:
            raise ValueError("circular trajectory tangent must be horizontal")
        object.__setattr__(self, "tangent", t)
        if self.speed < 0:
            raise ValueError("speed must be nonnegative")
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @property
    def _normal(self) -> np.ndarray:
        # horizontal inward normal (left of the tangent)
        t = self.tangent
        return np.array([-t[1], t[0], 0.0])

    def position(self, s):
        s = np.asarray(s, dtype=float)
        theta = self.speed * s / self.radius
        n = self._normal
        dev = np.multiply.outer(self.radius * (1.0 - np.cos(theta)), n)
        along = np.multiply.outer(self.radius * np.sin(theta), self.tangent)
        return self.center + along + dev


@dataclass(frozen=True)
class Target:
    """Point target on the ground: position at s=0, in-plane velocity,
    reflectivity amplitude."""

    rho0: np.ndarray
    u: np.ndarray = field(default_factory=lambda: np.zeros(3))
    sigma: float = 1.0

    def __post_init__(self):
        r = _as_vec3(self.rho0)
        u = _as_vec3(self.u)
        if abs(u[2]) > 0:
            raise ValueError("target velocity must be in-plane (u_z = 0)")
        object.__setattr__(self, "rho0", r)
        object.__setattr__(self, "u", u)

    def position(self, s):
        s = np.asarray(s, dtype=float)
        return self.rho0 + np.multiply.outer(s, self.u)

    @property
    def is_moving(self) -> bool:
        return bool(np.linalg.norm(self.u) > 0)


@dataclass(frozen=True)
class SceneFrame:
    """Reference point, range direction at the aperture center, and the
    projector onto the plane orthogonal to it."""

    rho_o: np.ndarray
    m_hat: np.ndarray
    P: np.ndarray
    L: float

    @classmethod
    def from_geometry(cls, traj: Trajectory, rho_o) -> "SceneFrame":
        rho_o = _as_vec3(rho_o)
        r0 = traj.position(0.0)
        d = r0 - rho_o
        L = float(np.linalg.norm(d))
        if L <= 0:
            raise ValueError("reference point coincides with the platform")
        m = d / L
        P = np.eye(3) - np.outer(m, m)
        return cls(rho_o=rho_o, m_hat=m, P=P, L=L)


def travel_time(traj: Trajectory, s, rho, c: float):
    """Round-trip travel time 2|r(s) - rho|/c."""
    if c <= 0:
        raise ValueError("wave speed must be positive")
    r = traj.position(s)
    d = np.linalg.norm(np.asarray(rho, dtype=float) - r, axis=-1)
    return 2.0 * d / c


def delta_tau(traj: Trajectory, s, rho_s, rho_o, c: float):
    """Travel-time offset tau(s, rho(s)) - tau(s, rho_o)."""
    return travel_time(traj, s, rho_s, c) - travel_time(traj, s, rho_o, c)


def alpha(frame: SceneFrame, traj: Trajectory, target: Target,
          c: float) -> float:
    """Dimensionless rate parameter of the one-target covariance model.

    Linear in the range velocity and in the projected offset of the target
    from the reference point:

        alpha = 2 u.m/c - 2 V t.P(rho - rho_o)/(c L) + 2 u.P(rho - rho_o)/(c L)
    """
    pd = frame.P @ (target.rho0 - frame.rho_o)
    u = target.u
    return (2.0 * float(u @ frame.m_hat) / c
            - 2.0 * traj.speed * float(traj.tangent @ pd) / (c * frame.L)
            + 2.0 * float(u @ pd) / (c * frame.L))


def delay_rate(frame: SceneFrame, traj: Trajectory, target: Target,
               c: float) -> float:
    """Analytic d/ds of the travel-time offset at s=0.

    Equals +/- alpha term by term; this is the signed slope that a finite
    difference of delta_tau reproduces, used by the linearization check.
    """
    pd = frame.P @ (target.rho0 - frame.rho_o)
    u = target.u
    return (-2.0 * float(u @ frame.m_hat) / c
            - 2.0 * traj.speed * float(traj.tangent @ pd) / (c * frame.L)
            + 2.0 * float(u @ pd) / (c * frame.L))


def alpha_j_beta(frame: SceneFrame, traj: Trajectory, rho_1, rho_2,
                 c: float):
    """Rate and range-offset parameters for two stationary targets.

    Returns (alpha_1, alpha_2, beta) where beta carries the range offsets
    including the quadratic correction in the offset over range ratio.
    """
    rho_1 = _as_vec3(rho_1)
    rho_2 = _as_vec3(rho_2)
    alphas = []
    for rho in (rho_1, rho_2):
        pd = frame.P @ (rho - frame.rho_o)
        alphas.append(-2.0 * traj.speed * float(traj.tangent @ pd)
                      / (c * frame.L))
    beta = 0.0
    for j, rho in enumerate((rho_1, rho_2), start=1):
        r = float(frame.m_hat @ (rho - frame.rho_o))
        beta += (-1.0) ** j * (r + r * r / (2.0 * frame.L))
    beta *= 2.0 / c
    return alphas[0], alphas[1], beta


@dataclass(frozen=True)
class FresnelCheck:
    number: float
    bound: float
    ok: bool
    marginal: bool


def fresnel_check(aperture: float, constants: RadarConstants,
                  frame: SceneFrame, traj: Trajectory,
                  imaging_radius: float, target_speed: float = 0.0,
                  safety: float = 1.0) -> FresnelCheck:
    """Fresnel number a^2/(lambda L) against min(L/R_I, V/|u|).

    The bound is interpreted as <= (times `safety`); `marginal` flags
    anything above half the bound.
    """
    if aperture < 0:
        raise ValueError("aperture must be nonnegative")
    number = aperture ** 2 / (constants.lambda_o * frame.L)
    bound = frame.L / imaging_radius
    if target_speed > 0:
        bound = min(bound, traj.speed / target_speed)
    ok = number <= safety * bound
    marginal = ok and number > 0.5 * safety * bound
    return FresnelCheck(number=number, bound=bound, ok=ok, marginal=marginal)
