"""Scene configuration: INI-style config files with unit-suffixed keys,
scenario presets, and construction of the simulation objects."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import (CircularTrajectory, LinearTrajectory, RadarConstants,
                       SceneFrame, Target, Trajectory)
from .rpca import PcpParams
from .signal import SamplingGrid, delay_spread
from .tracematrix import WindowPlan

__all__ = [
    "SceneConfig",
    "TargetSpec",
    "ConfigError",
    "load_config",
    "save_config",
    "preset",
    "PRESETS",
]


class ConfigError(ValueError):
    """Malformed scene configuration; the message names the bad key."""


@dataclass(frozen=True)
class TargetSpec:
    position_m: tuple
    velocity_m_s: tuple = (0.0, 0.0)
    reflectivity: float = 1.0

    def to_target(self) -> Target:
        u = self.velocity_m_s
        return Target(rho0=np.array(self.position_m, dtype=float),
                      u=np.array([u[0], u[1], 0.0]),
                      sigma=self.reflectivity)

    @property
    def is_moving(self) -> bool:
        return any(v != 0.0 for v in self.velocity_m_s)


@dataclass
class SceneConfig:
    """Everything needed to run a simulation and its analysis chain."""

    # radar
    wave_speed_m_s: float = 3.0e8
    carrier_hz: float = 9.6e9
    bandwidth_hz: float = 622.0e6
    # trajectory
    trajectory_kind: str = "linear"
    trajectory_center_m: tuple = (10000.0, 0.0, 0.0)
    trajectory_speed_m_s: float = 70.0
    trajectory_tangent: tuple = (0.0, 1.0, 0.0)
    trajectory_radius_m: float = 0.0
    # sampling
    n_slow: int = 148
    delta_s_s: float = 0.015
    guard_pulse_widths: float = 10.0
    # scene
    reference_m: tuple = (0.0, 0.0, 0.0)
    seed: int = 20260823
    n_random_stationary: int = 0
    placement_halfwidth_m: float = 25.0
    targets: list = field(default_factory=list)
    # windowing / solver
    window_width_cols: int = 450
    window_overlap_cols: int = 0
    pcp_tol: float = 1e-7
    pcp_max_iters: int = 1000
    # imaging
    image_extent_m: tuple = (70.0, 70.0)
    image_oversample: float = 2.0
    # rank analysis
    rank_epsilon: float = 0.01
    rank_sweep: str = "none"   # none | cross_range | two_target
    rank_sweep_max_m: float = 30.0
    rank_sweep_points: int = 30

    # ---- construction helpers -------------------------------------

    def radar(self) -> RadarConstants:
        return RadarConstants(c=self.wave_speed_m_s, nu_o=self.carrier_hz,
                              B=self.bandwidth_hz)

    def trajectory(self) -> Trajectory:
        center = np.array(self.trajectory_center_m, dtype=float)
        tangent = np.array(self.trajectory_tangent, dtype=float)
        nrm = np.linalg.norm(tangent)
        if nrm == 0:
            raise ConfigError("trajectory_tangent must be nonzero")
        tangent = tangent / nrm
        if self.trajectory_kind == "linear":
            return LinearTrajectory(center=center,
                                    speed=self.trajectory_speed_m_s,
                                    tangent=tangent)
        if self.trajectory_kind == "circular":
            return CircularTrajectory(center=center,
                                      speed=self.trajectory_speed_m_s,
                                      tangent=tangent,
                                      radius=self.trajectory_radius_m)
        raise ConfigError(
            f"trajectory_kind must be linear or circular, "
            f"got {self.trajectory_kind!r}")

    def frame(self) -> SceneFrame:
        return SceneFrame.from_geometry(self.trajectory(),
                                        np.array(self.reference_m, float))

    def all_targets(self) -> list:
        """Configured targets plus the seeded random stationary ones."""
        out = [t.to_target() for t in self.targets]
        rng = np.random.default_rng(self.seed)
        h = self.placement_halfwidth_m
        for _ in range(self.n_random_stationary):
            xy = rng.uniform(-h, h, size=2)
            out.append(Target(rho0=np.array([xy[0], xy[1], 0.0])
                              + np.array(self.reference_m, float)))
        return out

    def moving_targets(self) -> list:
        return [t for t in self.targets if t.is_moving]

    def sampling_grid(self) -> SamplingGrid:
        rc = self.radar()
        traj = self.trajectory()
        frame = self.frame()
        s_axis = self.delta_s_s * np.arange(-self.n_slow // 2,
                                            self.n_slow // 2 + 1)
        spread = delay_spread(traj, frame, self.all_targets(), s_axis,
                              rc.c)
        dt = 1.0 / (4.0 * rc.nu_o)
        half = spread + self.guard_pulse_widths / rc.B
        m = 2 * int(np.ceil(half / dt))
        return SamplingGrid(n=self.n_slow, delta_s=self.delta_s_s, m=m,
                            delta_t=dt)

    def window_plan(self) -> WindowPlan:
        return WindowPlan(width=self.window_width_cols,
                          overlap=self.window_overlap_cols)

    def pcp_params(self) -> PcpParams:
        return PcpParams(tol=self.pcp_tol, max_iters=self.pcp_max_iters)


# ---- INI round trip ---------------------------------------------------

_SECTIONS = {
    "radar": ["wave_speed_m_s", "carrier_hz", "bandwidth_hz"],
    "trajectory": ["trajectory_kind", "trajectory_center_m",
                   "trajectory_speed_m_s", "trajectory_tangent",
                   "trajectory_radius_m"],
    "sampling": ["n_slow", "delta_s_s", "guard_pulse_widths"],
    "scene": ["reference_m", "seed", "n_random_stationary",
              "placement_halfwidth_m"],
    "window": ["window_width_cols", "window_overlap_cols"],
    "pcp": ["pcp_tol", "pcp_max_iters"],
    "image": ["image_extent_m", "image_oversample"],
    "rank": ["rank_epsilon", "rank_sweep", "rank_sweep_max_m",
             "rank_sweep_points"],
}

_INTS = {"n_slow", "seed", "n_random_stationary", "window_width_cols",
         "window_overlap_cols", "pcp_max_iters", "rank_sweep_points"}
_STRS = {"trajectory_kind", "rank_sweep"}
_TUPLES = {"trajectory_center_m", "trajectory_tangent", "reference_m",
           "image_extent_m"}


def _strip_prefix(field_name: str, section: str) -> str:
    pfx = section + "_"
    return field_name[len(pfx):] if field_name.startswith(pfx) \
        else field_name


def _parse_value(field_name: str, raw: str):
    raw = raw.strip()
    try:
        if field_name in _STRS:
            return raw
        if field_name in _INTS:
            return int(raw)
        if field_name in _TUPLES:
            return tuple(float(x) for x in raw.split(","))
        return float(raw)
    except ValueError as e:
        raise ConfigError(f"bad value for key {field_name!r}: {raw!r}") \
            from e


def save_config(cfg: SceneConfig, path):
    cp = configparser.ConfigParser()
    for section, names in _SECTIONS.items():
        cp[section] = {}
        for name in names:
            v = getattr(cfg, name)
            key = _strip_prefix(name, section)
            if isinstance(v, tuple):
                cp[section][key] = ", ".join(f"{x:.17g}" for x in v)
            elif isinstance(v, float):
                cp[section][key] = f"{v:.17g}"
            else:
                cp[section][key] = str(v)
    for i, t in enumerate(cfg.targets, start=1):
        sec = f"target:{i}"
        cp[sec] = {
            "position_m": ", ".join(f"{x:.17g}" for x in t.position_m),
            "velocity_m_s": ", ".join(f"{x:.17g}" for x in t.velocity_m_s),
            "reflectivity": f"{t.reflectivity:.17g}",
        }
    with open(path, "w") as f:
        cp.write(f)


def load_config(path) -> SceneConfig:
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError(f"config file {path!r} not found or unreadable")
    kwargs = {}
    for section, names in _SECTIONS.items():
        if not cp.has_section(section):
            continue
        known = {_strip_prefix(n, section): n for n in names}
        for key, raw in cp[section].items():
            if key not in known:
                raise ConfigError(f"unknown key {key!r} in section "
                                  f"[{section}]")
            name = known[key]
            kwargs[name] = _parse_value(name, raw)
    targets = []
    for sec in cp.sections():
        if not sec.startswith("target:"):
            if sec not in _SECTIONS:
                raise ConfigError(f"unknown section [{sec}]")
            continue
        entries = dict(cp[sec])
        try:
            pos = tuple(float(x) for x in entries.pop("position_m").split(","))
            vel = tuple(float(x)
                        for x in entries.pop("velocity_m_s", "0, 0").split(","))
            refl = float(entries.pop("reflectivity", "1"))
        except (KeyError, ValueError) as e:
            raise ConfigError(f"bad target section [{sec}]: {e}") from e
        if entries:
            raise ConfigError(f"unknown key {next(iter(entries))!r} in "
                              f"section [{sec}]")
        if len(pos) != 3:
            raise ConfigError(f"position_m in [{sec}] must have 3 entries")
        targets.append(TargetSpec(position_m=pos, velocity_m_s=vel,
                                  reflectivity=refl))
    cfg = SceneConfig(targets=targets, **kwargs)
    _validate(cfg)
    return cfg


def _validate(cfg: SceneConfig):
    checks = [
        ("bandwidth_hz", cfg.bandwidth_hz > 0),
        ("carrier_hz", cfg.carrier_hz > cfg.bandwidth_hz),
        ("wave_speed_m_s", cfg.wave_speed_m_s > 0),
        ("n_slow", cfg.n_slow >= 2 and cfg.n_slow % 2 == 0),
        ("delta_s_s", cfg.delta_s_s > 0),
        ("window_width_cols", cfg.window_width_cols >= 1),
        ("window_overlap_cols",
         0 <= cfg.window_overlap_cols < cfg.window_width_cols),
        ("rank_epsilon", 0 < cfg.rank_epsilon < 1),
        ("image_oversample", cfg.image_oversample > 0),
        ("n_random_stationary", cfg.n_random_stationary >= 0),
    ]
    for key, ok in checks:
        if not ok:
            raise ConfigError(f"invalid value for key {key!r}")


# ---- presets ----------------------------------------------------------

_MOVER1 = TargetSpec(position_m=(0.0, 0.0, 0.0),
                     velocity_m_s=(28.0 / np.sqrt(2.0),) * 2)
_MOVER2 = TargetSpec(position_m=(-5.0, 5.0, 0.0),
                     velocity_m_s=(-14.0 / np.sqrt(3.0),
                                   14.0 * np.sqrt(2.0 / 3.0)))


def _sim1() -> SceneConfig:
    return SceneConfig(n_random_stationary=30, targets=[_MOVER1])


def _sim2() -> SceneConfig:
    return SceneConfig(n_random_stationary=20, targets=[_MOVER1, _MOVER2])


def _sim3() -> SceneConfig:
    return SceneConfig(n_random_stationary=30,
                       targets=[replace(_MOVER1, reflectivity=10.0)])


def _fig5() -> SceneConfig:
    # single stationary target offset 15 m in cross-range, full aperture
    return SceneConfig(n_slow=296,
                       targets=[TargetSpec(position_m=(0.0, 15.0, 0.0))])


def _fig7() -> SceneConfig:
    # essential rank vs cross-range offset of one stationary target
    cfg = _fig5()
    cfg.rank_sweep = "cross_range"
    return cfg


def _fig10() -> SceneConfig:
    # essential rank vs the second target's cross-range
    return SceneConfig(n_slow=296, rank_sweep="two_target",
                       targets=[TargetSpec(position_m=(5.0, 5.0, 0.0)),
                                TargetSpec(position_m=(-5.0, 1.0, 0.0))])


PRESETS = {
    "sim1": _sim1,
    "sim2": _sim2,
    "sim3": _sim3,
    "fig5": _fig5,
    "fig7": _fig7,
    "fig10": _fig10,
}


def preset(name: str, full_size: bool = False, seed: int | None = None
           ) -> SceneConfig:
    """Named scenario.  Desk scale uses half the aperture and coarser
    image pixels; `full_size` restores the full 296-pulse aperture and
    resolution/4 pixels."""
    try:
        cfg = PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from "
                          f"{sorted(PRESETS)}") from None
    if full_size:
        cfg.n_slow = 296
        cfg.image_oversample = 4.0
    if seed is not None:
        cfg.seed = seed
    _validate(cfg)
    return cfg
