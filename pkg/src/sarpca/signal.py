"""Emitted-signal model, compressed pulse, and synthesis of pulse- and
range-compressed data traces."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import RadarConstants, SceneFrame, Trajectory, travel_time
from .tracematrix import TraceMatrix

__all__ = [
    "PulseModel",
    "SamplingGrid",
    "compressed_pulse",
    "emitted_signal",
    "synthesize_traces",
    "delay_spread",
    "synthesize_raw",
    "pulse_compress",
    "range_compress",
]

# half-width of the compressed pulse support kept in banded synthesis,
# in units of 1/B; the envelope there is exp(-32) ~ 1e-14
_SUPPORT = 8.0


@dataclass(frozen=True)
class PulseModel:
    """Gaussian-cosine compressed pulse cos(w_o t) exp(-B^2 t^2 / 2)."""

    omega_o: float
    B: float
    kind: str = "gaussian-cosine"

    @classmethod
    def from_constants(cls, constants: RadarConstants) -> "PulseModel":
        return cls(omega_o=constants.omega_o, B=constants.B)


def compressed_pulse(p: PulseModel, t):
    t = np.asarray(t, dtype=float)
    return np.cos(p.omega_o * t) * np.exp(-0.5 * (p.B * t) ** 2)


@dataclass(frozen=True)
class SamplingGrid:
    """Uniform slow/fast time sampling: s_j = j*ds for j=-n/2..n/2 and
    t_l = l*dt for l=-m/2..m/2."""

    n: int
    delta_s: float
    m: int
    delta_t: float

    def __post_init__(self):
        if self.n < 2 or self.n % 2:
            raise ValueError("n must be even and >= 2")
        if self.m < 2 or self.m % 2:
            raise ValueError("m must be even and >= 2")
        if self.delta_s <= 0 or self.delta_t <= 0:
            raise ValueError("sampling steps must be positive")

    @property
    def s_axis(self) -> np.ndarray:
        return self.delta_s * np.arange(-self.n // 2, self.n // 2 + 1)

    @property
    def t_axis(self) -> np.ndarray:
        return self.delta_t * np.arange(-self.m // 2, self.m // 2 + 1)

    @property
    def fast_halfwidth(self) -> float:
        return (self.m // 2) * self.delta_t

    @property
    def aperture_time(self) -> float:
        return self.n * self.delta_s

    def check_nyquist(self, constants: RadarConstants):
        limit = 1.0 / (2.0 * (constants.nu_o + constants.B / 2.0))
        if self.delta_t > limit:
            raise ValueError(
                f"fast-time step {self.delta_t:g} violates Nyquist for the "
                f"real carrier (need <= {limit:g})")

    @classmethod
    def for_scene(cls, constants: RadarConstants, n: int, delta_s: float,
                  delay_spread: float) -> "SamplingGrid":
        """Grid with dt = 1/(4 nu_o) and a fast-time window covering the
        given delay spread plus a 10/B guard."""
        dt = 1.0 / (4.0 * constants.nu_o)
        half = delay_spread + 10.0 / constants.B
        m = 2 * int(np.ceil(half / dt))
        return cls(n=n, delta_s=delta_s, m=m, delta_t=dt)


def emitted_signal(constants: RadarConstants, t, kind: str = "gaussian"):
    """Long emitted signal f(t) used only to validate the processing chain.

    "gaussian": carrier-modulated Gaussian whose autocorrelation equals the
    compressed pulse model (up to O(B/nu_o) corrections).  "chirp": linear
    FM of bandwidth B over duration 32/B.
    """
    t = np.asarray(t, dtype=float)
    w = constants.omega_o
    B = constants.B
    if kind == "gaussian":
        amp = np.sqrt(2.0 * B * np.sqrt(2.0 / np.pi))
        return amp * np.cos(w * t) * np.exp(-(B * t) ** 2)
    if kind == "chirp":
        T = 32.0 / B
        rate = np.pi * B / T  # sweep +-B/2 around the carrier
        out = np.cos(w * t + rate * t * t)
        return np.where(np.abs(t) <= T / 2.0, out, 0.0)
    raise ValueError(f"unknown emitted signal kind {kind!r}")


def _delay_spread(traj, frame, targets, grid_s_axis, c):
    spread = 0.0
    for tg in targets:
        dts = np.abs(
            travel_time(traj, grid_s_axis, tg.position(grid_s_axis), c)
            - travel_time(traj, grid_s_axis, frame.rho_o, c))
        if dts.size:
            spread = max(spread, float(np.max(dts)))
    return spread


def delay_spread(traj: Trajectory, frame: SceneFrame, targets,
                 grid_s_axis, c: float) -> float:
    """Largest |delta_tau| any target reaches over the aperture."""
    return _delay_spread(traj, frame, targets, np.asarray(grid_s_axis),
                         c)


def synthesize_traces(constants: RadarConstants, traj: Trajectory,
                      frame: SceneFrame, targets, grid: SamplingGrid
                      ) -> TraceMatrix:
    """Directly synthesize pulse- and range-compressed traces:

        M_jl = sum_q sigma_q f_p(t_l - delta_tau(s_j, rho_q(s_j)))

    The 1/(4 pi L)^2 amplitude prefactor is factored out into amp_scale.
    """
    grid.check_nyquist(constants)
    pulse = PulseModel.from_constants(constants)
    s_axis = grid.s_axis
    t_axis = grid.t_axis
    dt = grid.delta_t
    half_support = _SUPPORT / constants.B
    band = int(np.ceil(half_support / dt))
    m1 = t_axis.size
    data = np.zeros((s_axis.size, m1))
    c = constants.c
    for tg in targets:
        pos = tg.position(s_axis)  # (n+1, 3)
        dtau = (travel_time(traj, s_axis, pos, c)
                - travel_time(traj, s_axis, frame.rho_o, c))
        if np.any(np.abs(dtau) + 6.0 / constants.B > grid.fast_halfwidth):
            raise ValueError(
                f"target echo at delay up to {np.max(np.abs(dtau)):g} s "
                f"would be truncated by the fast-time window "
                f"(half-width {grid.fast_halfwidth:g} s)")
        centers = np.rint((dtau - t_axis[0]) / dt).astype(int)
        for j in range(s_axis.size):
            lo = max(centers[j] - band, 0)
            hi = min(centers[j] + band + 1, m1)
            tt = t_axis[lo:hi] - dtau[j]
            data[j, lo:hi] += tg.sigma * compressed_pulse(pulse, tt)
    amp = 1.0 / (4.0 * np.pi * frame.L) ** 2
    return TraceMatrix(data, s_axis, t_axis, amp_scale=amp)


def synthesize_raw(constants: RadarConstants, traj: Trajectory,
                   targets, s_axis, t_axis, c=None,
                   kind: str = "gaussian") -> TraceMatrix:
    """Uncompressed echoes D(s,t) = sum_q sigma_q f(t - tau(s, rho_q(s)))
    on an absolute fast-time axis, for chain validation."""
    c = constants.c if c is None else c
    s_axis = np.asarray(s_axis, dtype=float)
    t_axis = np.asarray(t_axis, dtype=float)
    data = np.zeros((s_axis.size, t_axis.size))
    for tg in targets:
        pos = tg.position(s_axis)
        tau = travel_time(traj, s_axis, pos, c)
        for j in range(s_axis.size):
            data[j] += tg.sigma * emitted_signal(constants,
                                                 t_axis - tau[j], kind)
    return TraceMatrix(data, s_axis, t_axis)


def pulse_compress(raw: TraceMatrix, f_samples: np.ndarray) -> TraceMatrix:
    """Correlate each fast-time row with the emitted signal:

        D_p(s, t) = sum_k D(s, t_k) f(t_k - t) dt

    `f_samples` must be sampled on the raw fast-time step, on a grid
    symmetric about zero (odd length).
    """
    f = np.asarray(f_samples, dtype=float)
    if f.ndim != 1 or f.size % 2 != 1:
        raise ValueError("emitted signal samples must be 1-D, odd length")
    if f.size > raw.shape[1]:
        raise ValueError("emitted signal longer than the fast-time record")
    from scipy.signal import fftconvolve

    # correlation with a symmetric-grid kernel == convolution with reversal
    out = fftconvolve(raw.data, f[::-1][None, :], mode="same", axes=1)
    out *= raw.delta_t
    return TraceMatrix(out, raw.s_axis, raw.t_axis, raw.amp_scale)


def range_compress(dp: TraceMatrix, traj: Trajectory, rho_o, c: float,
                   t_out: np.ndarray | None = None) -> TraceMatrix:
    """Shift each row by the reference travel time:

        D_r(s, t') = D_p(s, t' + tau(s, rho_o))

    Fractional shifts use frequency-domain phase ramps (exact for
    band-limited rows).  `t_out` selects the output fast-time axis
    (default: input axis recentered on tau(0, rho_o)); it must share the
    input step.
    """
    tau = travel_time(traj, dp.s_axis, np.asarray(rho_o, float), c)
    dt = dp.delta_t
    if t_out is None:
        t_out = dp.t_axis - float(travel_time(traj, 0.0, rho_o, c))
    else:
        t_out = np.asarray(t_out, dtype=float)
        step = t_out[1] - t_out[0]
        if abs(step - dt) > 1e-9 * dt:
            raise ValueError("output axis must share the input fast-time step")
    ncols = dp.shape[1]
    freqs = np.fft.rfftfreq(ncols, d=1.0)
    out = np.empty((dp.shape[0], t_out.size))
    span = dp.t_axis[-1] - dp.t_axis[0]
    for j in range(dp.shape[0]):
        # sample positions of the output grid inside the input row
        start = (t_out[0] + tau[j] - dp.t_axis[0]) / dt
        if start < -0.5 or start + t_out.size - 1 > ncols - 0.5:
            raise ValueError(
                f"row {j}: shift {tau[j]:g} s places the output window "
                f"outside the sampled span ({span:g} s)")
        frac, base = np.modf(start)
        row = np.fft.irfft(np.fft.rfft(dp.data[j])
                           * np.exp(2j * np.pi * freqs * frac), n=ncols)
        idx = np.arange(t_out.size) + int(base)
        idx = np.clip(idx, 0, ncols - 1)
        out[j] = row[idx]
    return TraceMatrix(out, dp.s_axis, t_out, dp.amp_scale)
