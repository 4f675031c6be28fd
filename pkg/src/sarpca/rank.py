"""Covariance models for the trace matrix, their Toeplitz / g-Hankel
structure, the spectral symbol, and essential-rank estimates.

The covariance of range-compressed traces from a point target is, to
leading order, stationary in slow time with a Gaussian-times-cosine
profile whose rate parameter alpha encodes target offset and motion.
Its eigenvalue distribution is governed by the symbol of the associated
Toeplitz matrix, which yields a closed-form estimate of the essential
rank.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import FresnelCheck, RadarConstants
from .tracematrix import TraceMatrix

__all__ = [
    "CovarianceModel",
    "Symbol",
    "RankEstimate",
    "covariance_empirical",
    "covariance_model_1target",
    "covariance_model_2target",
    "sequence_c",
    "sequence_h",
    "symbol_1target",
    "symbol_2target",
    "symbol_rank_fraction",
    "essential_rank",
    "szego_rank_fraction",
    "rank_estimate",
    "row_cosine_model",
    "linearization_error",
    "sv_distribution_check",
    "wrap_angle",
]

_SYM_TOL = 1e-10


def wrap_angle(x: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    return float((x + np.pi) % (2.0 * np.pi) - np.pi)


def _slow_axis(n: int, delta_s: float) -> np.ndarray:
    return delta_s * np.arange(-n // 2, n // 2 + 1)


@dataclass
class CovarianceModel:
    """Analytic covariance matrix with its structural parameters.

    For one target `alphas` has a single entry and T is C itself.  For
    two targets the cross terms form a g-Hankel matrix H (and its
    transpose) whenever alpha_2/alpha_1 is a negative integer ratio;
    then C = T + H + H^T exactly, otherwise H is None.
    """

    C: np.ndarray
    delta_s: float
    delta_t: float
    alphas: tuple
    xis: tuple
    gammas: tuple
    beta: float | None = None
    zeta: float | None = None
    g: int | None = None
    T: np.ndarray | None = None
    H: np.ndarray | None = None

    @property
    def has_hankel_split(self) -> bool:
        return self.H is not None

    @property
    def n_plus_1(self) -> int:
        return self.C.shape[0]


def covariance_empirical(tm: TraceMatrix, riemann: bool = False
                         ) -> np.ndarray:
    """Empirical covariance C = M M^T of the trace rows.

    With `riemann=True` the sum over fast time is scaled by delta_t so
    that it approximates the continuous inner product; the analytic
    models below assume the unscaled convention (their prefactor
    carries the 1/delta_t instead).
    """
    C = tm.data @ tm.data.T
    if riemann:
        C = C * tm.delta_t
    return C


def _warn_fresnel(fresnel: FresnelCheck | None):
    if fresnel is not None and not fresnel.ok:
        warnings.warn(
            f"Fresnel number {fresnel.number:.3g} exceeds the bound "
            f"{fresnel.bound:.3g}; the stationary-phase covariance model "
            "may be inaccurate", stacklevel=3)


def covariance_model_1target(alpha: float, constants: RadarConstants,
                             delta_s: float, delta_t: float, n: int,
                             fresnel: FresnelCheck | None = None
                             ) -> CovarianceModel:
    """One-target covariance model,

        C(s, s') = sqrt(pi)/(2 B dt) cos(w_o a (s-s')) exp(-(B a)^2 (s-s')^2 / 4)

    sampled on the (n+1)-point slow-time grid.  Exactly Toeplitz.
    """
    _warn_fresnel(fresnel)
    B = constants.B
    s = _slow_axis(n, delta_s)
    lag = s[:, None] - s[None, :]
    pref = np.sqrt(np.pi) / (2.0 * B * delta_t)
    C = pref * np.cos(constants.omega_o * alpha * lag) \
        * np.exp(-((B * alpha * lag) ** 2) / 4.0)
    xi = B * abs(alpha) * delta_s
    gamma = wrap_angle(constants.omega_o * alpha * delta_s)
    return CovarianceModel(C=C, delta_s=delta_s, delta_t=delta_t,
                           alphas=(alpha,), xis=(xi,), gammas=(gamma,),
                           T=C)


def _integer_ratio(x: float, tol: float = 1e-9):
    g = round(x)
    if g >= 1 and abs(x - g) <= tol * max(1.0, abs(x)):
        return g
    return None


def covariance_model_2target(alpha1: float, alpha2: float, beta: float,
                             constants: RadarConstants, delta_s: float,
                             delta_t: float, n: int,
                             fresnel: FresnelCheck | None = None
                             ) -> CovarianceModel:
    """Two-stationary-target covariance: the sum of two Toeplitz terms
    plus cross terms carrying the range-offset parameter beta.

    When alpha_2/alpha_1 < 0 with integer magnitude g, the cross terms
    are a g-Hankel matrix H and its transpose (entries depend on
    j + g*l only) and the split C = T + H + H^T is returned.  Otherwise
    only C is available and `has_hankel_split` is False.
    """
    _warn_fresnel(fresnel)
    if alpha1 == 0.0:
        raise ValueError("alpha_1 must be nonzero for the two-target model")
    B = constants.B
    w = constants.omega_o
    s = _slow_axis(n, delta_s)
    lag = s[:, None] - s[None, :]
    pref = np.sqrt(np.pi) / (2.0 * B * delta_t)
    T = pref * (np.cos(w * alpha1 * lag) * np.exp(-((B * alpha1 * lag) ** 2) / 4.0)
                + np.cos(w * alpha2 * lag) * np.exp(-((B * alpha2 * lag) ** 2) / 4.0))
    arg = alpha1 * s[:, None] - alpha2 * s[None, :] + beta
    H = pref * np.cos(w * arg) * np.exp(-((B * arg) ** 2) / 4.0)
    C = T + H + H.T
    xis = (B * abs(alpha1) * delta_s, B * abs(alpha2) * delta_s)
    gammas = (wrap_angle(w * alpha1 * delta_s),
              wrap_angle(w * alpha2 * delta_s))
    zeta = beta / (abs(alpha1) * delta_s)
    ratio = alpha2 / alpha1
    g = _integer_ratio(-ratio) if ratio < 0 else None
    if g is None:
        return CovarianceModel(C=C, delta_s=delta_s, delta_t=delta_t,
                               alphas=(alpha1, alpha2), xis=xis,
                               gammas=gammas, beta=beta, zeta=zeta)
    return CovarianceModel(C=C, delta_s=delta_s, delta_t=delta_t,
                           alphas=(alpha1, alpha2), xis=xis, gammas=gammas,
                           beta=beta, zeta=zeta, g=g, T=T, H=H)


def sequence_c(j, xis, gammas, B: float, delta_t: float):
    """Toeplitz generating sequence c_j = pref * sum_l cos(gamma_l j)
    exp(-(xi_l j)^2 / 4)."""
    j = np.asarray(j, dtype=float)
    pref = np.sqrt(np.pi) / (2.0 * B * delta_t)
    out = np.zeros_like(j)
    for xi, gamma in zip(xis, gammas):
        out = out + np.cos(gamma * j) * np.exp(-((xi * j) ** 2) / 4.0)
    return pref * out


def sequence_h(j, xi1: float, zeta: float, B: float, delta_t: float,
               gamma1: float | None = None):
    """g-Hankel generating sequence h_j = pref * cos(phase (j + zeta))
    exp(-(xi_1 (j + zeta))^2 / 4).

    The oscillation uses the carrier phase increment gamma_1 when given
    (xi_1 otherwise, matching the envelope rate).
    """
    j = np.asarray(j, dtype=float)
    pref = np.sqrt(np.pi) / (2.0 * B * delta_t)
    phase = xi1 if gamma1 is None else gamma1
    arg = j + zeta
    return pref * np.cos(phase * arg) * np.exp(-((xi1 * arg) ** 2) / 4.0)


@dataclass(frozen=True)
class Symbol:
    """Spectral symbol of the Toeplitz covariance: a sum of Gaussian
    bumps at +-gamma_l of width xi_l,

        Q(theta) = sum_l pi/(2 B dt xi_l) [e^{-(theta-gamma_l)^2/xi_l^2}
                                           + e^{-(theta+gamma_l)^2/xi_l^2}].
    """

    xis: tuple
    gammas: tuple
    B: float
    delta_t: float

    def __post_init__(self):
        if len(self.xis) != len(self.gammas):
            raise ValueError("xis and gammas must have equal length")
        if any(xi <= 0 for xi in self.xis):
            raise ValueError("degenerate symbol: all xi must be positive "
                             "(xi = 0 is a delta distribution)")

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta)
        for xi, gamma in zip(self.xis, self.gammas):
            w = np.pi / (2.0 * self.B * self.delta_t * xi)
            out = out + w * (np.exp(-((theta - gamma) / xi) ** 2)
                             + np.exp(-((theta + gamma) / xi) ** 2))
        return out

    @property
    def sup_norm(self) -> float:
        """Maximum of Q over (-pi, pi), by dense sampling refined around
        the best candidate."""
        grid = np.linspace(-np.pi, np.pi, 8193)
        cands = np.concatenate([grid, self.gammas,
                                [-g for g in self.gammas]])
        vals = self(cands)
        best = cands[int(np.argmax(vals))]
        span = max(self.xis)
        local = np.linspace(best - span, best + span, 4001)
        return float(max(np.max(vals), np.max(self(local))))

    def series(self, theta, terms: int = 5000):
        """Truncated Fourier series sum_{|j|<=terms} c_j e^{-i j theta}
        (real by symmetry); cross-validates the closed form."""
        theta = np.asarray(theta, dtype=float)
        j = np.arange(1, terms + 1)
        cj = sequence_c(j, self.xis, self.gammas, self.B, self.delta_t)
        c0 = float(sequence_c(0.0, self.xis, self.gammas, self.B,
                              self.delta_t))
        return c0 + 2.0 * np.cos(np.multiply.outer(theta, j)) @ cj


def symbol_1target(xi: float, gamma: float, B: float, delta_t: float
                   ) -> Symbol:
    return Symbol(xis=(xi,), gammas=(gamma,), B=B, delta_t=delta_t)


def symbol_2target(xi1: float, gamma1: float, xi2: float, gamma2: float,
                   B: float, delta_t: float) -> Symbol:
    return Symbol(xis=(xi1, xi2), gammas=(gamma1, gamma2), B=B,
                  delta_t=delta_t)


def essential_rank(C: np.ndarray, epsilon: float) -> int:
    """Number of eigenvalues of the symmetric matrix C that are at least
    epsilon times the largest one."""
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError("C must be square")
    scale = float(np.max(np.abs(C)))
    if scale > 0 and np.max(np.abs(C - C.T)) > _SYM_TOL * scale:
        raise ValueError("C must be symmetric")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must be in (0, 1)")
    ev = np.linalg.eigvalsh((C + C.T) / 2.0)
    top = ev[-1]
    if top <= 0:
        return 0
    return int(np.sum(ev >= epsilon * top))


def _superlevel_measure(Q, delta: float, seeds, tol: float = 1e-9
                        ) -> float:
    """Lebesgue measure of {theta in (-pi,pi): Q(theta) >= delta} by
    adaptive interval subdivision seeded at the bump centers/edges."""
    pts = sorted(set(float(np.clip(p, -np.pi, np.pi)) for p in seeds)
                 | {-np.pi, np.pi})
    stack = [(pts[i], pts[i + 1]) for i in range(len(pts) - 1)]
    measure = 0.0
    while stack:
        a, b = stack.pop()
        if b - a <= tol:
            if Q(0.5 * (a + b)) >= delta:
                measure += b - a
            continue
        mid = 0.5 * (a + b)
        ia, im, ib = (Q(a) >= delta), (Q(mid) >= delta), (Q(b) >= delta)
        if ia and im and ib:
            # verify no dip below the threshold hides inside
            probe = np.linspace(a, b, 17)
            if np.all(Q(probe) >= delta):
                measure += b - a
                continue
        elif not (ia or im or ib):
            probe = np.linspace(a, b, 17)
            if not np.any(Q(probe) >= delta):
                continue
        stack.append((a, mid))
        stack.append((mid, b))
    return measure


def szego_rank_fraction(alpha: float, B: float, delta_s: float,
                        epsilon: float, omega_o: float | None = None,
                        delta_t: float = 1.0,
                        method: str = "closed") -> float:
    """Asymptotic essential-rank fraction of the one-target covariance.

    Closed form min(2 |alpha| B ds sqrt(log 1/eps) / pi, 1); the
    "quadrature" method instead measures the superlevel set
    {Q >= eps ||Q||_inf} of the symbol directly (requires omega_o).
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must be in (0, 1)")
    if alpha == 0.0:
        return 0.0
    if method == "closed":
        return float(min(2.0 * abs(alpha) * B * delta_s
                         * np.sqrt(np.log(1.0 / epsilon)) / np.pi, 1.0))
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    if omega_o is None:
        raise ValueError("quadrature method needs omega_o")
    xi = B * abs(alpha) * delta_s
    gamma = wrap_angle(omega_o * alpha * delta_s)
    Q = symbol_1target(xi, gamma, B, delta_t)
    delta = epsilon * Q.sup_norm
    halfw = xi * np.sqrt(max(np.log(1.0 / epsilon), 0.0))
    seeds = []
    for g in (gamma, -gamma):
        seeds += [g - 2 * halfw, g - halfw, g, g + halfw, g + 2 * halfw]
    return _superlevel_measure(Q, delta, seeds) / (2.0 * np.pi)


def symbol_rank_fraction(symbol: "Symbol", epsilon: float) -> float:
    """Asymptotic rank fraction for an arbitrary bump symbol: the
    normalized measure of {Q >= epsilon ||Q||_inf}."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must be in (0, 1)")
    delta = epsilon * symbol.sup_norm
    seeds = []
    root = np.sqrt(max(np.log(1.0 / epsilon), 0.0))
    for xi, gamma in zip(symbol.xis, symbol.gammas):
        for g in (gamma, -gamma):
            seeds += [g - 2 * xi * root, g - xi * root, g,
                      g + xi * root, g + 2 * xi * root]
    return _superlevel_measure(symbol, delta, seeds) / (2.0 * np.pi)


@dataclass(frozen=True)
class RankEstimate:
    """Essential rank of a covariance matrix next to its asymptotic
    symbol-based estimate."""

    epsilon: float
    essential_rank: int
    normalized: float
    asymptotic: float


def rank_estimate(C: np.ndarray, epsilon: float, alpha: float, B: float,
                  delta_s: float) -> RankEstimate:
    r = essential_rank(C, epsilon)
    n1 = C.shape[0]
    return RankEstimate(epsilon=epsilon, essential_rank=r,
                        normalized=r / n1,
                        asymptotic=szego_rank_fraction(alpha, B, delta_s,
                                                       epsilon))


def row_cosine_model(alpha: float, omega_o: float, B: float, lag):
    """Predicted cosine of the angle between trace rows at slow-time
    lag s - s': cos(w_o a lag) exp(-(B a lag)^2 / 4)."""
    lag = np.asarray(lag, dtype=float)
    return np.cos(omega_o * alpha * lag) * np.exp(
        -((B * alpha * lag) ** 2) / 4.0)


def linearization_error(traj, frame, target, constants: RadarConstants,
                        s: float, s_prime: float) -> float:
    """Carrier-phase error of the slow-time linearization of the
    travel-time offset difference:

        | w_o [dtau(s) - dtau(s')] - w_o rate (s - s') |

    where rate is the analytic slope of the offset at the aperture
    center.  Small values (<< pi) mean the phase-coherent covariance
    model is valid over that slow-time separation.
    """
    from .geometry import delay_rate, delta_tau

    c = constants.c
    exact = (delta_tau(traj, s, target.position(s), frame.rho_o, c)
             - delta_tau(traj, s_prime, target.position(s_prime),
                         frame.rho_o, c))
    rate = delay_rate(frame, traj, target, c)
    return float(abs(constants.omega_o * (exact - rate * (s - s_prime))))


def sv_distribution_check(T: np.ndarray, H: np.ndarray | None,
                          symbol: Symbol, F) -> tuple:
    """Compare the singular-value average of T + H + H^T against the
    symbol integral:

        lhs = (1/(n+1)) sum_j F(sigma_j),
        rhs = (1/2pi) integral F(|Q(theta)|) dtheta.

    F must be continuous with bounded support; the two sides agree in
    the large-n limit because the g-Hankel terms contribute nothing to
    the singular-value distribution.
    """
    from scipy.integrate import quad

    A = np.asarray(T, dtype=float)
    if H is not None:
        H = np.asarray(H, dtype=float)
        A = A + H + H.T
    sv = np.abs(np.linalg.eigvalsh((A + A.T) / 2.0))
    lhs = float(np.mean([F(x) for x in sv]))
    pts = sorted({float(np.clip(g, -np.pi, np.pi))
                  for g in list(symbol.gammas)
                  + [-g for g in symbol.gammas]})
    rhs, _ = quad(lambda th: F(abs(symbol(th))), -np.pi, np.pi,
                  points=pts, limit=400)
    return lhs, float(rhs / (2.0 * np.pi))
