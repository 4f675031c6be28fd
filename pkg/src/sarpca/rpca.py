"""Principal component pursuit: split a matrix into low-rank plus sparse
parts by an inexact augmented-Lagrangian iteration.

Solves min ||L||_* + eta ||S||_1 subject to L + S = M.  Applied to
range-compressed traces, the low-rank part collects the stationary
echoes and the sparse part the moving-target echoes.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .tracematrix import TraceMatrix, WindowPlan, make_windows, reassemble

__all__ = [
    "PcpParams",
    "RpcaResult",
    "SvdConvergenceError",
    "soft_threshold",
    "singular_value_threshold",
    "pcp_solve",
    "pcp_windowed",
]

_DIAG_THRESH = 1e-8
# use a dense SVD below this size; partial SVDs only pay off on large mats
_DENSE_CUTOFF = 200


class SvdConvergenceError(RuntimeError):
    """Partial SVD failed to converge."""


@dataclass(frozen=True)
class PcpParams:
    """Solver knobs.  `eta` defaults to 1/sqrt(max(n1, n2)) when None;
    `mu0` defaults to 1.25/||M||_2."""

    eta: float | None = None
    tol: float = 1e-7
    max_iters: int = 1000
    mu0: float | None = None
    mu_growth: float = 1.6
    svd_rank_guess: int = 10

    def __post_init__(self):
        if self.eta is not None and self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.mu_growth <= 1:
            raise ValueError("mu_growth must exceed 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.svd_rank_guess < 1:
            raise ValueError("svd_rank_guess must be >= 1")


@dataclass
class RpcaResult:
    L: np.ndarray
    S: np.ndarray
    iters: int
    residual: float
    rank: int
    nnz: int
    converged: bool


def soft_threshold(x, tau: float):
    """Elementwise shrinkage sgn(x) max(|x| - tau, 0)."""
    if tau < 0:
        raise ValueError("threshold must be nonnegative")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)


def _partial_svd(X: np.ndarray, tau: float, rank_guess: int, seed: int = 0):
    """Singular triplets of X covering all singular values > tau.

    Lanczos bidiagonalization with rank doubling: recompute with twice
    the rank until the smallest captured singular value is <= tau (so
    nothing above the threshold can be missing) or full rank is reached.
    """
    from scipy.sparse.linalg import ArpackNoConvergence, svds

    full = min(X.shape)
    k = min(max(rank_guess, 1), full - 1)
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(min(X.shape))
    while True:
        try:
            U, s, Vt = svds(X, k=k, v0=v0)
        except ArpackNoConvergence as e:
            raise SvdConvergenceError(
                f"partial SVD of a {X.shape} matrix did not converge at "
                f"rank {k}: {e}") from e
        order = np.argsort(s)[::-1]
        U, s, Vt = U[:, order], s[order], Vt[order]
        if s[-1] <= tau or k >= full - 1:
            return U, s, Vt
        k = min(2 * k, full - 1)


def _svt(X: np.ndarray, tau: float, rank_guess: int):
    if min(X.shape) <= _DENSE_CUTOFF or tau == 0.0:
        U, s, Vt = np.linalg.svd(X, full_matrices=False)
    else:
        U, s, Vt = _partial_svd(X, tau, rank_guess)
    keep = s > tau
    kept = int(np.sum(keep))
    if kept == 0:
        return np.zeros_like(X), 0
    return (U[:, keep] * (s[keep] - tau)) @ Vt[keep], kept


def singular_value_threshold(X: np.ndarray, tau: float,
                             rank_guess: int = 10) -> np.ndarray:
    """Proximal operator of the nuclear norm: U shrink(S, tau) V^T.

    Uses a partial SVD that provably captures every singular value above
    tau (rank doubling until the smallest computed one drops below it).
    """
    if tau < 0:
        raise ValueError("threshold must be nonnegative")
    X = np.asarray(X, dtype=float)
    return _svt(X, tau, rank_guess)[0]


def pcp_solve(M: np.ndarray, params: PcpParams | None = None) -> RpcaResult:
    """Inexact augmented-Lagrangian principal component pursuit.

    Alternates S <- shrink(M - L + Y/mu, eta/mu) and
    L <- svt(M - S + Y/mu, 1/mu) with dual update Y <- Y + mu (M - L - S)
    and geometric penalty growth, until ||M - L - S||_F / ||M||_F < tol.
    """
    params = params or PcpParams()
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or max(M.shape) < 2:
        raise ValueError("M must be a 2-D matrix with max dimension >= 2")
    if not np.all(np.isfinite(M)):
        raise ValueError("M must be finite")
    norm_f = np.linalg.norm(M)
    if norm_f == 0.0:
        return RpcaResult(L=np.zeros_like(M), S=np.zeros_like(M), iters=1,
                          residual=0.0, rank=0, nnz=0, converged=True)
    eta = params.eta if params.eta is not None else 1.0 / np.sqrt(max(M.shape))
    norm_2 = np.linalg.norm(M, 2)
    mu = params.mu0 if params.mu0 is not None else 1.25 / norm_2
    mu_max = mu * 1e7
    Y = M / max(norm_2, np.max(np.abs(M)) / eta)
    L = np.zeros_like(M)
    S = np.zeros_like(M)
    rank_guess = params.svd_rank_guess
    converged = False
    iters = 0
    residual = 1.0
    for iters in range(1, params.max_iters + 1):
        S = soft_threshold(M - L + Y / mu, eta / mu)
        L, kept = _svt(M - S + Y / mu, 1.0 / mu, rank_guess)
        rank_guess = max(kept + 1, rank_guess)
        R = M - L - S
        Y = Y + mu * R
        mu = min(mu * params.mu_growth, mu_max)
        residual = float(np.linalg.norm(R) / norm_f)
        if residual < params.tol:
            converged = True
            break
    sv = np.linalg.svd(L, compute_uv=False) if L.any() else np.zeros(1)
    rank = int(np.sum(sv > _DIAG_THRESH * sv[0])) if sv[0] > 0 else 0
    smax = np.max(np.abs(S))
    nnz = int(np.sum(np.abs(S) > _DIAG_THRESH * smax)) if smax > 0 else 0
    return RpcaResult(L=L, S=S, iters=iters, residual=residual, rank=rank,
                      nnz=nnz, converged=converged)


def pcp_windowed(tm: TraceMatrix, plan: WindowPlan,
                 params: PcpParams | None = None, threads: int = 1):
    """Principal component pursuit per fast-time window, reassembled.

    The sparsity weight is recomputed from each window's dimensions
    (unless fixed in params).  Windows are independent; `threads` > 1
    solves them concurrently.

    Returns (low_rank: TraceMatrix, sparse: TraceMatrix, results: list).
    """
    params = params or PcpParams()
    windows = make_windows(tm, plan)

    def solve(w):
        return pcp_solve(w.data, params)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(solve, windows))
    else:
        results = [solve(w) for w in windows]
    l_parts = [TraceMatrix(r.L, w.s_axis, w.t_axis, w.amp_scale)
               for r, w in zip(results, windows)]
    s_parts = [TraceMatrix(r.S, w.s_axis, w.t_axis, w.amp_scale)
               for r, w in zip(results, windows)]
    return reassemble(l_parts, plan), reassemble(s_parts, plan), results
