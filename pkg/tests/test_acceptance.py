"""End-to-end acceptance suite.

Each test pins one headline behavior of the package: scaling numbers of
the radar regime, structural laws of the trace covariance, solver
recovery guarantees, and the full separate-then-image-then-track chain
on the standard scenes.
"""

import json
import warnings

import numpy as np
import pytest

from conftest import separation_metrics
from sarpca import geometry, imaging, rank, rpca, signal, tracematrix
from sarpca.cli import _image_grid
from sarpca.geometry import (
    LinearTrajectory,
    RadarConstants,
    SceneFrame,
    Target,
)
from sarpca.scene import load_config

C = 3.0e8
RC = RadarConstants(c=C, nu_o=9.6e9, B=622.0e6)
DS = 0.015
DT = 1.0 / (4.0 * 9.6e9)
RHO_O = np.zeros(3)


def gotcha_track():
    return LinearTrajectory(center=np.array([10000.0, 0.0, 0.0]),
                            speed=70.0, tangent=np.array([0.0, 1.0, 0.0]))


def gotcha_frame():
    return SceneFrame.from_geometry(gotcha_track(), RHO_O)


def synthesize(targets, n):
    traj, frame = gotcha_track(), gotcha_frame()
    s = DS * np.arange(-(n // 2), n // 2 + 1)
    spread = signal.delay_spread(traj, frame, targets, s, C)
    grid = signal.SamplingGrid.for_scene(RC, n, DS, spread)
    return signal.synthesize_traces(RC, traj, frame, targets, grid)


class TestScalingNumbers:
    def test_fresnel_number(self):
        # a = 310 m, L = 10 km; with the conventional 3 cm wavelength
        # the quadratic phase measure a^2/(lambda L) is 320.3
        rounded = RadarConstants(c=C, nu_o=1.0e10, B=622.0e6)
        chk = geometry.fresnel_check(310.0, rounded, gotcha_frame(),
                                     gotcha_track(), imaging_radius=35.0)
        assert chk.number == pytest.approx(320.3, abs=0.5)

    def test_range_offset_parameter_values(self):
        frame, traj = gotcha_frame(), gotcha_track()
        _, _, beta = geometry.alpha_j_beta(
            frame, traj, np.array([5.0, 5.0, 0.0]),
            np.array([-5.0, -5.0, 0.0]), C)
        assert RC.B * abs(beta) == pytest.approx(41.47, rel=5e-3)
        _, _, beta = geometry.alpha_j_beta(
            frame, traj, np.array([0.15, 5.0, 0.0]),
            np.array([-0.15, -15.0, 0.0]), C)
        assert RC.B * abs(beta) == pytest.approx(1.24, rel=5e-3)


class TestResolution:
    def test_point_spread_widths(self):
        # 124 m aperture: range FWHM c/B, cross-range FWHM lambda L / a,
        # both within 20 percent
        n = 118  # aperture = V n ds = 123.9 m
        tm = synthesize([Target(rho0=RHO_O)], n)
        traj = gotcha_track()
        xr = np.linspace(-1.5, 1.5, 1201)
        pts = np.stack([xr, np.zeros_like(xr), np.zeros_like(xr)], axis=1)
        vals, _ = imaging.backproject_points(tm, pts, traj, RHO_O, C)
        w_range = imaging.envelope_fwhm(xr, vals)
        assert w_range == pytest.approx(C / RC.B, rel=0.2)
        assert w_range == pytest.approx(0.48, rel=0.2)

        aperture = 70.0 * n * DS
        yr = np.linspace(-8.0, 8.0, 3201)
        pts = np.stack([np.zeros_like(yr), yr, np.zeros_like(yr)], axis=1)
        vals, _ = imaging.backproject_points(tm, pts, traj, RHO_O, C)
        w_cross = imaging.envelope_fwhm(yr, vals)
        assert w_cross == pytest.approx(RC.lambda_o * 1.0e4 / aperture,
                                        rel=0.2)
        assert w_cross == pytest.approx(2.5, rel=0.2)


class TestCovarianceStructure:
    def test_reference_target_rank_one(self):
        tm = synthesize([Target(rho0=RHO_O)], 64)
        sv = np.linalg.svd(tm.data, compute_uv=False)
        assert np.sum(sv >= 0.01 * sv[0]) == 1
        cov = rank.covariance_empirical(tm)
        assert rank.essential_rank(cov, 0.01) == 1

    def test_cross_range_target_covariance_is_toeplitz(self):
        target = Target(rho0=np.array([0.0, 15.0, 0.0]))
        tm = synthesize([target], 296)
        cov = rank.covariance_empirical(tm)
        n = cov.shape[0]
        cmax = np.abs(cov).max()
        worst = 0.0
        for k in range(-(n - 2), n - 1):
            d = np.diagonal(cov, offset=k)
            m = d.mean()
            # relative variation is only meaningful on diagonals that
            # carry signal; near-zero diagonals are pure cancellation
            if abs(m) >= 0.1 * cmax:
                worst = max(worst, d.std() / abs(m))
        assert worst < 0.05

        a = geometry.alpha(gotcha_frame(), gotcha_track(), target, C)
        model = rank.covariance_model_1target(a, RC, DS, tm.delta_t, 296)
        rel = (np.linalg.norm(cov - model.C, "fro")
               / np.linalg.norm(model.C, "fro"))
        assert rel < 0.05

    def test_normalized_rank_converges_to_symbol_prediction(self):
        a = 1e-8
        frac = rank.szego_rank_fraction(a, RC.B, DS, 0.01)
        gaps = []
        for n in (256, 512, 1024, 2048):
            m = rank.covariance_model_1target(a, RC, DS, DT, n)
            r = rank.essential_rank(m.C, 0.01)
            gaps.append(abs(r / (n + 1) - frac))
        assert all(later < earlier
                   for earlier, later in zip(gaps, gaps[1:]))
        assert gaps[-1] < 0.1 * gaps[0]

    def test_rank_growth_laws(self):
        traj, frame = gotcha_track(), gotcha_frame()
        # cross-range offset sweep
        ranks = []
        for y in np.linspace(1.0, 30.0, 15):
            a = geometry.alpha(frame, traj,
                               Target(rho0=np.array([0.0, y, 0.0])), C)
            m = rank.covariance_model_1target(a, RC, DS, DT, 296)
            ranks.append(rank.essential_rank(m.C, 0.01))
        assert all(b >= a_ for a_, b in zip(ranks, ranks[1:]))
        assert ranks[-1] > ranks[0]
        # range-velocity sweep, inside the slow-time alias limit
        # pi c / (2 omega_o ds) = 0.52 m/s
        ranks = []
        for ux in np.linspace(0.02, 0.5, 13):
            a = geometry.alpha(frame, traj,
                               Target(rho0=RHO_O,
                                      u=np.array([ux, 0.0, 0.0])), C)
            m = rank.covariance_model_1target(a, RC, DS, DT, 148)
            ranks.append(rank.essential_rank(m.C, 0.01))
        assert all(b >= a_ for a_, b in zip(ranks, ranks[1:]))
        assert ranks[-1] > ranks[0]
        # the 28 m/s mover saturates: unclamped fraction 1.683 -> 1
        u = 28.0 / np.sqrt(2.0)
        a = geometry.alpha(frame, traj,
                           Target(rho0=RHO_O, u=np.array([u, u, 0.0])), C)
        raw = 2.0 * abs(a) * RC.B * DS * np.sqrt(np.log(100.0)) / np.pi
        assert raw == pytest.approx(1.683, rel=1e-2)
        assert rank.szego_rank_fraction(a, RC.B, DS, 0.01) == 1.0

    def test_two_target_rank_has_local_minimum_at_equal_cross_range(self):
        traj, frame = gotcha_track(), gotcha_frame()
        rho1 = np.array([5.0, 5.0, 0.0])
        offsets = list(range(1, 11))
        ranks = []
        for y in offsets:
            a1, a2, beta = geometry.alpha_j_beta(
                frame, traj, rho1, np.array([-5.0, float(y), 0.0]), C)
            m = rank.covariance_model_2target(a1, a2, beta, RC, DS, DT,
                                              296)
            ranks.append(rank.essential_rank(m.C, 0.01))
        i = int(np.argmin(ranks))
        assert offsets[i] == 5  # equal cross-ranges
        assert ranks[i] < ranks[i - 1]
        assert ranks[i] < ranks[i + 1]

    def test_singular_value_distribution_with_hankel_part(self):
        # mean of F(sigma_j) matches the symbol integral at n = 2000
        a1, a2, beta = geometry.alpha_j_beta(
            gotcha_frame(), gotcha_track(), np.array([0.15, 5.0, 0.0]),
            np.array([-0.15, -15.0, 0.0]), C)
        m = rank.covariance_model_2target(a1, a2, beta, RC, DS, DT, 2000)
        assert m.has_hankel_split
        sym = rank.symbol_2target(m.xis[0], m.gammas[0], m.xis[1],
                                  m.gammas[1], RC.B, DT)
        j = np.arange(-20000, 20001)
        bound = float(
            np.sum(np.abs(rank.sequence_c(j, m.xis, m.gammas, RC.B, DT)))
            + 2.0 * np.sum(np.abs(rank.sequence_h(
                j, m.xis[0], beta / (a1 * DS), RC.B, DT,
                gamma1=m.gammas[0]))))
        lhs, rhs = rank.sv_distribution_check(m.T, m.H, sym,
                                              lambda x: min(x, bound))
        assert lhs == pytest.approx(rhs, rel=0.05)


class TestSolver:
    def test_low_rank_plus_sparse_recovery(self):
        rng = np.random.default_rng(3)
        n1, n2, r = 200, 400, 2
        L0 = rng.standard_normal((n1, r)) @ rng.standard_normal((r, n2))
        S0 = np.zeros((n1, n2))
        idx = rng.choice(n1 * n2, size=n1 * n2 // 100, replace=False)
        S0.flat[idx] = rng.uniform(-10.0, 10.0, idx.size)
        res = rpca.pcp_solve(L0 + S0)
        assert res.converged
        assert (np.linalg.norm(res.L - L0) / np.linalg.norm(L0)) < 1e-5
        assert (np.linalg.norm(res.S - S0) / np.linalg.norm(S0)) < 1e-5


class TestSeparation:
    def test_windowed_separation_meets_bounds(self, sim1_populations):
        _, moving, stationary, sparse = sim1_populations
        capture, leakage = separation_metrics(sparse, moving, stationary)
        assert capture >= 0.90
        assert leakage <= 0.10

    def test_unwindowed_separation_violates_a_bound(self, sim1_populations,
                                                    sim1_unwindowed):
        _, moving, stationary, _ = sim1_populations
        capture, leakage = separation_metrics(sim1_unwindowed, moving,
                                              stationary)
        assert capture < 0.90 or leakage > 0.10


class TestEndToEnd:
    def test_strong_mover_scene_imaging(self, sim3_run):
        cfg = load_config(sim3_run / "config.ini")
        rc, traj = cfg.radar(), cfg.trajectory()
        grid = _image_grid(cfg)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            img_mv = imaging.backproject(
                tracematrix.load(sim3_run / "traces_moving.sarm"),
                grid, traj, RHO_O, rc.c).values
            img_st = imaging.backproject(
                tracematrix.load(sim3_run / "traces_stationary.sarm"),
                grid, traj, RHO_O, rc.c).values
        # streak: pixels dominated by the mover in the truth images
        streak = ((np.abs(img_mv) >= 0.3 * np.abs(img_mv).max())
                  & (np.abs(img_mv) >= 3.0 * np.abs(img_st)))
        assert streak.sum() > 100
        img_full = tracematrix.load(sim3_run / "image_traces.sarm").data
        img_low = tracematrix.load(sim3_run / "image_low.sarm").data
        drop_db = 10.0 * np.log10(np.sum(img_full[streak] ** 2)
                                  / np.sum(img_low[streak] ** 2))
        assert drop_db >= 6.0

        # the compensated sparse image peaks at the mover's anchor
        # within one resolution cell
        img_sp = tracematrix.load(sim3_run / "image_sparse.sarm")
        i, j = np.unravel_index(np.argmax(np.abs(img_sp.data)),
                                img_sp.data.shape)
        peak = (img_sp.s_axis[i], img_sp.t_axis[j])
        range_res = rc.c / rc.B
        cross_res = rc.lambda_o * 1.0e4 / (70.0 * cfg.n_slow * DS)
        assert abs(peak[0]) <= range_res
        assert abs(peak[1]) <= cross_res

    @pytest.mark.parametrize("run", ["sim1_run", "sim3_run"])
    def test_separated_traces_track_no_worse_than_raw(self, run, request):
        out = request.getfixturevalue(run)
        table = np.loadtxt(out / "trajectory_error.csv", delimiter=",",
                           skiprows=1)
        max_raw = table[:, 1].max()
        max_sparse = table[:, 2].max()
        assert max_sparse <= max_raw
        report = json.loads((out / "motion.json").read_text())
        u_true = np.array(report["u_true"])
        u_sparse = np.array(report["u_hat_sparse"])
        assert np.linalg.norm(u_sparse - u_true) < 0.5
