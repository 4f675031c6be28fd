"""Command-line pipeline: simulate traces, separate them, analyze rank,
image the scene, and estimate target motion.

Artifacts land in the output directory as SARM matrices, CSV curves, and
a JSON manifest; exit codes are 0 (success), 1 (configuration error),
2 (numerical failure).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import geometry, imaging, motionest, rank, rpca, signal, tracematrix
from .scene import ConfigError, SceneConfig, load_config, preset, save_config

__all__ = ["main"]


def _manifest_update(out: Path, **entries):
    path = out / "manifest.json"
    data = json.loads(path.read_text()) if path.exists() else {
        "artifacts": {}, "subcommands": []}
    for k, v in entries.items():
        if k == "artifacts":
            data["artifacts"].update(v)
        elif k == "subcommand":
            data["subcommands"].append(v)
        else:
            data[k] = v
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, columns):
    cols = [np.asarray(c) for c in columns]
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in zip(*cols):
            f.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _synthesize(cfg: SceneConfig, targets=None):
    rc = cfg.radar()
    traj = cfg.trajectory()
    frame = cfg.frame()
    grid = cfg.sampling_grid()
    targets = cfg.all_targets() if targets is None else targets
    return signal.synthesize_traces(rc, traj, frame, targets, grid)


def cmd_simulate(cfg: SceneConfig, out: Path, args) -> None:
    tm = _synthesize(cfg)
    tracematrix.save(tm, out / "traces.sarm")
    artifacts = {"traces": "traces.sarm"}
    movers = [t.to_target() for t in cfg.targets if t.is_moving]
    if movers:
        stationary = [t for t in cfg.all_targets() if not t.is_moving]
        grid = cfg.sampling_grid()
        rc, traj, frame = cfg.radar(), cfg.trajectory(), cfg.frame()
        tm_m = signal.synthesize_traces(rc, traj, frame, movers, grid)
        tracematrix.save(tm_m, out / "traces_moving.sarm")
        artifacts["traces_moving"] = "traces_moving.sarm"
        if stationary:
            tm_s = signal.synthesize_traces(rc, traj, frame, stationary,
                                            grid)
            tracematrix.save(tm_s, out / "traces_stationary.sarm")
            artifacts["traces_stationary"] = "traces_stationary.sarm"
    save_config(cfg, out / "config.ini")
    artifacts["config"] = "config.ini"
    _manifest_update(out, subcommand="simulate", artifacts=artifacts,
                     trace_shape=list(tm.shape))


def _load_or_synthesize(cfg: SceneConfig, out: Path):
    path = out / "traces.sarm"
    if path.exists():
        return tracematrix.load(path)
    return _synthesize(cfg)


def cmd_rpca(cfg: SceneConfig, out: Path, args) -> None:
    tm = _load_or_synthesize(cfg, out)
    plan = cfg.window_plan()
    low, sparse, results = rpca.pcp_windowed(tm, plan, cfg.pcp_params(),
                                             threads=args.threads)
    tracematrix.save(low, out / "low_rank.sarm")
    tracematrix.save(sparse, out / "sparse.sarm")
    diag = {
        "windows": plan.count(tm.shape[1]),
        "window_width": plan.width,
        "overlap": plan.overlap,
        "iters": [int(r.iters) for r in results],
        "residuals": [float(r.residual) for r in results],
        "ranks": [int(r.rank) for r in results],
        "converged": [bool(r.converged) for r in results],
    }
    (out / "rpca.json").write_text(json.dumps(diag, indent=2) + "\n")
    _manifest_update(out, subcommand="rpca", artifacts={
        "low_rank": "low_rank.sarm", "sparse": "sparse.sarm",
        "rpca_diagnostics": "rpca.json"})


def _rank_sweep(cfg: SceneConfig, out: Path) -> dict:
    rc, traj, frame = cfg.radar(), cfg.trajectory(), cfg.frame()
    grid = cfg.sampling_grid()
    eps = cfg.rank_epsilon
    offsets = np.linspace(1.0, cfg.rank_sweep_max_m, cfg.rank_sweep_points)
    computed, asymptotic = [], []
    n1 = cfg.n_slow + 1
    for off in offsets:
        if cfg.rank_sweep == "cross_range":
            tgt = geometry.Target(rho0=np.array([0.0, off, 0.0]))
            a = geometry.alpha(frame, traj, tgt, rc.c)
            model = rank.covariance_model_1target(a, rc, cfg.delta_s_s,
                                                  grid.delta_t, cfg.n_slow)
            asym = rank.szego_rank_fraction(a, rc.B, cfg.delta_s_s, eps)
        else:  # two_target
            rho1 = np.array(cfg.targets[0].position_m)
            rho2 = np.array([cfg.targets[1].position_m[0], off, 0.0])
            a1, a2, beta = geometry.alpha_j_beta(frame, traj, rho1, rho2,
                                                 rc.c)
            model = rank.covariance_model_2target(a1, a2, beta, rc,
                                                  cfg.delta_s_s,
                                                  grid.delta_t, cfg.n_slow)
            sym = rank.symbol_2target(model.xis[0], model.gammas[0],
                                      model.xis[1], model.gammas[1],
                                      rc.B, grid.delta_t)
            asym = rank.symbol_rank_fraction(sym, eps)
        computed.append(rank.essential_rank(model.C, eps))
        asymptotic.append(asym * n1)
    _write_csv(out / "rank_curve.csv",
               ["offset_m", "essential_rank", "asymptotic_rank"],
               [offsets, computed, asymptotic])
    return {"rank_curve": "rank_curve.csv"}


def cmd_rank(cfg: SceneConfig, out: Path, args) -> None:
    rc, traj, frame = cfg.radar(), cfg.trajectory(), cfg.frame()
    grid = cfg.sampling_grid()
    eps = cfg.rank_epsilon
    tm = _load_or_synthesize(cfg, out)
    C_emp = rank.covariance_empirical(tm)
    ev_emp = np.linalg.eigvalsh(C_emp)[::-1]
    artifacts = {}
    report = {
        "epsilon": eps,
        "empirical_rank": rank.essential_rank(C_emp, eps),
        "n_plus_1": int(C_emp.shape[0]),
    }
    columns = [np.arange(1, ev_emp.size + 1), ev_emp]
    header = ["index", "empirical_eigenvalue"]
    explicit = [t.to_target() for t in cfg.targets]
    if cfg.n_random_stationary == 0 and len(explicit) == 1:
        a = geometry.alpha(frame, traj, explicit[0], rc.c)
        model = rank.covariance_model_1target(a, rc, cfg.delta_s_s,
                                              grid.delta_t, cfg.n_slow)
        sym = rank.symbol_1target(model.xis[0], model.gammas[0], rc.B,
                                  grid.delta_t)
        report.update(alpha=a, model_rank=rank.essential_rank(model.C, eps),
                      asymptotic_fraction=rank.szego_rank_fraction(
                          a, rc.B, cfg.delta_s_s, eps))
        columns.append(np.linalg.eigvalsh(model.C)[::-1])
        header.append("model_eigenvalue")
        theta = np.linspace(-np.pi, np.pi, 2001)
        _write_csv(out / "symbol.csv", ["theta", "q"], [theta, sym(theta)])
        artifacts["symbol"] = "symbol.csv"
    elif cfg.n_random_stationary == 0 and len(explicit) == 2 \
            and not any(t.is_moving for t in cfg.targets):
        a1, a2, beta = geometry.alpha_j_beta(
            frame, traj, explicit[0].rho0, explicit[1].rho0, rc.c)
        model = rank.covariance_model_2target(a1, a2, beta, rc,
                                              cfg.delta_s_s, grid.delta_t,
                                              cfg.n_slow)
        report.update(alpha1=a1, alpha2=a2, beta=beta,
                      hankel_split=model.has_hankel_split,
                      model_rank=rank.essential_rank(model.C, eps))
        columns.append(np.linalg.eigvalsh(model.C)[::-1])
        header.append("model_eigenvalue")
    _write_csv(out / "eigenvalues.csv", header, columns)
    artifacts["eigenvalues"] = "eigenvalues.csv"
    if cfg.rank_sweep != "none":
        artifacts.update(_rank_sweep(cfg, out))
    (out / "rank_report.json").write_text(
        json.dumps(report, indent=2) + "\n")
    artifacts["rank_report"] = "rank_report.json"
    _manifest_update(out, subcommand="rank", artifacts=artifacts)


def _image_grid(cfg: SceneConfig) -> imaging.ImageGrid:
    rc = cfg.radar()
    frame = cfg.frame()
    aperture = cfg.trajectory_speed_m_s * cfg.n_slow * cfg.delta_s_s
    range_res = rc.c / rc.B
    cross_res = rc.lambda_o * frame.L / aperture
    return imaging.ImageGrid.for_resolution(
        np.array(cfg.reference_m, float), cfg.image_extent_m, range_res,
        cross_res, oversample=cfg.image_oversample)


def _save_image(img: imaging.SarImage, path: Path):
    tm = tracematrix.TraceMatrix(img.values, img.grid.x_axis,
                                 img.grid.y_axis)
    tracematrix.save(tm, path)


def cmd_image(cfg: SceneConfig, out: Path, args) -> None:
    rc, traj = cfg.radar(), cfg.trajectory()
    rho_o = np.array(cfg.reference_m, float)
    grid = _image_grid(cfg)
    artifacts = {}
    tm = _load_or_synthesize(cfg, out)
    _save_image(imaging.backproject(tm, grid, traj, rho_o, rc.c),
                out / "image_traces.sarm")
    artifacts["image_traces"] = "image_traces.sarm"
    low_path = out / "low_rank.sarm"
    if low_path.exists():
        low = tracematrix.load(low_path)
        _save_image(imaging.backproject(low, grid, traj, rho_o, rc.c),
                    out / "image_low.sarm")
        artifacts["image_low"] = "image_low.sarm"
    sparse_path = out / "sparse.sarm"
    motion_path = out / "motion.json"
    if sparse_path.exists():
        sparse = tracematrix.load(sparse_path)
        motion = None
        if motion_path.exists():
            motion = np.array(json.loads(
                motion_path.read_text())["u_hat_sparse"], float)
        img = imaging.backproject(sparse, grid, traj, rho_o, rc.c,
                                  motion=motion)
        _save_image(img, out / "image_sparse.sarm")
        artifacts["image_sparse"] = "image_sparse.sarm"
    _manifest_update(out, subcommand="image", artifacts=artifacts)


def cmd_motion(cfg: SceneConfig, out: Path, args) -> None:
    movers = [t for t in cfg.targets if t.is_moving]
    if not movers:
        raise motionest.NoMovingEnergyError(
            "scene has no moving target to estimate")
    mover = movers[0]
    anchor = np.array(mover.position_m, float)
    u_true = np.array(mover.velocity_m_s, float)
    rc, traj = cfg.radar(), cfg.trajectory()
    rho_o = np.array(cfg.reference_m, float)
    tm_raw = _load_or_synthesize(cfg, out)
    report = {"u_true": [float(x) for x in u_true],
              "anchor": [float(x) for x in anchor]}
    est_raw = motionest.estimate_velocity(tm_raw, traj, rho_o, rc.c,
                                          anchor, threads=args.threads)
    report["u_hat_raw"] = [float(x) for x in est_raw.u_hat]
    s_axis = tm_raw.s_axis
    err_raw = motionest.trajectory_error(est_raw.u_hat, u_true, s_axis)
    cols = [s_axis, err_raw]
    header = ["s", "error_raw_m"]
    sparse_path = out / "sparse.sarm"
    u_best = est_raw.u_hat
    if sparse_path.exists():
        sparse = tracematrix.load(sparse_path)
        est_sep = motionest.estimate_velocity(sparse, traj, rho_o, rc.c,
                                              anchor,
                                              threads=args.threads)
        report["u_hat_sparse"] = [float(x) for x in est_sep.u_hat]
        cols.append(motionest.trajectory_error(est_sep.u_hat, u_true,
                                               s_axis))
        header.append("error_sparse_m")
        u_best = est_sep.u_hat
    else:
        report["u_hat_sparse"] = report["u_hat_raw"]
    report["u_hat"] = [float(x) for x in u_best]
    (out / "motion.json").write_text(json.dumps(report, indent=2) + "\n")
    _write_csv(out / "trajectory_error.csv", header, cols)
    _manifest_update(out, subcommand="motion", artifacts={
        "motion": "motion.json",
        "trajectory_error": "trajectory_error.csv"})


def cmd_pipeline(cfg: SceneConfig, out: Path, args) -> None:
    cmd_simulate(cfg, out, args)
    cmd_rpca(cfg, out, args)
    cmd_rank(cfg, out, args)
    if any(t.is_moving for t in cfg.targets):
        cmd_motion(cfg, out, args)
    cmd_image(cfg, out, args)


_COMMANDS = {
    "simulate": cmd_simulate,
    "rpca": cmd_rpca,
    "rank": cmd_rank,
    "image": cmd_image,
    "motion": cmd_motion,
    "pipeline": cmd_pipeline,
}


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sarpca",
        description="Simulate, separate, analyze, and image radar traces")
    p.add_argument("subcommand", choices=sorted(_COMMANDS))
    p.add_argument("--config", help="scene config file (INI)")
    p.add_argument("--preset", choices=["sim1", "sim2", "sim3", "fig5",
                                        "fig7", "fig10"],
                   help="named scenario (ignored when --config is given)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None,
                   help="override the random-placement seed")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads for windows / focus scans")
    p.add_argument("--full-size", action="store_true",
                   help="full 296-pulse aperture and resolution/4 pixels")
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.config:
            cfg = load_config(args.config)
            if args.seed is not None:
                cfg.seed = args.seed
        elif args.preset:
            cfg = preset(args.preset, full_size=args.full_size,
                         seed=args.seed)
        else:
            raise ConfigError("either --config or --preset is required")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _manifest_update(out, parameters={
            k: (list(v) if isinstance(v, tuple) else v)
            for k, v in vars(cfg).items() if k != "targets"})
        _COMMANDS[args.subcommand](cfg, out, args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # numerical / runtime failure
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
