"""Shared fixtures: completed pipeline runs reused across acceptance tests."""

import numpy as np
import pytest

from sarpca import rpca, tracematrix
from sarpca.cli import main


def _run_pipeline(tmp_path_factory, preset_name):
    out = tmp_path_factory.mktemp(f"{preset_name}_run")
    rc = main(["pipeline", "--preset", preset_name, "--out", str(out)])
    assert rc == 0, f"{preset_name} pipeline failed with exit code {rc}"
    return out


@pytest.fixture(scope="session")
def sim1_run(tmp_path_factory):
    """Full pipeline on the single-mover clutter scene (desk scale)."""
    return _run_pipeline(tmp_path_factory, "sim1")


@pytest.fixture(scope="session")
def sim3_run(tmp_path_factory):
    """Full pipeline on the strong-mover clutter scene (desk scale)."""
    return _run_pipeline(tmp_path_factory, "sim3")


@pytest.fixture(scope="session")
def sim1_unwindowed(sim1_run):
    """Sparse part of a single whole-matrix decomposition of the sim1
    traces (no fast-time windowing)."""
    traces = tracematrix.load(sim1_run / "traces.sarm")
    result = rpca.pcp_solve(traces.data)
    assert result.converged
    return result.S


@pytest.fixture(scope="session")
def sim1_populations(sim1_run):
    """(full, moving-only, stationary-only, windowed-sparse) trace data."""
    return tuple(
        tracematrix.load(sim1_run / name).data
        for name in ("traces.sarm", "traces_moving.sarm",
                     "traces_stationary.sarm", "sparse.sarm"))


def separation_metrics(sparse, moving, stationary):
    """(capture, leakage) of a sparse estimate against the per-population
    truth.

    Supports where moving and stationary echoes overlap cannot be
    attributed by any additive split, so the metrics are evaluated on
    the exclusive supports: capture is the fraction of moving-target
    energy recovered where only the mover is present, leakage the
    fraction of stationary energy misassigned where only clutter is
    present.
    """
    on_mv = np.abs(moving) > 1e-3 * np.abs(moving).max()
    on_st = np.abs(stationary) > 1e-3 * np.abs(stationary).max()
    only_mv = on_mv & ~on_st
    only_st = on_st & ~on_mv
    capture = np.sum(sparse[only_mv] ** 2) / np.sum(moving[only_mv] ** 2)
    leakage = np.sum(sparse[only_st] ** 2) / np.sum(stationary[only_st] ** 2)
    return float(capture), float(leakage)
