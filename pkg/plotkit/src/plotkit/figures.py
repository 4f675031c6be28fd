"""Figure rendering from a JSON spec.

A spec file lists figures; each names its artifacts relative to the
spec's ``root`` directory (default: the spec file's own directory).

Figure kinds:

- ``panels``: one row of heatmap panels, each from a SARM file, with
  per-panel normalization mode ``normalized`` (linear, scaled by the
  largest absolute value) or ``db`` (20 log10(|v|/max), floored at
  ``floor_db``, default -50).
- ``covariance``: heatmap of the row Gram matrix D D^T of a SARM file.
- ``rank_curve``: curve from a CSV; a sweep CSV (offset column plus
  computed/asymptotic ranks) plots both, an eigenvalue CSV plots the
  spectra on a log scale with the relative threshold line.
- ``image``: single heatmap of an image SARM with x/y axes in meters.
- ``error_curves``: one line per error column of a CSV against its
  first (abscissa) column.

Rendering is deterministic: fixed figure sizes, dpi 150, no timestamps.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .sarm import read_sarm  # noqa: E402

__all__ = ["FigureSpecError", "load_spec", "render"]

DEFAULT_FLOOR_DB = -50.0
_DPI = 150

_KINDS = ("panels", "covariance", "rank_curve", "image", "error_curves")


class FigureSpecError(ValueError):
    """Malformed figure spec or missing artifact."""


def load_spec(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise FigureSpecError(f"spec file {path} does not exist")
    try:
        spec = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise FigureSpecError(f"spec file {path} is not valid JSON: {e}") \
            from e
    if not isinstance(spec, dict) or "figures" not in spec:
        raise FigureSpecError("spec must be an object with a 'figures' list")
    root = Path(spec.get("root", path.parent))
    if not root.is_absolute():
        root = path.parent / root
    figures = spec["figures"]
    if not isinstance(figures, list) or not figures:
        raise FigureSpecError("'figures' must be a non-empty list")
    names = set()
    for fig in figures:
        if "name" not in fig or "kind" not in fig:
            raise FigureSpecError("every figure needs 'name' and 'kind'")
        if fig["kind"] not in _KINDS:
            raise FigureSpecError(
                f"unknown figure kind {fig['kind']!r}; "
                f"choose from {_KINDS}")
        if fig["name"] in names:
            raise FigureSpecError(f"duplicate figure name {fig['name']!r}")
        names.add(fig["name"])
    return {"root": root, "figures": figures}


def _artifact(root: Path, fig: dict, key: str) -> Path:
    if key not in fig:
        raise FigureSpecError(
            f"figure {fig['name']!r} is missing the {key!r} entry")
    p = root / fig[key]
    if not p.exists():
        raise FigureSpecError(
            f"figure {fig['name']!r}: artifact {p} does not exist")
    return p


def _read_csv(path: Path):
    lines = path.read_text().strip().splitlines()
    if len(lines) < 2:
        raise FigureSpecError(f"{path}: CSV has no data rows")
    header = [h.strip() for h in lines[0].split(",")]
    try:
        data = np.array([[float(x) for x in ln.split(",")]
                         for ln in lines[1:]])
    except ValueError as e:
        raise FigureSpecError(f"{path}: non-numeric CSV data: {e}") from e
    return header, data


def _scaled(values: np.ndarray, mode: str, floor_db: float):
    peak = np.max(np.abs(values))
    if mode == "normalized":
        out = values / peak if peak > 0 else values
        lim = 1.0 if peak > 0 else 0.5
        return out, dict(cmap="RdBu_r", vmin=-lim, vmax=lim), "amplitude"
    if mode == "db":
        if peak == 0.0:
            db = np.full_like(values, floor_db)
        else:
            with np.errstate(divide="ignore"):
                db = 20.0 * np.log10(np.abs(values) / peak)
            db = np.maximum(db, floor_db)
        return db, dict(cmap="viridis", vmin=floor_db, vmax=0.0), "dB"
    raise FigureSpecError(f"unknown normalization mode {mode!r}")


def _heatmap(ax, sarm, mode, floor_db, xlabel, ylabel):
    vals, kw, label = _scaled(sarm.data, mode, floor_db)
    extent = [sarm.col_axis[0], sarm.col_axis[-1],
              sarm.row_axis[-1], sarm.row_axis[0]]
    im = ax.imshow(vals, aspect="auto", extent=extent,
                   interpolation="nearest", **kw)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return im, label


def _render_panels(fig_spec, root, out_path):
    panels = fig_spec.get("panels")
    if not panels:
        raise FigureSpecError(
            f"figure {fig_spec['name']!r} needs a non-empty 'panels' list")
    fig, axes = plt.subplots(1, len(panels),
                             figsize=(4.0 * len(panels), 3.6),
                             squeeze=False)
    for ax, panel in zip(axes[0], panels):
        sarm = read_sarm(_artifact(root, {**panel,
                                          "name": fig_spec["name"]},
                                   "sarm"))
        mode = panel.get("mode", "normalized")
        floor = float(panel.get("floor_db", DEFAULT_FLOOR_DB))
        im, label = _heatmap(ax, sarm, mode, floor,
                             "fast time (s)", "slow time (s)")
        ax.set_title(panel.get("title", Path(panel["sarm"]).stem))
        fig.colorbar(im, ax=ax, label=label)
    _save(fig, out_path)


def _render_covariance(fig_spec, root, out_path):
    sarm = read_sarm(_artifact(root, fig_spec, "sarm"))
    cov = sarm.data @ sarm.data.T
    fig, ax = plt.subplots(figsize=(4.6, 4.0))
    vals, kw, label = _scaled(cov, fig_spec.get("mode", "normalized"),
                              float(fig_spec.get("floor_db",
                                                 DEFAULT_FLOOR_DB)))
    s = sarm.row_axis
    im = ax.imshow(vals, aspect="equal",
                   extent=[s[0], s[-1], s[-1], s[0]],
                   interpolation="nearest", **kw)
    ax.set_xlabel("slow time (s)")
    ax.set_ylabel("slow time (s)")
    ax.set_title(fig_spec.get("title", "trace covariance"))
    fig.colorbar(im, ax=ax, label=label)
    _save(fig, out_path)


def _render_rank_curve(fig_spec, root, out_path):
    header, data = _read_csv(_artifact(root, fig_spec, "csv"))
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    if header[0].startswith("offset"):
        ax.plot(data[:, 0], data[:, 1], "o-", label=header[1])
        if data.shape[1] > 2:
            ax.plot(data[:, 0], data[:, 2], "--", label=header[2])
        ax.set_xlabel("offset (m)")
        ax.set_ylabel("essential rank")
    else:
        for k in range(1, data.shape[1]):
            ax.semilogy(data[:, 0], np.maximum(np.abs(data[:, k]),
                                               1e-300),
                        label=header[k])
        eps = float(fig_spec.get("epsilon", 0.01))
        top = np.abs(data[:, 1]).max()
        ax.axhline(eps * top, color="gray", linestyle=":",
                   label=f"{eps} of max")
        ax.set_xlabel(header[0])
        ax.set_ylabel("eigenvalue")
    ax.legend()
    ax.set_title(fig_spec.get("title", "rank curve"))
    _save(fig, out_path)


def _render_image(fig_spec, root, out_path):
    sarm = read_sarm(_artifact(root, fig_spec, "sarm"))
    fig, ax = plt.subplots(figsize=(4.8, 4.0))
    mode = fig_spec.get("mode", "db")
    floor = float(fig_spec.get("floor_db", DEFAULT_FLOOR_DB))
    im, label = _heatmap(ax, sarm, mode, floor,
                         "cross-range (m)", "range (m)")
    ax.set_title(fig_spec.get("title", "image"))
    fig.colorbar(im, ax=ax, label=label)
    _save(fig, out_path)


def _render_error_curves(fig_spec, root, out_path):
    header, data = _read_csv(_artifact(root, fig_spec, "csv"))
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    for k in range(1, data.shape[1]):
        ax.plot(data[:, 0], data[:, k], label=header[k])
    ax.set_xlabel(header[0])
    ax.set_ylabel("error (m)")
    ax.legend()
    ax.set_title(fig_spec.get("title", "trajectory error"))
    _save(fig, out_path)


def _save(fig, out_path: Path):
    fig.tight_layout()
    fig.savefig(out_path, dpi=_DPI, metadata={"Software": None})
    plt.close(fig)


_RENDERERS = {
    "panels": _render_panels,
    "covariance": _render_covariance,
    "rank_curve": _render_rank_curve,
    "image": _render_image,
    "error_curves": _render_error_curves,
}


def render(spec: dict, out_dir) -> list:
    """Render every figure in a loaded spec into out_dir.

    Returns the list of written file paths.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for fig_spec in spec["figures"]:
        out_path = out_dir / f"{fig_spec['name']}.png"
        _RENDERERS[fig_spec["kind"]](fig_spec, spec["root"], out_path)
        written.append(out_path)
    return written
