#!/usr/bin/env python3
"""Render figure panels from bridgeflow run artifacts.

    python plots/render.py --manifest <path-or-run-dir> --panel <kind> --out <img>

Panel kinds:
  trajectories     one polyline per rollout path, with initial samples,
                   terminal samples, and independent target samples marked
  density_overlay  terminal-sample KDE heatmap with exact target density
                   contours on the same grid
  metric_curve     normalized MMD and W2 against time

Everything is read from the documented CSV/JSON artifacts; no steering math
is recomputed here. Figures use fixed styles and carry no timestamps.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

PANELS = ("trajectories", "density_overlay", "metric_curve")

#: manifest that owns each panel's artifacts when a run directory is given
_PANEL_MANIFEST = {
    "trajectories": "manifest_rollout.json",
    "density_overlay": "manifest_eval.json",
    "metric_curve": "manifest_eval.json",
}


class SchemaMismatchError(ValueError):
    """The manifest or an artifact does not fit the requested panel."""


def read_table(path: Path) -> tuple[list[str], np.ndarray, dict]:
    """Read a run CSV: leading '# key=value' comments, header, float rows."""
    meta: dict[str, str] = {}
    columns: list[str] = []
    rows_start = 0
    lines = path.read_text(encoding="utf-8").splitlines()
    for i, line in enumerate(lines):
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, val = body.split("=", 1)
                meta[key.strip()] = val.strip()
            continue
        columns = line.split(",")
        rows_start = i + 1
        break
    data = [line.split(",") for line in lines[rows_start:] if line]
    arr = np.array(data, dtype=float) if data else np.empty((0, len(columns)))
    return columns, arr, meta


def resolve_manifest(manifest_arg: str, panel: str) -> dict:
    """Load the manifest document; run directories pick the panel's manifest."""
    path = Path(manifest_arg)
    if path.is_dir():
        path = path / _PANEL_MANIFEST[panel]
    if not path.exists():
        raise SchemaMismatchError(f"manifest not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    doc["_dir"] = str(path.parent)
    return doc


def artifact_by_role(manifest: dict, role: str) -> Path:
    for entry in manifest.get("files", []):
        if entry.get("role") == role:
            return Path(manifest["_dir"]) / entry["path"]
    raise SchemaMismatchError(
        f"manifest for command {manifest.get('command')!r} carries no {role!r} artifact; "
        f"available roles: {[f['role'] for f in manifest.get('files', [])]}"
    )


def panel_trajectories(manifest: dict, projection: tuple[int, int] | None) -> plt.Figure:
    cols, arr, _ = read_table(artifact_by_role(manifest, "trajectories"))
    if cols[:2] != ["path_id", "t"]:
        raise SchemaMismatchError(f"trajectories artifact has columns {cols}")
    n = len(cols) - 2
    i, j = projection if projection is not None else (max(n - 2, 0), n - 1)
    _, terminal, _ = read_table(artifact_by_role(manifest, "terminal_samples"))
    _, target, _ = read_table(artifact_by_role(manifest, "target_samples"))

    path_ids = arr[:, 0].astype(int)
    n_paths = path_ids.max() + 1
    steps = np.count_nonzero(path_ids == 0)
    xs = arr[:, 2 + i].reshape(n_paths, steps)
    ys = arr[:, 2 + j].reshape(n_paths, steps)

    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    for p in range(n_paths):
        ax.plot(xs[p], ys[p], color="0.6", lw=0.3, alpha=0.5, zorder=1)
    ax.scatter(xs[:, 0], ys[:, 0], s=6, color="tab:blue", zorder=2, label="initial")
    ax.scatter(
        terminal[:, i], terminal[:, j], s=6, color="tab:green", zorder=3, label="terminal"
    )
    ax.scatter(
        target[:, i], target[:, j], s=14, color="tab:red", marker="x", lw=0.7,
        zorder=4, label="target samples",
    )
    ax.set_xlabel(f"x_{i + 1}")
    ax.set_ylabel(f"x_{j + 1}")
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    return fig


def panel_density_overlay(manifest: dict) -> plt.Figure:
    cols, arr, meta = read_table(artifact_by_role(manifest, "density_grid"))
    if cols != ["x1", "x2", "kde", "target_density"]:
        raise SchemaMismatchError(f"density grid artifact has columns {cols}")
    nx, ny = int(meta["nx"]), int(meta["ny"])
    gx = arr[:, 0].reshape(nx, ny)
    gy = arr[:, 1].reshape(nx, ny)
    kde = arr[:, 2].reshape(nx, ny)
    exact = arr[:, 3].reshape(nx, ny)

    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    mesh = ax.pcolormesh(gx, gy, kde, cmap="viridis", shading="auto")
    fig.colorbar(mesh, ax=ax, label="terminal sample KDE")
    levels = np.linspace(exact.max() * 0.1, exact.max() * 0.9, 5)
    ax.contour(gx, gy, exact, levels=levels, colors="white", linewidths=0.8)
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title("KDE of terminal samples vs exact target density", fontsize=9)
    fig.tight_layout()
    return fig


def panel_metric_curve(manifest: dict) -> plt.Figure:
    cols, arr, _ = read_table(artifact_by_role(manifest, "metrics"))
    if cols != ["t", "mmd", "mmd_normalized", "w2"]:
        raise SchemaMismatchError(f"metrics artifact has columns {cols}")
    t = arr[:, 0]
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    ax.plot(t, arr[:, 2], color="tab:blue", label="MMD (normalized)")
    ax.axhline(1.0, color="0.7", lw=0.8, ls="--")
    ax.set_ylim(0.0, max(1.05, float(arr[:, 2].max()) * 1.1))
    ax.set_xlabel("t")
    ax.set_ylabel("normalized MMD")
    ax2 = ax.twinx()
    ax2.plot(t, arr[:, 3], color="tab:orange", label="W2")
    ax2.set_ylabel("W2")
    ax2.set_ylim(bottom=0.0)
    lines = ax.get_lines()[:1] + ax2.get_lines()[:1]
    ax.legend(lines, [line.get_label() for line in lines], fontsize=8)
    fig.tight_layout()
    return fig


def build_figure(manifest_arg: str, panel: str, projection: tuple[int, int] | None = None) -> plt.Figure:
    if panel not in PANELS:
        raise SchemaMismatchError(f"unknown panel {panel!r}; choose from {PANELS}")
    manifest = resolve_manifest(manifest_arg, panel)
    if panel == "trajectories":
        return panel_trajectories(manifest, projection)
    if panel == "density_overlay":
        return panel_density_overlay(manifest)
    return panel_metric_curve(manifest)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--manifest", required=True, help="manifest JSON or run directory")
    parser.add_argument("--panel", required=True, choices=PANELS)
    parser.add_argument("--out", required=True, help="output image path (.png/.svg)")
    parser.add_argument(
        "--projection", type=int, nargs=2, default=None, metavar=("I", "J"),
        help="state components to plot (default: last two)",
    )
    args = parser.parse_args(argv)
    try:
        fig = build_figure(
            args.manifest, args.panel,
            tuple(args.projection) if args.projection else None,
        )
    except (SchemaMismatchError, OSError, KeyError) as exc:
        print(f"error: {exc}")
        return 2
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
