"""Figure rendering for solver and verification outputs.

Consumes the JSON/CSV artifacts written by the CLI commands and renders
matplotlib figures next to them.  Kept separate from the compute paths:
solvers emit plot-ready tables; this module only reads them back.
"""

from __future__ import annotations

import json
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def render_hom_table(table_json_path, out_dir):
    """Effective-density figures from a hom_table.json artifact.

    Returns the list of files written.  One figure shows the dilation
    ladder per xi, the other the effective density over the xi grid
    (scalar xi only; higher-dimensional grids get the ladder figure).
    """
    with open(table_json_path) as fh:
        data = json.load(fh)
    xi = np.asarray(data["xi_grid"], dtype=float)
    f_t = np.asarray(data["f_t"], dtype=float)
    f_hom = np.asarray(data["f_hom"], dtype=float)
    ladder = data["t_ladder"]
    written = []

    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    for i in range(xi.shape[0]):
        ax.plot(ladder, f_t[i], "o-", ms=3, lw=1,
                label=f"xi={np.round(xi[i].ravel(), 3).tolist()}")
    ax.set_xlabel("dilation t")
    ax.set_ylabel("cell value f_t")
    ax.set_xscale("log", base=2)
    if xi.shape[0] <= 8:
        ax.legend(fontsize=7)
    fig.tight_layout()
    path = os.path.join(out_dir, "hom_ladder.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    if xi.size and xi.shape[1] * xi.shape[2] == 1:
        flat = xi.reshape(-1)
        order = np.argsort(flat)
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        ax.plot(flat[order], f_hom[order], "o-", ms=4, lw=1.2)
        ax.set_xlabel("mean gradient xi")
        ax.set_ylabel("effective density")
        fig.tight_layout()
        path = os.path.join(out_dir, "hom_density.png")
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written


def render_sweep(report_json_path, out_dir):
    """Gap-versus-epsilon figure from a sweep/verification report."""
    with open(report_json_path) as fh:
        data = json.load(fh)
    rows = data.get("rows", [])
    if not rows or "epsilon" not in rows[0]:
        return []
    eps = np.asarray([r["epsilon"] for r in rows], dtype=float)
    key = next((k for k in ("gap", "luxemburg_error", "rel_gap") if k in rows[0]), None)
    if key is None:
        return []
    vals = np.abs(np.asarray([r[key] for r in rows], dtype=float))
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    floor = max(vals.max() * 1e-16, 1e-300)
    ax.loglog(eps, np.maximum(vals, floor), "o-", lw=1.2)
    ax.set_xlabel("epsilon")
    ax.set_ylabel(f"|{key}|")
    ax.set_title(data.get("kind", ""), fontsize=9)
    fig.tight_layout()
    stem = os.path.splitext(os.path.basename(report_json_path))[0]
    path = os.path.join(out_dir, f"{stem}.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


def render_directory(in_dir, out_dir=None):
    """Render figures for every recognized artifact in a run directory."""
    out_dir = out_dir or in_dir
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name in sorted(os.listdir(in_dir)):
        path = os.path.join(in_dir, name)
        if not name.endswith(".json"):
            continue
        try:
            with open(path) as fh:
                head = json.load(fh)
        except (OSError, json.JSONDecodeError):
            continue
        if isinstance(head, dict) and "f_t" in head and "xi_grid" in head:
            written += render_hom_table(path, out_dir)
        elif isinstance(head, dict) and "rows" in head:
            written += render_sweep(path, out_dir)
    return written
