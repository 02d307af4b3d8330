"""Render benchmark artifacts to figures and tables.

Three kinds:

    heatmap-strip   matrices directory (P0.csv + one CSV per estimator) ->
                    one PNG row of panels sharing a single color scale
    mse-table       results.csv -> Markdown table (and a CSV twin) of mean
                    MSE x 1e4 per (estimator, model_n) cell, per-column
                    minima bold
    residual-trace  residuals.csv from a denoise run -> PNG of the
                    per-iteration residual and objective curves

Rendering is a pure function of the input files; identical inputs produce
identical table text.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("heatmap-strip", "mse-table", "residual-trace")


class RenderError(ValueError):
    """Missing or corrupt input artifacts."""


@dataclass
class FigureSpec:
    results: Path  # input directory (or file, for residual-trace)
    kind: str
    out: Path
    vmin: Optional[float] = None  # color scale bounds; None = data-driven
    vmax: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RenderError(
                f"unknown figure kind {self.kind!r}; expected one of {KINDS}"
            )
        self.results = Path(self.results)
        self.out = Path(self.out)


def render(spec: FigureSpec) -> list:
    """Render one figure; returns the list of files written."""
    if spec.kind == "heatmap-strip":
        return _render_heatmap_strip(spec)
    if spec.kind == "mse-table":
        return _render_mse_table(spec)
    return _render_residual_trace(spec)


def _load_matrix(path: Path) -> np.ndarray:
    try:
        M = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise RenderError(f"{path}: {exc}") from exc
    if M.shape[0] != M.shape[1]:
        raise RenderError(f"{path}: expected a square matrix, got {M.shape}")
    return M


def _render_heatmap_strip(spec: FigureSpec) -> list:
    """One panel per matrix, truth first, all sharing one color scale."""
    d = spec.results
    truth_path = d / "P0.csv"
    if not truth_path.exists():
        raise RenderError(f"{truth_path}: missing truth matrix")
    estimates = sorted(p for p in d.glob("*.csv") if p.name != "P0.csv")
    if not estimates:
        raise RenderError(f"{d}: no estimate matrices next to P0.csv")
    panels = [("truth", _load_matrix(truth_path))]
    panels += [(p.stem, _load_matrix(p)) for p in estimates]
    vmin = spec.vmin if spec.vmin is not None else min(M.min() for _, M in panels)
    vmax = spec.vmax if spec.vmax is not None else max(M.max() for _, M in panels)
    fig, axes = plt.subplots(
        1, len(panels), figsize=(3.2 * len(panels), 3.4), squeeze=False
    )
    for ax, (name, M) in zip(axes[0], panels):
        im = ax.imshow(M, vmin=vmin, vmax=vmax, cmap="viridis",
                       interpolation="nearest")
        ax.set_title(name)
        ax.set_xticks([])
        ax.set_yticks([])
    fig.colorbar(im, ax=axes[0], fraction=0.025, pad=0.02)
    spec.out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.out, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return [spec.out]


def _read_results_rows(path: Path) -> list:
    if not path.exists():
        raise RenderError(f"{path}: missing results file")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    needed = {"model", "n", "estimator", "mse"}
    if not rows or not needed <= set(rows[0]):
        raise RenderError(f"{path}: expected columns {sorted(needed)}")
    return rows


def mse_table_cells(results_csv: Path):
    """(estimators, columns, value table) of mean MSE x 1e4 per cell.

    Failed cells (error set or empty mse) are skipped; a cell with no
    successful run is NaN.
    """
    rows = _read_results_rows(results_csv)
    cells = {}
    for row in rows:
        if row.get("error") or not row["mse"]:
            continue
        key = (row["estimator"], f"{row['model']}_n{row['n']}")
        cells.setdefault(key, []).append(float(row["mse"]))
    if not cells:
        raise RenderError(f"{results_csv}: no successful result rows")
    estimators = sorted({k[0] for k in cells})
    columns = sorted({k[1] for k in cells})
    table = np.full((len(estimators), len(columns)), np.nan)
    for (est, col), vals in cells.items():
        table[estimators.index(est), columns.index(col)] = 1e4 * float(
            np.mean(vals)
        )
    return estimators, columns, table


def _render_mse_table(spec: FigureSpec) -> list:
    """Markdown table with per-column minima bold, plus a plain CSV twin."""
    src = spec.results
    if src.is_dir():
        src = src / "results.csv"
    estimators, columns, table = mse_table_cells(src)
    mins = np.nanmin(table, axis=0)
    lines = ["| estimator | " + " | ".join(columns) + " |",
             "|---" * (len(columns) + 1) + "|"]
    for r, est in enumerate(estimators):
        cells = []
        for c in range(len(columns)):
            v = table[r, c]
            if np.isnan(v):
                cells.append("")
            elif v == mins[c]:
                cells.append(f"**{v:.2f}**")
            else:
                cells.append(f"{v:.2f}")
        lines.append(f"| {est} | " + " | ".join(cells) + " |")
    spec.out.parent.mkdir(parents=True, exist_ok=True)
    spec.out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    csv_out = spec.out.with_suffix(".csv")
    with open(csv_out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["estimator"] + columns)
        for r, est in enumerate(estimators):
            w.writerow([est] + [
                "" if np.isnan(v) else f"{v:.6g}" for v in table[r]
            ])
    return [spec.out, csv_out]


def _render_residual_trace(spec: FigureSpec) -> list:
    src = spec.results
    if src.is_dir():
        src = src / "residuals.csv"
    if not src.exists():
        raise RenderError(f"{src}: missing residual trace")
    try:
        data = np.loadtxt(src, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise RenderError(f"{src}: {exc}") from exc
    if data.shape[1] < 3:
        raise RenderError(f"{src}: expected iteration,residual,objective rows")
    fig, ax1 = plt.subplots(figsize=(5.0, 3.4))
    ax1.semilogy(data[:, 0], data[:, 1], label="residual")
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("consensus residual")
    ax2 = ax1.twinx()
    ax2.plot(data[:, 0], data[:, 2], color="tab:orange", label="objective")
    ax2.set_ylabel("objective")
    fig.tight_layout()
    spec.out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.out, dpi=150)
    plt.close(fig)
    return [spec.out]
