"""Read experiment aggregate CSVs and draw the regret / reward figures.

This package never recomputes statistics: means and error bars are taken
verbatim from the CSV columns (the experiment harness is the single source
of truth). Output is deterministic for identical inputs: fixed figure
geometry, no timestamps, and a pinned hash salt for SVG ids.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import numpy as np
from matplotlib import rcParams
from matplotlib.figure import Figure

rcParams["svg.hashsalt"] = "cwim-plots"

AGG_CSV_HEADER = "t,algorithm,mean_cum_regret,stderr,mean_reward,reward_stderr"

Y_COLUMNS = {
    "cum_regret": ("mean_cum_regret", "stderr", "Cumulative regret"),
    "reward": ("mean_reward", "reward_stderr", "Per-step reward"),
}

# draw error bars only at a readable subset of rounds
ERRORBAR_SEGMENTS = 20


class PlotError(ValueError):
    """Malformed plot inputs."""


@dataclass(frozen=True)
class PlotSpec:
    """What to draw: input CSVs, output image path, and the y-axis choice."""

    inputs: tuple[str, ...]
    output: str
    y: str = "cum_regret"
    title: str = ""
    xlabel: str = "round"
    ylabel: Optional[str] = None

    def __post_init__(self):
        if self.y not in Y_COLUMNS:
            raise PlotError(f"y must be one of {sorted(Y_COLUMNS)}, got {self.y!r}")
        if not self.inputs:
            raise PlotError("need at least one input CSV")


@dataclass
class Curve:
    algorithm: str
    t: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray


def load_curves(paths: Sequence[str], y: str = "cum_regret") -> list[Curve]:
    """Parse aggregate CSVs into one curve per algorithm.

    A file may hold one algorithm or several (rows grouped by the algorithm
    column). All curves must share the same t grid.
    """
    mean_col, err_col, _ = Y_COLUMNS[y]
    header_cols = AGG_CSV_HEADER.split(",")
    mean_idx, err_idx = header_cols.index(mean_col), header_cols.index(err_col)
    curves: list[Curve] = []
    for path in paths:
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n")
            if header != AGG_CSV_HEADER:
                raise PlotError(f"{path}: expected header {AGG_CSV_HEADER!r}, got {header!r}")
            grouped: dict[str, list[tuple[int, float, float]]] = {}
            for lineno, line in enumerate(fh, start=2):
                parts = line.rstrip("\n").split(",")
                if len(parts) != len(header_cols):
                    raise PlotError(f"{path}:{lineno}: expected {len(header_cols)} columns")
                grouped.setdefault(parts[1], []).append(
                    (int(parts[0]), float(parts[mean_idx]), float(parts[err_idx]))
                )
        for algorithm, rows in grouped.items():
            curves.append(
                Curve(
                    algorithm=algorithm,
                    t=np.array([r[0] for r in rows], dtype=np.int64),
                    mean=np.array([r[1] for r in rows]),
                    stderr=np.array([r[2] for r in rows]),
                )
            )
    if not curves:
        raise PlotError("no data rows found")
    grid = curves[0].t
    for curve in curves[1:]:
        if not np.array_equal(curve.t, grid):
            raise PlotError(
                f"t grids differ: {curves[0].algorithm} vs {curve.algorithm}"
            )
    return curves


def build_figure(curves: Sequence[Curve], spec: PlotSpec) -> Figure:
    """Assemble the figure: one line per algorithm, capped error bars."""
    fig = Figure(figsize=(6.4, 4.8), dpi=100)
    ax = fig.add_subplot(111)
    step = max(1, len(curves[0].t) // ERRORBAR_SEGMENTS)
    for curve in curves:
        marks = np.arange(0, len(curve.t), step)
        ax.plot(curve.t, curve.mean, label=curve.algorithm, linewidth=1.5)
        ax.errorbar(
            curve.t[marks],
            curve.mean[marks],
            yerr=curve.stderr[marks],
            fmt="none",
            capsize=3,
            elinewidth=1.0,
            ecolor=ax.lines[-1].get_color(),
        )
    ax.set_xlabel(spec.xlabel)
    ax.set_ylabel(spec.ylabel or Y_COLUMNS[spec.y][2])
    if spec.title:
        ax.set_title(spec.title)
    ax.legend()
    ax.grid(True, alpha=0.3)
    return fig


def render(spec: PlotSpec) -> list[Curve]:
    """Render the figure to spec.output and return the curves drawn."""
    curves = load_curves(spec.inputs, spec.y)
    fig = build_figure(curves, spec)
    metadata = None
    if spec.output.endswith(".svg"):
        metadata = {"Date": None}
    elif spec.output.endswith(".pdf"):
        metadata = {"CreationDate": None}
    fig.savefig(spec.output, metadata=metadata)
    return curves
