"""Render regret/reward curves from cwim aggregate CSVs."""

from .render import Curve, PlotError, PlotSpec, build_figure, load_curves, render

__all__ = ["Curve", "PlotError", "PlotSpec", "build_figure", "load_curves", "render"]
