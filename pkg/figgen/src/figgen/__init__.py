"""Rendering of benchmark artifacts: heatmap strips, MSE tables, residual
traces.  Consumes result files only; never recomputes estimates."""

__version__ = "0.1.0"

from .render import FigureSpec, render

__all__ = ["FigureSpec", "render"]
