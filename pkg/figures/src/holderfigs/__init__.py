"""Figure rendering for solver trace CSVs and sweep summaries."""

from .render import (
    FigureSpec,
    RobustnessSpec,
    SchemaError,
    load_spec,
    render_convergence,
    render_robustness,
)

__all__ = [
    "FigureSpec",
    "RobustnessSpec",
    "SchemaError",
    "load_spec",
    "render_convergence",
    "render_robustness",
]

__version__ = "0.1.0"
