"""CDF figure rendering for ccfsim CSV outputs."""

from .plotting import (
    CurveError,
    PlotSpec,
    RenderResult,
    SchemaError,
    read_cdf_csv,
    render_cdf_plot,
    render_comparison_grid,
)

__version__ = "0.1.0"

__all__ = [
    "CurveError",
    "PlotSpec",
    "RenderResult",
    "SchemaError",
    "read_cdf_csv",
    "render_cdf_plot",
    "render_comparison_grid",
    "__version__",
]
