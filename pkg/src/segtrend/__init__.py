"""Segmented linear regression and trend summaries for daily epidemic series."""

__version__ = "0.1.0"

from .model import TimeSeries, build_design, evaluate, hinge, ols_fit, segment_slopes  # noqa: E402
from .search import BreakInit, dp_breaks, select_num_breaks  # noqa: E402
from .segmented import SegmentedFit, breakpoint_dates, fit_segmented, refine_breakpoints  # noqa: E402
from .trend import adpc, empirical_dpc, model_dpc, trend_summary  # noqa: E402
from .pipeline import FitOptions, fit_series  # noqa: E402

__all__ = [
    "BreakInit",
    "FitOptions",
    "SegmentedFit",
    "TimeSeries",
    "adpc",
    "breakpoint_dates",
    "build_design",
    "dp_breaks",
    "empirical_dpc",
    "evaluate",
    "fit_segmented",
    "fit_series",
    "hinge",
    "model_dpc",
    "ols_fit",
    "refine_breakpoints",
    "segment_slopes",
    "select_num_breaks",
    "trend_summary",
]
