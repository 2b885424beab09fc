"""End-to-end estimation: partition search, then breakpoint refinement."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import FitError, TooManyBreaks
from .model import TimeSeries
from .search import DEFAULT_MAX_BREAKS, MIN_SEGMENT_FLOOR, BreakInit, default_min_segment, select_num_breaks
from .segmented import DEFAULT_CONFIDENCE, DEFAULT_MAX_ITER, DEFAULT_TOL, SegmentedFit, refine_breakpoints


@dataclass(frozen=True)
class FitOptions:
    max_breaks: int = DEFAULT_MAX_BREAKS
    breaks: int | None = None
    min_segment: int | None = None
    confidence: float = DEFAULT_CONFIDENCE
    criterion: str = "bic"
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    strict: bool = False


@dataclass(frozen=True)
class Estimate:
    init: BreakInit
    fit: SegmentedFit
    fallbacks: tuple[str, ...] = field(default=())


def refine(ts: TimeSeries, init: BreakInit, m: int, opts: FitOptions) -> SegmentedFit:
    h_fit = min(init.min_segment, MIN_SEGMENT_FLOOR)
    return refine_breakpoints(
        ts,
        [b + 0.5 for b in init.breaks_by_m[m]],
        tol=opts.tol,
        max_iter=opts.max_iter,
        h=h_fit,
        confidence=opts.confidence,
        strict=opts.strict,
    )


def fit_series(ts: TimeSeries, opts: FitOptions = FitOptions()) -> Estimate:
    """Initialise breakpoints by partition search and refine them.

    The search uses the trimmed minimum span (``max(7, ceil(0.1 n))`` unless
    overridden); the refinement only keeps breakpoints a week apart, so
    closely spaced breaks of the continuous model are not rejected.

    When the number of breaks was chosen automatically and refinement fails
    (collision, vanishing slope change, escape), the next smaller number is
    tried and the failure is recorded in ``fallbacks``. A fixed number of
    breaks or ``strict`` mode re-raises instead.
    """
    h_init = opts.min_segment or default_min_segment(ts.n)
    max_m = opts.breaks if opts.breaks is not None else opts.max_breaks
    init = select_num_breaks(ts, max_m, h_init, opts.criterion)
    if opts.breaks is not None:
        if opts.breaks not in init.breaks_by_m:
            raise TooManyBreaks(f"{opts.breaks} breaks do not fit {ts.n} observations with minimum segment {h_init}")
        return Estimate(init, refine(ts, init, opts.breaks, opts))

    fallbacks = []
    m = init.chosen_m
    while True:
        try:
            return Estimate(init, refine(ts, init, m, opts), tuple(fallbacks))
        except FitError as exc:
            if opts.strict or m == 0:
                raise
            fallbacks.append(f"{m} breaks: {exc}")
            m -= 1
