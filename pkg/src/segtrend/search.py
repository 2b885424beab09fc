"""Least-squares structural-change search used to initialise breakpoints.

Each span between breaks gets its own (discontinuous) line. The optimal
partition for a given number of breaks comes from a dynamic program over a
table of span residual sums of squares; the number of breaks is picked by an
information criterion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import TooManyBreaks
from .model import TimeSeries

DEFAULT_MAX_BREAKS = 6
MIN_SEGMENT_FLOOR = 7
TRIM_FRACTION = 0.1
# rss at or below this fraction of the total sum of squares counts as an exact fit
ZERO_RSS_RTOL = 1e-10


def default_min_segment(n: int) -> int:
    return max(MIN_SEGMENT_FLOOR, math.ceil(TRIM_FRACTION * n))


def _values(ts) -> np.ndarray:
    return ts.values if isinstance(ts, TimeSeries) else np.asarray(ts, dtype=float)


def precompute_segment_rss(ts, min_len: int = 2) -> np.ndarray:
    """Residual sum of squares of a line fitted to every span.

    Parameters
    ----------
    ts : TimeSeries or array-like
        Observations on days ``1..n``.
    min_len : int
        Spans shorter than this are marked ``inf``.

    Returns
    -------
    np.ndarray
        ``(n, n)`` array; entry ``[i, j]`` (0-based, inclusive) is the RSS
        of a simple linear fit to observations ``i..j``. Entries with
        ``j - i + 1 < min_len`` are ``inf``.
    """
    y = _values(ts)
    n = len(y)
    table = np.full((n, n), np.inf)
    min_len = max(min_len, 2)
    for i in range(n - min_len + 1):
        # shift to the span's first point to keep the running sums small
        ys = y[i:] - y[i]
        xs = np.arange(n - i, dtype=float)
        m = np.arange(1, n - i + 1, dtype=float)
        sx = np.cumsum(xs)
        sy = np.cumsum(ys)
        sxy = np.cumsum(xs * ys)
        syy = np.cumsum(ys * ys)
        sxx_c = m * (m * m - 1.0) / 12.0
        sxy_c = sxy - sx * sy / m
        syy_c = syy - sy * sy / m
        with np.errstate(divide="ignore", invalid="ignore"):
            rss = syy_c - sxy_c * sxy_c / sxx_c
        rss = np.maximum(rss, 0.0)
        table[i, i + min_len - 1 :] = rss[min_len - 1 :]
    return table


def _suffix_costs(table: np.ndarray, max_m: int, h: int) -> list[np.ndarray]:
    """``costs[r][i]``: best RSS splitting observations ``i..n-1`` into ``r+1`` spans."""
    n = table.shape[0]
    costs = [table[:, n - 1].copy()]
    for r in range(1, max_m + 1):
        prev = costs[-1]
        cur = np.full(n, np.inf)
        for i in range(n - (r + 1) * h + 1):
            ends = np.arange(i + h - 1, n - r * h)
            cur[i] = np.min(table[i, ends] + prev[ends + 1])
        costs.append(cur)
    return costs


def _trace(table: np.ndarray, costs: list[np.ndarray], m: int, h: int) -> list[int]:
    n = table.shape[0]
    breaks = []
    i = 0
    for r in range(m, 0, -1):
        ends = np.arange(i + h - 1, n - r * h)
        total = table[i, ends] + costs[r - 1][ends + 1]
        # np.argmin returns the first minimiser: earliest break on exact ties
        b = int(ends[np.argmin(total)])
        breaks.append(b + 1)
        i = b + 1
    return breaks


def _check_feasible(n: int, m: int, h: int) -> None:
    if m < 0:
        raise ValueError("number of breaks must be nonnegative")
    if h < 2:
        raise ValueError("minimum segment length must be at least 2")
    if n < (m + 1) * h:
        raise TooManyBreaks(
            f"{m} breaks with minimum segment {h} need at least {(m + 1) * h} observations, have {n}"
        )


def dp_breaks(ts, m: int, h: int, table: np.ndarray | None = None) -> list[int]:
    """Optimal ``m``-break partition under independent per-span line fits.

    Returns the 1-based day index of the last observation of each of the
    first ``m`` spans. Every span has at least ``h`` observations. Ties go
    to the lexicographically smallest break vector.
    """
    y = _values(ts)
    n = len(y)
    _check_feasible(n, m, h)
    if table is None:
        table = precompute_segment_rss(y, min_len=h)
    costs = _suffix_costs(table, m, h)
    return _trace(table, costs, m, h)


@dataclass(frozen=True)
class BreakInit:
    chosen_m: int
    breakpoint_indices: tuple[int, ...]
    rss_by_m: dict[int, float]
    bic_by_m: dict[int, float]
    min_segment: int
    criterion: str = "bic"
    breaks_by_m: dict[int, tuple[int, ...]] = field(default_factory=dict)


def penalty_params(m: int) -> int:
    """Parameter count: intercept, slope and variance per span plus the break dates."""
    return 3 * (m + 1) + m


def information_criterion(rss: float, n: int, m: int, criterion: str = "bic") -> float:
    p = penalty_params(m)
    if criterion == "bic":
        pen = p * math.log(n)
    elif criterion == "lwz":
        pen = p * 0.299 * math.log(n) ** 2.1
    else:
        raise ValueError(f"unknown criterion {criterion!r}")
    if rss <= 0.0:
        return -math.inf
    return n * math.log(rss / n) + pen


def select_num_breaks(
    ts,
    max_m: int = DEFAULT_MAX_BREAKS,
    h: int | None = None,
    criterion: str = "bic",
) -> BreakInit:
    """Run the partition search for ``m = 0..max_m`` and pick ``m`` by criterion.

    Values of ``m`` that do not fit ``n`` with spans of length ``h`` are
    skipped. An exact fit (rss effectively zero) wins outright, smallest
    such ``m`` first.
    """
    y = _values(ts)
    n = len(y)
    if h is None:
        h = default_min_segment(n)
    _check_feasible(n, 0, h)
    if max_m < 0:
        raise ValueError("max_m must be nonnegative")
    top = min(max_m, n // h - 1)

    table = precompute_segment_rss(y, min_len=h)
    costs = _suffix_costs(table, top, h)
    tss = float(np.sum((y - y.mean()) ** 2))
    zero = ZERO_RSS_RTOL * tss

    rss_by_m, bic_by_m, breaks_by_m = {}, {}, {}
    for m in range(top + 1):
        rss = float(costs[m][0])
        rss_by_m[m] = rss
        bic_by_m[m] = information_criterion(0.0 if rss <= zero else rss, n, m, criterion)
        breaks_by_m[m] = tuple(_trace(table, costs, m, h))

    # min() keeps the first (smallest m) on ties, including several -inf
    chosen = min(bic_by_m, key=lambda m: bic_by_m[m])
    return BreakInit(
        chosen_m=chosen,
        breakpoint_indices=breaks_by_m[chosen],
        rss_by_m=rss_by_m,
        bic_by_m=bic_by_m,
        min_segment=h,
        criterion=criterion,
        breaks_by_m=breaks_by_m,
    )
