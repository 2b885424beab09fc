"""Daily percent change (DPC) and average daily percent change (ADPC).

For a fit on ``ln(y)`` a segment slope ``b`` corresponds to a constant
daily percent change ``(exp(b) - 1) * 100``. The ADPC exponentiates the
segment-length weighted mean of the log slopes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidWeights, NonPositiveValue
from .segmented import SegmentedFit, round_half_away

Z95 = 1.96


def empirical_dpc(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    bad = np.flatnonzero(y <= 0)
    if bad.size:
        raise NonPositiveValue(f"value {y[bad[0]]:g} at position {bad[0]} is not positive", bad[0])
    return (y[1:] - y[:-1]) / y[:-1] * 100.0


def model_dpc(b):
    return np.expm1(b) * 100.0


@dataclass(frozen=True)
class AdpcResult:
    estimate: float
    se: float
    ci: tuple[float, float]
    mean_log_slope: float
    arithmetic_dpc: float  # weighted mean of per-segment DPCs, kept as a diagnostic


def adpc(slopes, weights, slope_covariance=None, z: float = Z95) -> AdpcResult:
    """Weighted average daily percent change with a delta-method SE.

    Parameters
    ----------
    slopes : array-like
        Log-scale segment slopes ``b_i``.
    weights : array-like
        Segment lengths ``w_i`` (must be positive).
    slope_covariance : array-like, optional
        Covariance of the slopes. Without it the SE is zero.
    z : float
        Normal quantile of the interval.
    """
    b = np.asarray(slopes, dtype=float).reshape(-1)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if b.size != w.size or b.size == 0:
        raise InvalidWeights(f"need one weight per slope ({b.size} slopes, {w.size} weights)")
    if np.any(~(w > 0)):
        raise InvalidWeights(f"weights must be positive: {w.tolist()}")

    total = w.sum()
    bbar = float(w @ b / total)
    est = float(model_dpc(bbar))
    if slope_covariance is None:
        se = 0.0
    else:
        cov = np.asarray(slope_covariance, dtype=float).reshape(b.size, b.size)
        var = max(float(w @ cov @ w), 0.0)
        se = float(100.0 * np.exp(bbar) * np.sqrt(var) / total)
    arith = float(w @ model_dpc(b) / total)
    return AdpcResult(est, se, (est - z * se, est + z * se), bbar, arith)


@dataclass(frozen=True)
class SegmentTrend:
    start: int
    end: int
    length: int
    slope: float
    dpc: float


@dataclass(frozen=True)
class TrendSummary:
    segments: tuple[SegmentTrend, ...]
    adpc: float
    adpc_se: float
    adpc_ci: tuple[float, float]
    arithmetic_dpc: float


def segment_bounds(fit: SegmentedFit) -> list[tuple[int, int]]:
    """Day spans between rounded breakpoints, from day 1 to day n."""
    cuts = [1] + [round_half_away(t) for t in fit.breakpoints] + [fit.n]
    return list(zip(cuts[:-1], cuts[1:]))


def trend_summary(fit: SegmentedFit, z: float = Z95) -> TrendSummary:
    """Per-segment DPC and the ADPC of a fit made on log values."""
    bounds = segment_bounds(fit)
    weights = np.array([end - start for start, end in bounds], dtype=float)
    slopes = fit.slopes
    res = adpc(slopes, weights, fit.slope_covariance, z=z)
    segments = tuple(
        SegmentTrend(start, end, end - start, float(b), float(model_dpc(b)))
        for (start, end), b in zip(bounds, slopes)
    )
    return TrendSummary(segments, res.estimate, res.se, res.ci, res.arithmetic_dpc)
