"""Continuous piecewise-linear (hinge) regression model.

The mean is ``b0 + b1*x + sum_s d_s * (x - tau_s)+`` on the day index
``x = 1..n``. Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .errors import BreakOutOfRange, InvalidBreakpoints, SingularDesign

#: relative tolerance on |diag(R)| below which a design is declared singular
RANK_TOL = 1e-10


@dataclass(frozen=True)
class TimeSeries:
    """Daily observations on a contiguous grid.

    Day ``t`` (1-based) is ``origin_date + (t - 1)`` days.
    """

    origin_date: dt.date
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError("values must be one-dimensional")
        if len(values) < 3:
            raise ValueError(f"need at least 3 observations, got {len(values)}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def x(self) -> np.ndarray:
        return np.arange(1, self.n + 1, dtype=float)

    @property
    def dates(self) -> list[dt.date]:
        return [self.date_of(t) for t in range(1, self.n + 1)]

    def date_of(self, day: int) -> dt.date:
        return self.origin_date + dt.timedelta(days=int(day) - 1)

    def day_of(self, date: dt.date) -> int:
        return (date - self.origin_date).days + 1

    def with_values(self, values) -> "TimeSeries":
        return TimeSeries(self.origin_date, values)


@dataclass(frozen=True)
class OlsFit:
    coefficients: np.ndarray
    covariance: np.ndarray
    rss: float
    dof: int
    fitted: np.ndarray
    residuals: np.ndarray

    @property
    def sigma2(self) -> float:
        return self.rss / self.dof

    @property
    def std_errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))


def hinge(x, tau):
    """``max(x - tau, 0)``, elementwise for arrays."""
    out = np.maximum(np.asarray(x, dtype=float) - tau, 0.0)
    return float(out) if out.ndim == 0 else out


def check_breakpoints(breakpoints: Sequence[float], n: int) -> np.ndarray:
    taus = np.asarray(breakpoints, dtype=float).reshape(-1)
    if taus.size and not np.all(np.isfinite(taus)):
        raise InvalidBreakpoints("breakpoints must be finite")
    if np.any(np.diff(taus) <= 0):
        raise InvalidBreakpoints(f"breakpoints must be strictly increasing: {taus.tolist()}")
    bad = taus[(taus <= 1) | (taus >= n)]
    if bad.size:
        raise BreakOutOfRange(f"breakpoint {bad[0]:g} outside the open interval (1, {n})")
    return taus


def hinge_design(x: np.ndarray, breakpoints: Sequence[float]) -> np.ndarray:
    """Columns ``[1, x, (x - tau_1)+, ..., (x - tau_k)+]`` without validation."""
    x = np.asarray(x, dtype=float)
    cols = [np.ones_like(x), x]
    cols.extend(np.maximum(x - tau, 0.0) for tau in breakpoints)
    return np.column_stack(cols)


def build_design(ts: TimeSeries | int, breakpoints: Sequence[float]) -> np.ndarray:
    """Design matrix for the hinge model on days ``1..n``.

    Parameters
    ----------
    ts : TimeSeries or int
        The series (only its length matters) or ``n`` directly.
    breakpoints : sequence of float
        Strictly increasing, each inside ``(1, n)``.

    Returns
    -------
    np.ndarray
        ``n x (2 + k)`` matrix.
    """
    n = ts if isinstance(ts, (int, np.integer)) else ts.n
    taus = check_breakpoints(breakpoints, n)
    return hinge_design(np.arange(1, n + 1, dtype=float), taus)


def ols_fit(X: np.ndarray, y) -> OlsFit:
    """Least squares via Householder QR with column equilibration.

    Raises
    ------
    SingularDesign
        If a diagonal entry of the triangular factor falls below
        ``RANK_TOL`` times the largest one.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if n <= p:
        raise SingularDesign(f"need more observations than parameters (n={n}, p={p})")

    scale = np.linalg.norm(X, axis=0)
    if np.any(scale == 0):
        raise SingularDesign("design has an all-zero column")
    q, r = np.linalg.qr(X / scale)
    diag = np.abs(np.diag(r))
    if diag.min() < RANK_TOL * diag.max():
        raise SingularDesign(
            f"design is rank deficient (column {int(diag.argmin())}); "
            "breakpoints may share an inter-sample gap"
        )

    beta_scaled = solve_triangular(r, q.T @ y)
    coef = beta_scaled / scale
    fitted = X @ coef
    resid = y - fitted
    rss = float(resid @ resid)
    dof = n - p

    r_inv = solve_triangular(r, np.eye(p))
    cov_scaled = r_inv @ r_inv.T
    cov = (rss / dof) * cov_scaled / np.outer(scale, scale)
    cov = 0.5 * (cov + cov.T)
    return OlsFit(coef, cov, rss, dof, fitted, resid)


def evaluate(coefficients, breakpoints, x):
    """Fitted mean ``b0 + b1*x + sum d_s (x - tau_s)+`` at ``x``."""
    coef = np.asarray(coefficients, dtype=float)
    taus = np.asarray(breakpoints, dtype=float).reshape(-1)
    if coef.size != 2 + taus.size:
        raise ValueError(f"expected {2 + taus.size} coefficients, got {coef.size}")
    xa = np.asarray(x, dtype=float)
    out = coef[0] + coef[1] * xa
    for delta, tau in zip(coef[2:], taus):
        out = out + delta * np.maximum(xa - tau, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def slope_map(k: int) -> np.ndarray:
    """Linear map ``L`` with ``slopes = L @ coefficients``.

    Row ``j`` selects ``b1`` and the first ``j`` slope increments.
    """
    L = np.zeros((k + 1, k + 2))
    L[:, 1] = 1.0
    for j in range(1, k + 1):
        L[j:, 1 + j] = 1.0
    return L


def segment_slopes(coefficients) -> np.ndarray:
    """Per-segment slopes ``b1, b1 + d1, ..., b1 + d1 + ... + dk``."""
    coef = np.asarray(coefficients, dtype=float)
    if coef.size < 2:
        raise ValueError("need at least intercept and slope")
    return coef[1] + np.concatenate(([0.0], np.cumsum(coef[2:])))
