"""Breakpoint refinement for the continuous hinge model.

Starting from initial breakpoints, each iteration fits least squares on
``[1, x, U_1..U_k, V_1..V_k]`` where ``U_s = (x - tau_s)+`` and
``V_s = -1{x > tau_s}``. The coefficient on ``V_s`` measures how far the
kink wants to move; the update is ``tau_s += gamma_s / delta_s``. A step is
halved until it lowers the residual sum of squares of the plain hinge
model, so the refined fit is never worse than the starting one.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import (
    BreakEscaped,
    BreaksCollided,
    DataError,
    DegenerateSlopeChange,
    FitError,
    NotConverged,
    SingularDesign,
)
from .model import OlsFit, TimeSeries, check_breakpoints, evaluate, hinge_design, ols_fit, segment_slopes, slope_map
from .search import MIN_SEGMENT_FLOOR

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 50
DEFAULT_CONFIDENCE = 0.95
DEGENERATE_DELTA = 1e-12
MAX_HALVINGS = 30
MIN_STEP = 1e-9  # days; shorter steps cannot change the fit meaningfully


@dataclass(frozen=True)
class SegmentedFit:
    coefficients: np.ndarray
    breakpoints: np.ndarray
    breakpoint_se: np.ndarray
    breakpoint_ci: np.ndarray  # shape (k, 2)
    covariance: np.ndarray
    rss: float
    dof: int
    n: int
    iterations: int
    converged: bool
    stop_reason: str
    origin_date: dt.date
    confidence: float = DEFAULT_CONFIDENCE

    @property
    def k(self) -> int:
        return len(self.breakpoints)

    @property
    def deltas(self) -> np.ndarray:
        return self.coefficients[2:]

    @property
    def slopes(self) -> np.ndarray:
        return segment_slopes(self.coefficients)

    @property
    def slope_covariance(self) -> np.ndarray:
        L = slope_map(self.k)
        return L @ self.covariance @ L.T

    @property
    def coefficient_se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))

    def predict(self, x):
        return evaluate(self.coefficients, self.breakpoints, x)

    @property
    def fitted(self) -> np.ndarray:
        return self.predict(np.arange(1, self.n + 1, dtype=float))


def _aux_design(x: np.ndarray, taus: np.ndarray) -> np.ndarray:
    V = -(x[:, None] > taus[None, :]).astype(float)
    return np.column_stack([hinge_design(x, taus), V])


def _hinge_rss(x, y, taus) -> float:
    try:
        return ols_fit(hinge_design(x, taus), y).rss
    except SingularDesign:
        return math.inf


def _collides(taus: np.ndarray, lo: float, hi: float, gap: float) -> bool:
    if np.any(taus < lo) or np.any(taus > hi):
        return True
    return bool(np.any(np.diff(taus) < gap))


def _aux_fit(x, y, taus, k):
    try:
        aux = ols_fit(_aux_design(x, taus), y)
    except SingularDesign as exc:
        # indicator columns coincide when two breaks share an inter-sample gap
        raise BreaksCollided(taus) from exc
    delta = aux.coefficients[2 : 2 + k]
    gamma = aux.coefficients[2 + k :]
    for s, d in enumerate(delta):
        if abs(d) < DEGENERATE_DELTA:
            raise DegenerateSlopeChange(s, float(d))
    return aux, delta, gamma


def breakpoint_se(aux: OlsFit, k: int) -> np.ndarray:
    """Delta-method standard errors ``SE(gamma_s) / |delta_s|``.

    ``aux`` is the auxiliary fit (hinge plus indicator columns) evaluated
    at the final breakpoints.
    """
    delta = aux.coefficients[2 : 2 + k]
    for s, d in enumerate(delta):
        if abs(d) < DEGENERATE_DELTA:
            raise DegenerateSlopeChange(s, float(d))
    se_gamma = np.sqrt(np.diag(aux.covariance)[2 + k :])
    return se_gamma / np.abs(delta)


def confidence_interval(estimate, se, confidence: float = DEFAULT_CONFIDENCE) -> np.ndarray:
    z = NormalDist().inv_cdf(0.5 * (1.0 + confidence))
    est = np.asarray(estimate, dtype=float)
    se = np.asarray(se, dtype=float)
    return np.column_stack([est - z * se, est + z * se]).reshape(-1, 2)


def _profile_rss(x, y, taus, s, cands) -> np.ndarray:
    """Continuous-model RSS with breakpoint ``s`` moved to each candidate."""
    others = np.delete(taus, s)
    Z = hinge_design(x, others)
    q, _ = np.linalg.qr(Z)
    ry = y - q @ (q.T @ y)
    U = np.maximum(x[:, None] - cands[None, :], 0.0)
    RU = U - q @ (q.T @ U)
    uu = np.einsum("ij,ij->j", RU, RU)
    uy = RU.T @ ry
    with np.errstate(divide="ignore", invalid="ignore"):
        rss = ry @ ry - uy * uy / uu
    return np.where(uu > 1e-12 * len(x), rss, np.inf)


def profile_scan(ts: TimeSeries, init, h: int = MIN_SEGMENT_FLOOR, max_sweeps: int = 10) -> np.ndarray:
    """Coordinate-wise scan of the continuous model over half-day positions.

    Each breakpoint in turn is moved to the mid-point between two days that
    minimises the hinge-model RSS, keeping the others fixed and respecting
    the minimum gap ``h``. Sweeps repeat until nothing moves. This places
    the refinement in the basin of the continuous optimum, which can differ
    from the discontinuous partition used for initialisation.
    """
    x = ts.x
    y = ts.values
    n = ts.n
    taus = check_breakpoints(init, n).copy()
    k = taus.size
    lo, hi = float(h), float(n - h)
    for _ in range(max_sweeps):
        moved = False
        for s in range(k):
            left = lo if s == 0 else taus[s - 1] + h
            right = hi if s == k - 1 else taus[s + 1] - h
            cands = np.arange(math.floor(left) + 0.5, right + 1e-9, 1.0)
            cands = cands[cands >= left]
            if cands.size == 0:
                continue
            rss = _profile_rss(x, y, taus, s, np.append(cands, taus[s]))
            best = int(np.argmin(rss))
            if best < cands.size and rss[best] < rss[-1]:
                taus[s] = cands[best]
                moved = True
        if not moved:
            break
    return taus


def fit_segmented(
    ts: TimeSeries,
    init,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    h: int = MIN_SEGMENT_FLOOR,
    confidence: float = DEFAULT_CONFIDENCE,
    strict: bool = False,
) -> SegmentedFit:
    """Refine breakpoints of the continuous hinge model.

    Parameters
    ----------
    ts : TimeSeries
        Observations on days ``1..n``.
    init : sequence of float
        Starting breakpoints, strictly increasing.
    tol : float
        Stop once ``|gamma_s| <= tol * (1 + |delta_s|)`` for every break.
    max_iter : int
        Iteration cap. Hitting it returns the best iterate with
        ``converged=False`` (or raises ``NotConverged`` if ``strict``).
    h : int
        Minimum gap between breakpoints and distance from either end.
    confidence : float
        Level of the breakpoint intervals.

    Raises
    ------
    DegenerateSlopeChange
        A slope increment vanished, so its breakpoint is not identifiable.
    BreakEscaped
        A breakpoint left ``[h, n - h]`` after having been clamped once.
    BreaksCollided
        Breakpoints crossed or came closer than ``h``.
    """
    x = ts.x
    y = ts.values
    n = ts.n
    taus = check_breakpoints(init, n).copy()
    k = taus.size

    if k == 0:
        plain = ols_fit(hinge_design(x, taus), y)
        return SegmentedFit(
            coefficients=plain.coefficients,
            breakpoints=taus,
            breakpoint_se=np.zeros(0),
            breakpoint_ci=np.zeros((0, 2)),
            covariance=plain.covariance,
            rss=plain.rss,
            dof=plain.dof,
            n=n,
            iterations=0,
            converged=True,
            stop_reason="no breakpoints",
            origin_date=ts.origin_date,
            confidence=confidence,
        )

    lo, hi = float(h), float(n - h)
    if _collides(taus, lo, hi, h):
        raise BreaksCollided(taus)

    clamped = np.zeros(k, dtype=bool)
    current_rss = _hinge_rss(x, y, taus)
    iterations = 0
    converged = False
    stop_reason = "max_iter"

    while iterations < max_iter:
        _, delta, gamma = _aux_fit(x, y, taus, k)
        if np.all(np.abs(gamma) <= tol * (1.0 + np.abs(delta))):
            converged = True
            stop_reason = "converged"
            break
        iterations += 1

        proposal = taus + gamma / delta
        out = (proposal < lo) | (proposal > hi)
        if np.any(out & clamped):
            s = int(np.flatnonzero(out & clamped)[0])
            raise BreakEscaped(s, float(proposal[s]))
        clamped |= out
        proposal = np.clip(proposal, lo, hi)
        direction = proposal - taus

        accepted = None
        saw_collision = False
        step = 1.0
        for _ in range(MAX_HALVINGS):
            if np.max(np.abs(step * direction)) < MIN_STEP:
                break
            cand = taus + step * direction
            if _collides(cand, lo, hi, h):
                saw_collision = True
            else:
                rss = _hinge_rss(x, y, cand)
                if rss < current_rss or (rss == 0.0 and current_rss == 0.0):
                    accepted = (cand, rss)
                    break
            step *= 0.5
        if accepted is None:
            if saw_collision:
                raise BreaksCollided(taus + direction)
            # no descent along the update: a kink of the RSS profile at a data point
            stop_reason = "stalled"
            break
        new_taus, new_rss = accepted
        if np.array_equal(new_taus, taus):
            stop_reason = "stalled"
            break
        taus, current_rss = new_taus, new_rss

    if not converged and strict:
        raise NotConverged(f"refinement stopped without convergence ({stop_reason}) after {iterations} iterations")

    plain = ols_fit(hinge_design(x, taus), y)
    aux, _, _ = _aux_fit(x, y, taus, k)
    se = breakpoint_se(aux, k)
    return SegmentedFit(
        coefficients=plain.coefficients,
        breakpoints=taus,
        breakpoint_se=se,
        breakpoint_ci=confidence_interval(taus, se, confidence),
        covariance=plain.covariance,
        rss=plain.rss,
        dof=plain.dof,
        n=n,
        iterations=iterations,
        converged=converged,
        stop_reason=stop_reason,
        origin_date=ts.origin_date,
        confidence=confidence,
    )


def refine_breakpoints(
    ts: TimeSeries,
    init,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    h: int = MIN_SEGMENT_FLOOR,
    confidence: float = DEFAULT_CONFIDENCE,
    strict: bool = False,
    max_rounds: int = 20,
    grid: int = 20,
) -> SegmentedFit:
    """Profile scan, refinement, then restarts from neighbouring day intervals.

    The RSS profile of the continuous model has a kink at every observed day,
    so the iteration can settle on the wrong side of a data point. After the
    first fit, the profile RSS of each breakpoint is evaluated on a grid
    inside the two adjacent day intervals (others held fixed); the fit is
    restarted from any grid point that beats the current RSS and kept if the
    refined RSS is lower.
    """
    opts = dict(tol=tol, max_iter=max_iter, h=h, confidence=confidence, strict=strict)
    x, y, n = ts.x, ts.values, ts.n
    fit = fit_segmented(ts, profile_scan(ts, init, h), **opts)
    offsets = (np.arange(grid) + 0.5) / grid
    for _ in range(max_rounds):
        improved = False
        for s in range(fit.k):
            taus = fit.breakpoints
            left = h if s == 0 else taus[s - 1] + h
            right = n - h if s == fit.k - 1 else taus[s + 1] - h
            base = math.floor(taus[s])
            cands = np.concatenate((base - 1 + offsets, base + 1 + offsets))
            cands = cands[(cands >= left) & (cands <= right)]
            if cands.size == 0:
                continue
            rss = _profile_rss(x, y, taus, s, cands)
            best = int(np.argmin(rss))
            if not rss[best] < fit.rss * (1.0 - 1e-12):
                continue
            trial = taus.copy()
            trial[s] = cands[best]
            try:
                other = fit_segmented(ts, trial, **opts)
            except (FitError, DataError):
                continue
            if other.rss < fit.rss * (1.0 - 1e-12):
                fit, improved = other, True
        if not improved:
            break
    return fit


def round_half_away(value: float) -> int:
    return int(math.copysign(math.floor(abs(value) + 0.5), value))


def breakpoint_dates(fit: SegmentedFit) -> list[dt.date]:
    """Calendar date of each breakpoint, rounded to the nearest day."""
    return [fit.origin_date + dt.timedelta(days=round_half_away(t) - 1) for t in fit.breakpoints]
