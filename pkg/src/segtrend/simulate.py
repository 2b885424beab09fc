"""Seeded synthetic series from a known hinge model, for testing."""

from __future__ import annotations

import datetime as dt
from dataclasses import asdict, dataclass

import numpy as np

from .model import TimeSeries, check_breakpoints, evaluate

DEFAULT_ORIGIN = dt.date(2020, 1, 1)


@dataclass(frozen=True)
class SimSpec:
    n: int
    slopes: tuple[float, ...]
    breakpoints: tuple[float, ...] = ()
    sigma: float = 0.0
    intercept: float = 0.0

    def __post_init__(self):
        if len(self.slopes) != len(self.breakpoints) + 1:
            raise ValueError("need exactly one more slope than breakpoints")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        check_breakpoints(self.breakpoints, self.n)

    @property
    def coefficients(self) -> np.ndarray:
        s = np.asarray(self.slopes, dtype=float)
        return np.concatenate(([self.intercept, s[0]], np.diff(s)))

    def mean(self) -> np.ndarray:
        return evaluate(self.coefficients, self.breakpoints, np.arange(1, self.n + 1, dtype=float))


def simulate(spec: SimSpec, seed: int, origin: dt.date = DEFAULT_ORIGIN) -> tuple[TimeSeries, dict]:
    """Draw ``mean + N(0, sigma^2)`` noise; returns the series and its ground truth."""
    rng = np.random.default_rng(seed)
    y = spec.mean()
    if spec.sigma > 0:
        y = y + rng.normal(0.0, spec.sigma, spec.n)
    truth = asdict(spec)
    truth["slopes"] = list(spec.slopes)
    truth["breakpoints"] = list(spec.breakpoints)
    truth["coefficients"] = spec.coefficients.tolist()
    truth["seed"] = seed
    truth["origin_date"] = origin.isoformat()
    return TimeSeries(origin, y), truth


def random_spec(
    rng: np.random.Generator,
    k: int,
    n: int,
    sigma: float = 0.0,
    min_gap: int | None = None,
    min_change: float = 0.5,
) -> SimSpec:
    """Random well-separated breakpoints with distinct, non-negligible slopes."""
    gap = min_gap if min_gap is not None else max(10, n // (2 * (k + 1)))
    while True:
        taus = np.sort(rng.uniform(gap, n - gap, size=k))
        if k == 0 or (np.all(np.diff(taus) >= gap)):
            break
    slopes = [float(rng.choice([-1, 1]) * rng.uniform(0.5, 3.0))]
    for _ in range(k):
        while True:
            nxt = float(rng.choice([-1, 1]) * rng.uniform(0.5, 3.0))
            if abs(nxt - slopes[-1]) >= min_change:
                break
        slopes.append(nxt)
    return SimSpec(n, tuple(slopes), tuple(float(t) for t in taus), sigma, float(rng.uniform(-10, 10)))
