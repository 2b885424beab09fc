"""Independent reference computations for the test-suite.

Nothing here imports the estimation code paths being checked: spans are fit
with ``numpy.linalg.lstsq``, partitions are enumerated exhaustively and the
single-break optimum comes from a dense grid polished by bounded scalar
minimisation.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import minimize_scalar


def line_rss(y) -> float:
    y = np.asarray(y, dtype=float)
    x = np.arange(len(y), dtype=float)
    X = np.column_stack([np.ones_like(x), x])
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    r = y - X @ beta
    return float(r @ r)


def brute_force_partition(y, m: int, h: int):
    """Exhaustive minimum over all (m+1)-span partitions with spans >= h.

    Returns ``(rss, breaks)`` with breaks as 1-based last index of each span;
    exact ties keep the lexicographically smallest break vector.
    """
    n = len(y)
    best = (np.inf, None)
    for breaks in itertools.combinations(range(1, n), m):
        edges = (0,) + breaks + (n,)
        if any(b - a < h for a, b in zip(edges[:-1], edges[1:])):
            continue
        total = sum(line_rss(y[a:b]) for a, b in zip(edges[:-1], edges[1:]))
        if total < best[0]:
            best = (total, list(breaks))
    return best


def hinge_rss(x, y, tau) -> float:
    X = np.column_stack([np.ones_like(x), x, np.maximum(x - tau, 0.0)])
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    r = y - X @ beta
    return float(r @ r)


def grid_search_single_break(y, lo: float, hi: float, step: float = 0.01):
    """Global single-break optimum: dense grid, then a bounded local polish."""
    y = np.asarray(y, dtype=float)
    x = np.arange(1, len(y) + 1, dtype=float)
    grid = np.arange(lo, hi + 1e-9, step)
    rss = np.array([hinge_rss(x, y, t) for t in grid])
    i = int(np.argmin(rss))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(lambda t: hinge_rss(x, y, t), bounds=(a, b), method="bounded", options={"xatol": 1e-10})
    if res.fun < rss[i]:
        return float(res.x), float(res.fun), float(rss[i])
    return float(grid[i]), float(rss[i]), float(rss[i])
