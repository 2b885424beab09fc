"""Rebuild the bundled country fixtures under ``src/segtrend/fixtures``.

The fixtures are seeded reconstructions, not source data: the original data
snapshot is not available offline. Turkey's trends are piecewise-linear
curves through reference segment slopes and break dates (active cases,
daily recoveries, daily deaths) with added noise. Every other country gets a
piecewise-linear log-active-per-million trajectory whose start-to-end change
matches its reference average daily percent change. Cumulative columns are
then assembled so that confirmed - deaths - recovered equals the active
series and all cumulative columns are nondecreasing.

Run:  python scripts/build_fixtures.py
"""

from __future__ import annotations

import datetime as dt
import math
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "segtrend" / "fixtures"
END = dt.date(2020, 11, 25)
PRE_DAYS = 7  # rows before the analysis start, so daily series exist on day 1
PRE_CONFIRMED = (3, 6, 12, 20, 33, 52, 75)

# approximate 2018 populations
POPULATION = {
    "AUS": 24_992_369,
    "CHN": 1_392_730_000,
    "DEU": 82_927_922,
    "IND": 1_352_617_328,
    "IRN": 81_800_269,
    "ITA": 60_431_283,
    "KOR": 51_635_256,
    "RUS": 144_478_050,
    "TUR": 82_319_724,
}

# reference average daily percent change of active cases per million
TARGET_ADPC = {
    "AUS": 1.128,
    "CHN": 0.1501,
    "DEU": 3.905,
    "IND": 3.306,
    "IRN": 2.918,
    "ITA": 2.969,
    "KOR": 1.171,
    "RUS": 3.318,
    "TUR": 2.113,
}

# first day with at least 100 confirmed cases, and log-active-per-million
# knots (day, value); the final value is solved from TARGET_ADPC
SHAPES = {
    "AUS": (dt.date(2020, 3, 5), [(1, 1.40), (30, 5.30), (80, 3.10), (150, 5.80), (215, 3.6), (None, None)]),
    "CHN": (dt.date(2020, 1, 22), [(1, -1.10), (28, 4.00), (75, 0.30), (170, -1.8), (250, -0.9), (None, None)]),
    "DEU": (dt.date(2020, 3, 1), [(1, 0.15), (35, 6.70), (90, 4.20), (190, 5.10), (None, None)]),
    "IND": (dt.date(2020, 3, 15), [(1, -2.60), (55, 2.60), (120, 5.20), (185, 6.75), (None, None)]),
    "IRN": (dt.date(2020, 2, 27), [(1, 0.20), (40, 6.80), (85, 6.20), (200, 6.90), (None, None)]),
    "ITA": (dt.date(2020, 2, 23), [(1, 0.45), (58, 7.40), (150, 4.50), (200, 5.00), (None, None)]),
    "KOR": (dt.date(2020, 2, 20), [(1, 0.55), (22, 4.95), (100, 3.00), (180, 3.60), (250, 3.10), (None, None)]),
    "RUS": (dt.date(2020, 3, 17), [(1, -0.50), (60, 7.20), (160, 6.80), (None, None)]),
}

# Turkey: segment slopes and break days of the level fits, day 1 = 2020-03-18
TUR_START = dt.date(2020, 3, 18)
TUR_ACTIVE = ((38, 55, 136, 244), (2523.0, -2632.0, -359.2, 360.5, 2218.0))
TUR_RECOVERED = ((49, 60, 162, 233), (119.7, -255.0, -6.435, 9.774, 108.0))
TUR_DEATHS = ((30, 63, 133, 242), (4.587, -3.114, -0.145, 0.696, 7.873))


def piecewise(days: np.ndarray, breaks, slopes, start_value: float) -> np.ndarray:
    out = start_value + slopes[0] * (days - 1)
    for tau, d in zip(breaks, np.diff(slopes)):
        out += d * np.maximum(days - tau, 0.0)
    return out


def knot_curve(days: np.ndarray, knots) -> np.ndarray:
    kd, kv = zip(*knots)
    return np.interp(days, kd, kv)


def write_panel(code, dates, confirmed, recovered, deaths, population):
    assert np.all(np.diff(confirmed) >= 0) and np.all(np.diff(recovered) >= 0) and np.all(np.diff(deaths) >= 0)
    lines = ["date,confirmed,recovered,deaths,population"]
    for d, c, r, x in zip(dates, confirmed, recovered, deaths):
        lines.append(f"{d.isoformat()},{int(c)},{int(r)},{int(x)},{population}")
    (OUT / f"{code}.csv").write_text("\n".join(lines) + "\n")


def assemble(active, rec_daily, death_daily):
    """Cumulative columns from active counts and daily flows (window days only)."""
    active = np.asarray(active, dtype=np.int64)
    rec_daily = np.asarray(rec_daily, dtype=np.int64).copy()
    death_daily = np.asarray(death_daily, dtype=np.int64)
    d_active = np.diff(active, prepend=active[0])
    new_cases = d_active + rec_daily + death_daily
    # a fall in active larger than the outflows is absorbed as extra recoveries
    short = np.minimum(new_cases, 0)
    rec_daily -= short
    recovered = np.cumsum(rec_daily)
    deaths = np.cumsum(death_daily)
    confirmed = active + recovered + deaths
    return confirmed, recovered, deaths


def with_prefix(start, confirmed, recovered, deaths):
    pre = np.array(PRE_CONFIRMED)
    dates = [start + dt.timedelta(days=i) for i in range(-PRE_DAYS, len(confirmed))]
    conf = np.concatenate([np.minimum(pre, confirmed[0]), confirmed])
    rec = np.concatenate([np.zeros(PRE_DAYS, dtype=np.int64), recovered])
    dead = np.concatenate([np.zeros(PRE_DAYS, dtype=np.int64), deaths])
    return dates, conf, rec, dead


def build_turkey(rng: np.random.Generator):
    n = (END - TUR_START).days + 1
    days = np.arange(1, n + 1, dtype=float)

    # active: convex take-off joined smoothly to the reference first slope
    breaks, slopes = TUR_ACTIVE
    trend = piecewise(days, breaks, slopes, start_value=-8350.0)
    kappa = 0.8
    takeoff = 1 + 8350.0 / slopes[0]
    ramp = slopes[0] / kappa * np.log1p(np.exp(kappa * (days - takeoff)))
    trend = np.where(days <= breaks[0], ramp, trend)
    active = np.maximum(np.rint(trend * np.exp(rng.normal(0, 0.02, n))), 1)

    breaks, slopes = TUR_RECOVERED
    rec = piecewise(days, breaks, slopes, start_value=0.0)
    rec = np.maximum(np.rint(rec * (1 + rng.normal(0, 0.06, n))), 0)

    breaks, slopes = TUR_DEATHS
    dead = piecewise(days, breaks, slopes, start_value=1.0)
    dead = rng.poisson(np.maximum(dead, 0.0))

    confirmed, recovered, deaths = assemble(active, rec, dead)
    # pin day 1 to 98 cumulative confirmed cases
    confirmed = confirmed - confirmed[0] + 98
    active0 = confirmed[0] - recovered[0] - deaths[0]
    assert active0 > 0
    return with_prefix(TUR_START, confirmed, recovered, deaths)


def build_country(code: str, rng: np.random.Generator):
    start, knots = SHAPES[code]
    n = (END - start).days + 1
    knots = list(knots)
    first_day, first_val = knots[0]
    growth = math.log1p(TARGET_ADPC[code] / 100.0)
    knots[-1] = (n, first_val + growth * (n - first_day))
    days = np.arange(1, n + 1, dtype=float)
    log_pm = knot_curve(days, knots) + rng.normal(0, 0.04, n)
    active = np.maximum(np.rint(np.exp(log_pm) * POPULATION[code] / 1e6), 1).astype(np.int64)

    lagged = np.concatenate([np.full(14, active[0]), active[:-14]])
    rec = np.rint(lagged / 14.0 * (1 + rng.normal(0, 0.05, n))).clip(0)
    dead = rng.poisson(rec * 0.02)
    confirmed, recovered, deaths = assemble(active, rec, dead)
    confirmed = confirmed + max(0, 100 - int(confirmed[0]))
    return with_prefix(start, confirmed, recovered, deaths)


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20201125)
    write_panel("TUR", *build_turkey(rng), POPULATION["TUR"])
    for code in sorted(SHAPES):
        write_panel(code, *build_country(code, rng), POPULATION[code])
    print(f"wrote {len(SHAPES) + 1} fixtures to {OUT}")


if __name__ == "__main__":
    main()
