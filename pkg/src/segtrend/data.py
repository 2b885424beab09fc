"""Country panels of cumulative counts and the series derived from them.

Input files carry one row per day with cumulative ``confirmed``,
``recovered`` and ``deaths`` (and optionally ``population``). Daily counts
are first differences of the cumulative columns; active cases are
confirmed minus deaths minus recovered.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from .errors import (
    DataError,
    DateOrderError,
    GapError,
    MissingPopulation,
    NonPositiveValue,
    ParseError,
    SchemaError,
    ThresholdNotReached,
)
from .model import TimeSeries

REQUIRED_COLUMNS = ("date", "confirmed", "recovered", "deaths")
SERIES_KINDS = ("active", "daily-cases", "daily-recovered", "daily-deaths")
DEFAULT_THRESHOLD = 100


@dataclass(frozen=True)
class CountryPanel:
    code: str
    dates: tuple[dt.date, ...]
    confirmed: np.ndarray
    recovered: np.ndarray
    deaths: np.ndarray
    population: int | None = None

    def __post_init__(self):
        cols = {}
        for name in ("confirmed", "recovered", "deaths"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            cols[name] = arr
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "dates", tuple(self.dates))
        if any(len(c) != len(self.dates) for c in cols.values()):
            raise SchemaError("panel columns have different lengths")

    def __len__(self) -> int:
        return len(self.dates)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CountryPanel):
            return NotImplemented
        return (
            self.code == other.code
            and self.dates == other.dates
            and self.population == other.population
            and all(
                np.array_equal(getattr(self, c), getattr(other, c))
                for c in ("confirmed", "recovered", "deaths")
            )
        )

    __hash__ = None


@dataclass
class QualityReport:
    """Data-quality flags collected while deriving series."""

    revisions: list[dict] = field(default_factory=list)
    anomalies: list[dict] = field(default_factory=list)
    filled_dates: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "revisions": len(self.revisions),
            "negative_active": len(self.anomalies),
            "filled_dates": len(self.filled_dates),
            "details": {
                "revisions": self.revisions,
                "negative_active": self.anomalies,
                "filled_dates": self.filled_dates,
            },
        }


@dataclass(frozen=True)
class SeriesSelector:
    kind: str = "active"
    per_million: bool = False
    log: bool = False

    def __post_init__(self):
        if self.kind not in SERIES_KINDS:
            raise ValueError(f"unknown series {self.kind!r}; choose from {', '.join(SERIES_KINDS)}")

    @property
    def label(self) -> str:
        parts = [self.kind]
        if self.per_million:
            parts.append("per-million")
        if self.log:
            parts.append("log")
        return "/".join(parts)


# --- parsing ------------------------------------------------------------------


def _parse_count(text: str, line: int, column: str) -> int:
    text = text.strip()
    try:
        value = int(text)
    except ValueError:
        raise ParseError(line, f"{column}: expected an integer count, got {text!r}") from None
    if value < 0:
        raise ParseError(line, f"{column}: negative count {value}")
    return value


def parse_csv(stream: IO[str] | str, code: str = "") -> CountryPanel:
    """Read a panel from CSV text.

    The header must contain ``date,confirmed,recovered,deaths`` (any order,
    extra columns ignored) and may contain ``population``. Dates are
    ISO-8601 and strictly ascending.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty file: no header row") from None
    header = [h.strip().lstrip("\ufeff").lower() for h in header]
    for col in REQUIRED_COLUMNS:
        if col not in header:
            raise SchemaError(f"missing required column {col!r}", column=col)
    idx = {name: header.index(name) for name in REQUIRED_COLUMNS}
    pop_idx = header.index("population") if "population" in header else None

    dates, conf, rec, dead = [], [], [], []
    population = None
    for line, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) < len(header):
            raise ParseError(line, f"expected {len(header)} fields, got {len(row)}")
        try:
            date = dt.date.fromisoformat(row[idx["date"]].strip())
        except ValueError:
            raise ParseError(line, f"bad date {row[idx['date']]!r}") from None
        if dates and date <= dates[-1]:
            what = "duplicate" if date == dates[-1] else "descending"
            raise DateOrderError(line, f"{what} date {date.isoformat()} after {dates[-1].isoformat()}")
        dates.append(date)
        conf.append(_parse_count(row[idx["confirmed"]], line, "confirmed"))
        rec.append(_parse_count(row[idx["recovered"]], line, "recovered"))
        dead.append(_parse_count(row[idx["deaths"]], line, "deaths"))
        if pop_idx is not None and row[pop_idx].strip() and population is None:
            population = _parse_count(row[pop_idx], line, "population") or None
    if not dates:
        raise SchemaError("file has a header but no data rows")
    return CountryPanel(code, tuple(dates), conf, rec, dead, population)


def read_panel(path: str | Path, code: str | None = None) -> CountryPanel:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        return parse_csv(fh, code if code is not None else path.stem.upper())


def format_csv(panel: CountryPanel) -> str:
    """Serialise a panel in the canonical input layout (LF line endings)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(REQUIRED_COLUMNS)
    if panel.population is not None:
        header.append("population")
    writer.writerow(header)
    for i, date in enumerate(panel.dates):
        row = [date.isoformat(), int(panel.confirmed[i]), int(panel.recovered[i]), int(panel.deaths[i])]
        if panel.population is not None:
            row.append(panel.population)
        writer.writerow(row)
    return buf.getvalue()


# --- derivations --------------------------------------------------------------


def fill_gaps(panel: CountryPanel, enabled: bool = True, quality: QualityReport | None = None) -> CountryPanel:
    """Insert missing days by carrying cumulative values forward.

    Raises ``GapError`` naming the first missing date when ``enabled`` is
    false and the panel has a gap.
    """
    one = dt.timedelta(days=1)
    gaps = [i for i in range(1, len(panel)) if panel.dates[i] - panel.dates[i - 1] > one]
    if not gaps:
        return panel
    if not enabled:
        raise GapError(panel.dates[gaps[0] - 1] + one)

    dates, rows = [], []
    cols = np.column_stack([panel.confirmed, panel.recovered, panel.deaths])
    for i, date in enumerate(panel.dates):
        if i:
            d = panel.dates[i - 1] + one
            while d < date:
                dates.append(d)
                rows.append(cols[i - 1])
                if quality is not None:
                    quality.filled_dates.append(d.isoformat())
                d += one
        dates.append(date)
        rows.append(cols[i])
    out = np.array(rows)
    return replace(panel, dates=tuple(dates), confirmed=out[:, 0], recovered=out[:, 1], deaths=out[:, 2])


def derive_daily(cumulative, quality: QualityReport | None = None, label: str = "", dates=None) -> np.ndarray:
    """First differences ``c[t+1] - c[t]``; negative revisions are kept."""
    c = np.asarray(cumulative)
    if c.size < 2:
        raise DataError("need at least two cumulative values to difference")
    d = np.diff(c)
    if quality is not None:
        for i in np.flatnonzero(d < 0):
            entry = {"series": label, "index": int(i + 1), "value": d[i].item()}
            if dates is not None:
                entry["date"] = dates[i + 1].isoformat()
            quality.revisions.append(entry)
    return d


def derive_active(panel: CountryPanel, quality: QualityReport | None = None) -> np.ndarray:
    active = panel.confirmed - panel.deaths - panel.recovered
    if quality is not None:
        for i in np.flatnonzero(active < 0):
            quality.anomalies.append({"date": panel.dates[i].isoformat(), "value": int(active[i])})
    return active


def per_million(values, population: int | None) -> np.ndarray:
    if population is None:
        raise MissingPopulation("per-million scaling needs a population (column or --population)")
    if population <= 0:
        raise MissingPopulation(f"population must be positive, got {population}")
    return np.asarray(values, dtype=float) * 1e6 / population


def align_threshold(
    panel: CountryPanel,
    threshold: int = DEFAULT_THRESHOLD,
    explicit_start: dt.date | None = None,
) -> dt.date:
    """First date with cumulative confirmed at or above ``threshold``.

    An explicit start date overrides the threshold rule.
    """
    if explicit_start is not None:
        if not panel.dates[0] <= explicit_start <= panel.dates[-1]:
            raise DataError(
                f"start date {explicit_start.isoformat()} outside the data "
                f"({panel.dates[0].isoformat()} to {panel.dates[-1].isoformat()})"
            )
        return explicit_start
    hits = np.flatnonzero(panel.confirmed >= threshold)
    if hits.size == 0:
        raise ThresholdNotReached(
            f"{panel.code or 'series'}: confirmed cases never reach {threshold}"
        )
    return panel.dates[int(hits[0])]


def log_transform(values, dates: Iterable[dt.date] | None = None) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    bad = np.flatnonzero(~(v > 0))
    if bad.size:
        i = int(bad[0])
        where = list(dates)[i].isoformat() if dates is not None else f"position {i}"
        raise NonPositiveValue(f"cannot take log of {v[i]:g} on {where}", where)
    return np.log(v)


def select_series(
    panel: CountryPanel,
    selector: SeriesSelector,
    threshold: int = DEFAULT_THRESHOLD,
    start: dt.date | None = None,
    end: dt.date | None = None,
    clamp_negative: bool = False,
    quality: QualityReport | None = None,
) -> TimeSeries:
    """Derive, scale, window and optionally log the requested series."""
    if selector.kind == "active":
        values = derive_active(panel, quality).astype(float)
        dates = list(panel.dates)
    else:
        column = {
            "daily-cases": panel.confirmed,
            "daily-recovered": panel.recovered,
            "daily-deaths": panel.deaths,
        }[selector.kind]
        values = derive_daily(column, quality, selector.kind, panel.dates).astype(float)
        dates = list(panel.dates[1:])
        if clamp_negative:
            values = np.maximum(values, 0.0)

    if selector.per_million:
        values = per_million(values, panel.population)

    first = align_threshold(panel, threshold, start)
    keep = [i for i, d in enumerate(dates) if d >= first and (end is None or d <= end)]
    if len(keep) < 3:
        raise DataError(f"only {len(keep)} observations in the analysis window")
    values = values[keep]
    dates = [dates[i] for i in keep]

    if selector.log:
        values = log_transform(values, dates)
    return TimeSeries(dates[0], values)


def cumulative_from_daily(first: int, daily) -> np.ndarray:
    """Inverse of :func:`derive_daily` anchored at the first cumulative value."""
    return np.concatenate(([first], first + np.cumsum(daily)))



def parse_series_csv(stream: IO[str] | str) -> TimeSeries:
    """Read a plain ``date,value`` series on a contiguous daily grid."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    header = [h.strip().lstrip("\ufeff").lower() for h in next(reader, [])]
    if "date" not in header or "value" not in header:
        raise SchemaError("series file needs 'date' and 'value' columns")
    di, vi = header.index("date"), header.index("value")
    dates, values = [], []
    for line, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            date = dt.date.fromisoformat(row[di].strip())
            value = float(row[vi])
        except (ValueError, IndexError):
            raise ParseError(line, f"bad row {row!r}") from None
        if dates and (date - dates[-1]).days != 1:
            if date <= dates[-1]:
                raise DateOrderError(line, f"date {date.isoformat()} not after {dates[-1].isoformat()}")
            raise GapError(dates[-1] + dt.timedelta(days=1))
        dates.append(date)
        values.append(value)
    if len(values) < 3:
        raise DataError("series needs at least 3 rows")
    return TimeSeries(dates[0], values)
