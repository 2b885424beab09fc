"""Optional download client for country-level COVID-19 Data Hub CSVs.

Downloads are cached as ``<cache_dir>/<ISO>/<fetch-date>.csv``. When the
network is unavailable the newest cached copy is returned with a staleness
warning.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import logging
import os
import tempfile
import warnings
from pathlib import Path

import requests

from .errors import FetchError, SchemaError
from .data import REQUIRED_COLUMNS

log = logging.getLogger(__name__)

DATAHUB_URL = "https://storage.covid19datahub.io/country/{code}.csv"
CACHE_ENV = "SEGTREND_CACHE"


class StaleCacheWarning(UserWarning):
    pass


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "segtrend"


def check_header(raw: bytes) -> list[str]:
    text = raw.decode("utf-8-sig", errors="replace")
    first = text.splitlines()[0] if text else ""
    header = [h.strip().lower() for h in next(csv.reader([first]), [])]
    for col in REQUIRED_COLUMNS:
        if col not in header:
            raise SchemaError(f"remote file is missing required column {col!r}", column=col)
    return header


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".part-", suffix=".csv")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def latest_cached(code: str, cache_dir: Path) -> Path | None:
    folder = Path(cache_dir) / code.upper()
    if not folder.is_dir():
        return None
    files = sorted(p for p in folder.glob("*.csv") if not p.name.startswith("."))
    return files[-1] if files else None


def fetch_remote(
    code: str,
    cache_dir: str | Path | None = None,
    *,
    today: dt.date | None = None,
    session=None,
    timeout: float = 30.0,
) -> bytes:
    """Download the country CSV, falling back to the cache on network failure.

    Raises
    ------
    FetchError
        The download failed and nothing is cached for ``code``.
    SchemaError
        The downloaded file lacks a required column.
    """
    code = code.upper()
    cache = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    today = today or dt.date.today()
    get = (session or requests).get
    url = DATAHUB_URL.format(code=code)
    try:
        resp = get(url, timeout=timeout)
        resp.raise_for_status()
        raw = resp.content
    except (requests.RequestException, OSError) as exc:
        cached = latest_cached(code, cache)
        if cached is None:
            raise FetchError(f"could not download {url} and no cached copy exists: {exc}") from exc
        warnings.warn(
            f"network unavailable; using cached {code} data from {cached.stem}",
            StaleCacheWarning,
            stacklevel=2,
        )
        return cached.read_bytes()

    check_header(raw)
    _atomic_write(cache / code / f"{today.isoformat()}.csv", raw)
    log.info("cached %s (%d bytes)", code, len(raw))
    return raw


def _count(text: str) -> int | None:
    text = text.strip()
    if not text or text.upper() == "NA":
        return None
    return int(round(float(text)))


def normalize_datahub(raw: bytes) -> str:
    """Convert a Data Hub CSV to the ``date,confirmed,recovered,deaths,population`` layout.

    Missing cumulative values are carried forward (zero before the first
    report); rows are sorted by date.
    """
    check_header(raw)
    reader = csv.DictReader(io.StringIO(raw.decode("utf-8-sig")))
    reader.fieldnames = [f.strip().lower() for f in reader.fieldnames]
    rows = sorted(reader, key=lambda r: r["date"])
    last = {"confirmed": 0, "recovered": 0, "deaths": 0}
    population = None
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    has_pop = "population" in reader.fieldnames
    for r in rows:
        if has_pop and population is None:
            population = _count(r.get("population") or "")
    writer.writerow(["date", "confirmed", "recovered", "deaths"] + (["population"] if population else []))
    for r in rows:
        for col in last:
            value = _count(r.get(col) or "")
            if value is not None:
                last[col] = value
        row = [r["date"], last["confirmed"], last["recovered"], last["deaths"]]
        if population:
            row.append(population)
        writer.writerow(row)
    return out.getvalue()
