"""Bundled country panels, 2020 analysis window ending 2020-11-25."""

from __future__ import annotations

import datetime as dt
import json
from functools import lru_cache
from importlib import resources
from pathlib import Path


@lru_cache(maxsize=1)
def manifest() -> dict:
    return json.loads(resources.files(__name__).joinpath("manifest.json").read_text())


def codes() -> list[str]:
    return sorted(manifest()["countries"])


def resolve(code: str) -> str:
    code = code.strip().upper()
    for iso, meta in manifest()["countries"].items():
        if code == iso or code in meta.get("aliases", ()):
            return iso
    raise KeyError(code)


def path(code: str) -> Path:
    return Path(str(resources.files(__name__).joinpath(f"{resolve(code)}.csv")))


def start_date(code: str) -> dt.date | None:
    value = manifest()["countries"][resolve(code)].get("start_date")
    return dt.date.fromisoformat(value) if value else None
