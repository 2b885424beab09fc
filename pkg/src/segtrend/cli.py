"""Command-line interface.

Exit codes: 0 success, 1 data or usage error, 2 fit error.
"""

from __future__ import annotations

import argparse
import datetime as dt
import io
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import fixtures
from .data import (
    DEFAULT_THRESHOLD,
    SERIES_KINDS,
    QualityReport,
    SeriesSelector,
    fill_gaps,
    log_transform,
    parse_csv,
    parse_series_csv,
    select_series,
)
from .errors import DataError, FitError
from .fetch import fetch_remote, normalize_datahub
from .pipeline import FitOptions, fit_series
from .report import (
    DATE_STYLES,
    FORMATS,
    build_report,
    comparison_rows,
    dump_json,
    emit_comparison,
    emit_plot_data,
    emit_report,
    sha256_bytes,
)
from .search import DEFAULT_MAX_BREAKS
from .segmented import DEFAULT_CONFIDENCE
from .simulate import SimSpec, simulate

log = logging.getLogger("segtrend")


class UsageError(DataError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an ISO date: {text!r}") from None


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from None


def _start_dates(text: str | None) -> tuple[dt.date | None, dict[str, dt.date]]:
    """``DATE`` applies everywhere; ``CODE=DATE[,CODE=DATE]`` applies per country."""
    if not text:
        return None, {}
    if "=" not in text:
        return _date(text), {}
    per = {}
    for item in text.split(","):
        code, _, value = item.partition("=")
        per[code.strip().upper()] = _date(value.strip())
    return None, per


def _add_series_flags(p: argparse.ArgumentParser, compare: bool = False) -> None:
    p.add_argument("--series", choices=SERIES_KINDS, default="active")
    p.add_argument("--per-million", action=argparse.BooleanOptionalAction, default=compare)
    p.add_argument("--log", action=argparse.BooleanOptionalAction, default=compare)
    p.add_argument("--population", type=int, help="overrides the population column")
    p.add_argument("--threshold", type=int, default=DEFAULT_THRESHOLD)
    p.add_argument("--start-date", help="ISO date, or CODE=DATE pairs for compare")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--max-breaks", type=int, default=None)
    group.add_argument("--breaks", type=int, default=None, help="fix the number of breaks")
    p.add_argument("--min-segment", type=int, default=None)
    p.add_argument("--confidence", type=float, default=DEFAULT_CONFIDENCE)
    p.add_argument("--criterion", choices=("bic", "lwz"), default="bic")
    p.add_argument("--fill-gaps", action="store_true")
    p.add_argument("--clamp-negative", action="store_true")
    p.add_argument("--strict", action="store_true", help="treat non-convergence as a fit error")
    p.add_argument("--format", choices=FORMATS, default="json")
    p.add_argument("--output", help="write data here instead of stdout")
    p.add_argument("--date-style", choices=DATE_STYLES, default="iso")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="segtrend", description="Breakpoint regression and daily percent change analysis of epidemic series.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit one series")
    p.add_argument("--input", required=True, help="panel CSV (date,confirmed,recovered,deaths) or date,value CSV")
    p.add_argument("--code", default=None, help="country code (defaults to the file name)")
    p.add_argument("--plot-data", help="write per-day observed/fitted CSV here")
    _add_series_flags(p)

    p = sub.add_parser("compare", help="ADPC comparison across countries")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--countries", help="comma-separated codes (bundled fixtures unless --data-dir)")
    src.add_argument("--input", nargs="+", help="panel CSVs, one per country")
    p.add_argument("--data-dir", help="directory holding <CODE>.csv panels")
    _add_series_flags(p, compare=True)

    p = sub.add_parser("fetch", help="download country panels from the COVID-19 Data Hub")
    p.add_argument("--countries", required=True)
    p.add_argument("--cache-dir", default=None)
    p.add_argument("--output", help="directory for normalised <CODE>.csv files (default: stdout)")

    p = sub.add_parser("simulate", help="synthetic hinge-model series")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--slopes", type=_floats, required=True)
    p.add_argument("--breakpoints", type=_floats, default=())
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--intercept", type=float, default=0.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--origin", type=_date, default=dt.date(2020, 1, 1))
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output")
    p.add_argument("--truth", help="write the ground-truth record (JSON) here")
    return parser


def _write(data: bytes, path: str | None) -> None:
    if path:
        Path(path).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _options(args) -> FitOptions:
    return FitOptions(
        max_breaks=args.max_breaks if args.max_breaks is not None else DEFAULT_MAX_BREAKS,
        breaks=args.breaks,
        min_segment=args.min_segment,
        confidence=args.confidence,
        criterion=args.criterion,
        strict=args.strict,
    )


def _config_echo(args) -> dict:
    skip = {"output", "plot_data", "verbose", "input", "data_dir"}
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        out[key] = value.isoformat() if isinstance(value, dt.date) else value
    return out


def analyse(raw: bytes, code: str, args, start: dt.date | None):
    """Run the whole pipeline on one input file; returns (estimate, series, report)."""
    text = raw.decode("utf-8-sig")
    first = text.split("\n", 1)[0].lower()
    quality = QualityReport()
    if "value" in first and "confirmed" not in first:
        ts = parse_series_csv(io.StringIO(text))
        selector = SeriesSelector("active", False, args.log)
        if args.log:
            ts = ts.with_values(log_transform(ts.values, ts.dates))
    else:
        panel = parse_csv(io.StringIO(text, newline=""), code)
        if args.population is not None:
            panel = replace(panel, population=args.population)
        panel = fill_gaps(panel, args.fill_gaps, quality)
        selector = SeriesSelector(args.series, args.per_million, args.log)
        ts = select_series(panel, selector, args.threshold, start, None, args.clamp_negative, quality)

    estimate = fit_series(ts, _options(args))
    if not estimate.fit.converged:
        log.warning("%s: refinement stopped without convergence (%s)", code or "series", estimate.fit.stop_reason)
    for fb in estimate.fallbacks:
        log.warning("%s: fell back from %s", code or "series", fb)
    report = build_report(
        estimate,
        ts,
        selector,
        code=code,
        quality=quality,
        input_sha256=sha256_bytes(raw),
        config=_config_echo(args),
        date_style=args.date_style,
    )
    return estimate, ts, report


def cmd_fit(args) -> int:
    raw = Path(args.input).read_bytes()
    code = (args.code or Path(args.input).stem).upper()
    start, per = _start_dates(args.start_date)
    start = start or per.get(code)
    estimate, ts, report = analyse(raw, code, args, start)
    _write(emit_report(report, args.format), args.output)
    if args.plot_data:
        Path(args.plot_data).write_bytes(emit_plot_data(estimate, ts, args.date_style))
    return 0


def cmd_compare(args) -> int:
    start_all, per = _start_dates(args.start_date)
    jobs = {}
    if args.input:
        for p in args.input:
            jobs[Path(p).stem.upper()] = (Path(p), None)
    else:
        for item in args.countries.split(","):
            if not item.strip():
                continue
            if args.data_dir:
                code = item.strip().upper()
                jobs[code] = (Path(args.data_dir) / f"{code}.csv", None)
            else:
                try:
                    code = fixtures.resolve(item)
                except KeyError:
                    raise UsageError(f"no bundled data for {item!r}; bundled: {', '.join(fixtures.codes())}") from None
                jobs[code] = (fixtures.path(code), fixtures.start_date(code))

    results = {}
    for code in sorted(jobs):
        path, default_start = jobs[code]
        start = per.get(code) or start_all or default_start
        _, _, report = analyse(path.read_bytes(), code, args, start)
        results[code] = report
    _write(emit_comparison(comparison_rows(results), args.format), args.output)
    return 0


def cmd_fetch(args) -> int:
    codes = [c.strip().upper() for c in args.countries.split(",") if c.strip()]
    for code in codes:
        raw = fetch_remote(code, args.cache_dir)
        text = normalize_datahub(raw).encode()
        if args.output:
            out = Path(args.output)
            out.mkdir(parents=True, exist_ok=True)
            (out / f"{code}.csv").write_bytes(text)
        else:
            _write(text, None)
    return 0


def cmd_simulate(args) -> int:
    try:
        spec = SimSpec(args.n, args.slopes, args.breakpoints, args.sigma, args.intercept)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ts, truth = simulate(spec, args.seed, args.origin)
    if args.format == "json":
        data = dump_json(
            {
                "truth": truth,
                "series": {"origin_date": ts.origin_date.isoformat(), "values": ts.values.tolist()},
            }
        ).encode()
    else:
        lines = ["date,value"] + [f"{d.isoformat()},{v!r}" for d, v in zip(ts.dates, ts.values.tolist())]
        data = ("\n".join(lines) + "\n").encode()
    _write(data, args.output)
    if args.truth:
        Path(args.truth).write_text(json.dumps(truth, indent=2) + "\n")
    return 0


COMMANDS = {"fit": cmd_fit, "compare": cmd_compare, "fetch": cmd_fetch, "simulate": cmd_simulate}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(name)s: %(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except FitError as exc:
        print(f"segtrend: fit error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"segtrend: data error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"segtrend: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
