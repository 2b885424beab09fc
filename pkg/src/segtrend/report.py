"""Fit reports and their serialisations.

A report is a plain JSON-compatible dict with a fixed key order; JSON is the
canonical form and csv/text are projections of it.
"""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import io
import json
import math

import numpy as np

from . import __version__
from .data import QualityReport, SeriesSelector
from .model import TimeSeries
from .pipeline import Estimate
from .segmented import breakpoint_dates, round_half_away
from .trend import model_dpc, segment_bounds, trend_summary

FORMATS = ("json", "csv", "text")
DATE_STYLES = ("iso", "paper")


def format_date(date: dt.date, style: str = "iso") -> str:
    if style == "paper":
        return date.strftime("%d.%m.%Y")
    return date.isoformat()


def _num(value):
    """Plain float for JSON; non-finite values become null."""
    v = float(value)
    return v if math.isfinite(v) else None


def _nums(values):
    return [_num(v) for v in np.asarray(values, dtype=float).reshape(-1)]


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def build_report(
    estimate: Estimate,
    ts: TimeSeries,
    selector: SeriesSelector,
    *,
    code: str = "",
    quality: QualityReport | None = None,
    input_sha256: str | None = None,
    config: dict | None = None,
    date_style: str = "iso",
) -> dict:
    fit = estimate.fit
    init = estimate.init
    fmt = lambda d: format_date(d, date_style)  # noqa: E731
    slopes = fit.slopes
    slope_se = np.sqrt(np.clip(np.diag(fit.slope_covariance), 0.0, None))
    coef_se = fit.coefficient_se

    breakpoints = []
    for s, (tau, date) in enumerate(zip(fit.breakpoints, breakpoint_dates(fit))):
        breakpoints.append(
            {
                "estimate": _num(tau),
                "day": round_half_away(tau),
                "date": fmt(date),
                "se": _num(fit.breakpoint_se[s]),
                "ci": _nums(fit.breakpoint_ci[s]),
                "delta": _num(fit.deltas[s]),
                "delta_se": _num(coef_se[2 + s]),
            }
        )

    summary = trend_summary(fit) if selector.log else None
    segments = []
    for j, ((start, end), b) in enumerate(zip(segment_bounds(fit), slopes)):
        segments.append(
            {
                "start": start,
                "end": end,
                "start_date": fmt(ts.date_of(start)),
                "end_date": fmt(ts.date_of(end)),
                "length": end - start,
                "slope": _num(b),
                "slope_se": _num(slope_se[j]),
                "dpc": _num(model_dpc(b)) if selector.log else None,
            }
        )

    adpc = None
    if summary is not None:
        adpc = {
            "estimate": _num(summary.adpc),
            "se": _num(summary.adpc_se),
            "ci": _nums(summary.adpc_ci),
            "arithmetic_dpc": _num(summary.arithmetic_dpc),
        }

    return {
        "model": {
            "code": code,
            "series": selector.label,
            "log_scale": selector.log,
            "per_million": selector.per_million,
            "origin_date": fmt(ts.origin_date),
            "end_date": fmt(ts.date_of(ts.n)),
            "n": ts.n,
            "k": fit.k,
            "intercept": _num(fit.coefficients[0]),
            "coefficients": _nums(fit.coefficients),
            "coefficient_se": _nums(coef_se),
            "covariance": [_nums(row) for row in fit.covariance],
            "rss": _num(fit.rss),
            "dof": fit.dof,
            "sigma": _num(math.sqrt(fit.rss / fit.dof)),
            "confidence": fit.confidence,
            "iterations": fit.iterations,
            "converged": fit.converged,
            "stop_reason": fit.stop_reason,
        },
        "breakpoints": breakpoints,
        "segments": segments,
        "adpc": adpc,
        "selection": {
            "criterion": init.criterion,
            "min_segment": init.min_segment,
            "chosen_m": init.chosen_m,
            "used_m": fit.k,
            "initial_breaks": list(init.breaks_by_m.get(fit.k, ())),
            "rss_by_m": {str(m): _num(v) for m, v in init.rss_by_m.items()},
            "ic_by_m": {str(m): _num(v) for m, v in init.bic_by_m.items()},
            "fallbacks": list(estimate.fallbacks),
        },
        "quality": (quality or QualityReport()).to_dict(),
        "provenance": {
            "version": __version__,
            "input_sha256": input_sha256,
            "config": dict(sorted((config or {}).items())),
        },
    }


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False, ensure_ascii=False) + "\n"


def load_report(data: bytes | str) -> dict:
    return json.loads(data)


def _fmt_num(v, digits: int = 4) -> str:
    if v is None:
        return "NA"
    return f"{v:.{digits}g}" if abs(v) < 1e5 else f"{v:.1f}"


def report_text(report: dict) -> str:
    m = report["model"]
    lines = [
        f"Breakpoint regression: {m['code'] or 'series'} {m['series']} "
        f"({m['origin_date']} to {m['end_date']}, n={m['n']}, k={m['k']})",
        "",
    ]
    header = ("Slope", "Breakpoint", "Date", "SE", f"{round(100 * m['confidence'])}% CI")
    rows = []
    bps = report["breakpoints"]
    for j, seg in enumerate(report["segments"]):
        row = [_fmt_num(seg["slope"])]
        if j < len(bps):
            bp = bps[j]
            row += [
                f"{bp['estimate']:.1f}",
                bp["date"],
                _fmt_num(bp["se"], 3),
                f"[{bp['ci'][0]:.1f}, {bp['ci'][1]:.1f}]",
            ]
        else:
            row += ["", "", "", ""]
        rows.append(row)
    widths = [max(len(header[i]), *(len(r[i]) for r in rows)) for i in range(len(header))]
    lines.append("  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip())
    for r in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    lines.append("")
    lines.append(f"intercept {_fmt_num(m['intercept'])}  rss {_fmt_num(m['rss'])}  sigma {_fmt_num(m['sigma'])}")
    if report["adpc"] is not None:
        a = report["adpc"]
        lines.append(
            f"ADPC {a['estimate']:.4g}%  SE {a['se']:.4g}  CI [{a['ci'][0]:.4g}, {a['ci'][1]:.4g}]"
        )
    if not m["converged"]:
        lines.append(f"note: refinement stopped without convergence ({m['stop_reason']})")
    for fb in report["selection"]["fallbacks"]:
        lines.append(f"note: fell back from {fb}")
    q = report["quality"]
    if q["revisions"] or q["negative_active"] or q["filled_dates"]:
        lines.append(
            f"quality: {q['revisions']} negative daily revisions, "
            f"{q['negative_active']} negative active counts, {q['filled_dates']} filled dates"
        )
    return "\n".join(lines) + "\n"


CSV_COLUMNS = (
    "row",
    "segment",
    "start_day",
    "end_day",
    "start_date",
    "end_date",
    "slope",
    "slope_se",
    "dpc",
    "break_day",
    "break_estimate",
    "break_date",
    "break_se",
    "ci_low",
    "ci_high",
    "adpc",
    "adpc_se",
    "adpc_ci_low",
    "adpc_ci_high",
    "rss",
)


def _cell(v):
    if v is None:
        return ""
    return repr(v) if isinstance(v, float) else v


def report_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    bps = report["breakpoints"]
    for j, seg in enumerate(report["segments"], start=1):
        row = {
            "row": "segment",
            "segment": j,
            "start_day": seg["start"],
            "end_day": seg["end"],
            "start_date": seg["start_date"],
            "end_date": seg["end_date"],
            "slope": seg["slope"],
            "slope_se": seg["slope_se"],
            "dpc": seg["dpc"],
        }
        if j <= len(bps):
            bp = bps[j - 1]
            row.update(
                break_day=bp["day"],
                break_estimate=bp["estimate"],
                break_date=bp["date"],
                break_se=bp["se"],
                ci_low=bp["ci"][0],
                ci_high=bp["ci"][1],
            )
        writer.writerow({k: _cell(v) for k, v in row.items()})
    summary = {"row": "summary", "rss": report["model"]["rss"]}
    if report["adpc"] is not None:
        a = report["adpc"]
        summary.update(adpc=a["estimate"], adpc_se=a["se"], adpc_ci_low=a["ci"][0], adpc_ci_high=a["ci"][1])
    writer.writerow({k: _cell(v) for k, v in summary.items()})
    return buf.getvalue()


def emit_report(report: dict, fmt: str = "json") -> bytes:
    if fmt == "json":
        return dump_json(report).encode()
    if fmt == "csv":
        return report_csv(report).encode()
    if fmt == "text":
        return report_text(report).encode()
    raise ValueError(f"unknown format {fmt!r}")


def emit_plot_data(estimate: Estimate, observed: TimeSeries, date_style: str = "iso") -> bytes:
    """Per-day observed and fitted values with breakpoint interval bounds.

    Each breakpoint is marked on its rounded day; its interval is widened
    outward to whole days so that row always lies inside it.
    """
    fit = estimate.fit
    days = observed.x
    fitted = fit.predict(days)
    marks = {}
    for tau, (lo, hi) in zip(fit.breakpoints, fit.breakpoint_ci):
        marks[round_half_away(tau)] = (math.floor(lo), math.ceil(hi))

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["day", "date", "observed", "fitted", "is_breakpoint", "ci_low", "ci_high"])
    for t, y, f in zip(days.astype(int), observed.values, fitted):
        ci = marks.get(int(t))
        writer.writerow(
            [
                int(t),
                format_date(observed.date_of(t), date_style),
                repr(float(y)),
                repr(float(f)),
                1 if ci else 0,
                ci[0] if ci else "",
                ci[1] if ci else "",
            ]
        )
    return buf.getvalue().encode()


def comparison_rows(results: dict[str, dict]) -> list[dict]:
    """One summary row per country, sorted by code."""
    rows = []
    for code in sorted(results):
        r = results[code]
        a = r["adpc"] or {}
        rows.append(
            {
                "country": code,
                "start_date": r["model"]["origin_date"],
                "end_date": r["model"]["end_date"],
                "n": r["model"]["n"],
                "k": r["model"]["k"],
                "adpc": a.get("estimate"),
                "se": a.get("se"),
                "ci_low": (a.get("ci") or [None, None])[0],
                "ci_high": (a.get("ci") or [None, None])[1],
            }
        )
    return rows


def emit_comparison(rows: list[dict], fmt: str = "json") -> bytes:
    if fmt == "json":
        return dump_json({"countries": rows}).encode()
    if fmt == "csv":
        buf = io.StringIO()
        cols = list(rows[0]) if rows else ["country"]
        writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: _cell(v) for k, v in r.items()})
        return buf.getvalue().encode()
    if fmt == "text":
        header = ("Country", "ADPC (%)", "SE", "CI-L", "CI-U", "k", "window")
        body = [
            (
                r["country"],
                _fmt_num(r["adpc"]),
                _fmt_num(r["se"]),
                _fmt_num(r["ci_low"]),
                _fmt_num(r["ci_high"]),
                str(r["k"]),
                f"{r['start_date']} to {r['end_date']}",
            )
            for r in rows
        ]
        widths = [max(len(header[i]), *(len(b[i]) for b in body)) if body else len(header[i]) for i in range(len(header))]
        lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
        lines += ["  ".join(c.ljust(w) for c, w in zip(b, widths)).rstrip() for b in body]
        return ("\n".join(lines) + "\n").encode()
    raise ValueError(f"unknown format {fmt!r}")
