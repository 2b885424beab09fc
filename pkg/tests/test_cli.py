import csv
import io
import json

import numpy as np
import pytest

from segtrend import fixtures
from segtrend.cli import main
from segtrend.data import SeriesSelector
from segtrend.model import TimeSeries
from segtrend.pipeline import FitOptions, fit_series
from segtrend.report import build_report, dump_json, emit_plot_data, emit_report, load_report
from segtrend.search import select_num_breaks
from segtrend.simulate import SimSpec, simulate

TUR = str(fixtures.path("TUR"))


def run(capsysbinary, *argv):
    code = main(list(argv))
    out, err = capsysbinary.readouterr()
    return code, out, err.decode()


def test_fit_turkey_active(capsysbinary):
    code, out, _ = run(capsysbinary, "fit", "--input", TUR, "--series", "active", "--start-date", "2020-03-18")
    assert code == 0
    report = json.loads(out)
    assert report["model"]["k"] == 4
    assert list(report) == ["model", "breakpoints", "segments", "adpc", "selection", "quality", "provenance"]
    assert report["adpc"] is None
    for bp in report["breakpoints"]:
        assert set(bp) >= {"day", "date", "se", "ci"}
    for seg in report["segments"]:
        assert set(seg) >= {"start", "end", "slope", "dpc"}


def test_json_reemit_is_byte_identical(capsysbinary):
    code, out, _ = run(capsysbinary, "fit", "--input", TUR, "--start-date", "2020-03-18", "--series", "daily-deaths")
    assert code == 0
    assert dump_json(load_report(out)).encode() == out


def test_byte_determinism(capsysbinary, tmp_path):
    args = ["fit", "--input", TUR, "--start-date", "2020-03-18", "--format", "csv"]
    outputs = []
    for i in range(2):
        plot = tmp_path / f"plot{i}.csv"
        code, out, _ = run(capsysbinary, *args, "--plot-data", str(plot))
        assert code == 0
        outputs.append((out, plot.read_bytes()))
    assert outputs[0] == outputs[1]


def test_text_table_for_deaths(capsysbinary):
    code, out, _ = run(
        capsysbinary, "fit", "--input", TUR, "--series", "daily-deaths",
        "--start-date", "2020-03-18", "--format", "text", "--date-style", "paper",
    )
    assert code == 0
    lines = out.decode().splitlines()
    start = next(i for i, l in enumerate(lines) if l.startswith("Slope"))
    table = lines[start + 1 : lines.index("", start)]
    assert len(table) == 5
    assert all(l.split()[2].count(".") == 2 for l in table[:4])  # DD.MM.YYYY dates


def test_gap_exits_1(capsysbinary, tmp_path):
    f = tmp_path / "gap.csv"
    f.write_text(
        "date,confirmed,recovered,deaths\n"
        + "".join(f"2020-04-{d:02d},{100 + 10 * d},0,0\n" for d in range(1, 30) if d != 12)
    )
    code, out, err = run(capsysbinary, "fit", "--input", str(f))
    assert code == 1 and out == b""
    assert "2020-04-12" in err and "--fill-gaps" in err
    code, _, _ = run(capsysbinary, "fit", "--input", str(f), "--fill-gaps")
    assert code == 0


def test_fit_error_exits_2(capsysbinary, tmp_path):
    f = tmp_path / "line.csv"
    f.write_text("date,value\n" + "".join(f"2020-05-{d:02d},{2 * d}\n" for d in range(1, 31)))
    code, _, err = run(capsysbinary, "fit", "--input", str(f), "--breaks", "1")
    assert code == 2
    assert "fit error" in err


def test_usage_errors_exit_1(capsysbinary, tmp_path):
    assert run(capsysbinary, "fit", "--input", TUR, "--breaks", "2", "--max-breaks", "3")[0] == 1
    assert run(capsysbinary, "fit", "--input", str(tmp_path / "missing.csv"))[0] == 1
    assert run(capsysbinary, "simulate", "--n", "50", "--slopes", "1,2")[0] == 1
    assert run(capsysbinary, "compare", "--countries", "XXX")[0] == 1


def test_missing_population_exits_1(capsysbinary, tmp_path):
    f = tmp_path / "nopop.csv"
    f.write_text("date,confirmed,recovered,deaths\n" + "".join(f"2020-04-{d:02d},{100 * d},0,0\n" for d in range(1, 30)))
    code, _, err = run(capsysbinary, "fit", "--input", str(f), "--per-million")
    assert code == 1 and "population" in err


def test_compare_rows_sorted_and_order_free(capsysbinary):
    code, a, _ = run(capsysbinary, "compare", "--countries", "TUR,IND,GER", "--format", "csv")
    code2, b, _ = run(capsysbinary, "compare", "--countries", "GER,TUR,IND", "--format", "csv")
    assert code == code2 == 0
    assert a == b
    rows = list(csv.DictReader(io.StringIO(a.decode())))
    assert [r["country"] for r in rows] == ["DEU", "IND", "TUR"]
    assert all(float(r["ci_low"]) < float(r["adpc"]) < float(r["ci_high"]) for r in rows)


def test_simulate_deterministic(capsysbinary, tmp_path):
    args = ["simulate", "--n", "80", "--slopes", "1,-1", "--breakpoints", "40.5", "--sigma", "2", "--seed", "7"]
    code, a, _ = run(capsysbinary, *args)
    _, b, _ = run(capsysbinary, *args)
    assert code == 0 and a == b
    doc = json.loads(a)
    assert doc["truth"]["breakpoints"] == [40.5] and len(doc["series"]["values"]) == 80

    out = tmp_path / "s.csv"
    assert run(capsysbinary, *args, "--format", "csv", "--output", str(out))[0] == 0
    code, rep, _ = run(capsysbinary, "fit", "--input", str(out), "--breaks", "1")
    assert code == 0
    assert abs(json.loads(rep)["breakpoints"][0]["estimate"] - 40.5) < 3


class TestReport:
    def estimate(self, spec, seed=0):
        ts, _ = simulate(spec, seed)
        return fit_series(ts, FitOptions()), ts

    def test_zero_breaks(self):
        est, ts = self.estimate(SimSpec(60, (0.5,), (), sigma=0.1))
        report = build_report(est, ts, SeriesSelector())
        assert report["breakpoints"] == [] and len(report["segments"]) == 1
        rows = list(csv.DictReader(io.StringIO(emit_plot_data(est, ts).decode())))
        fitted = np.array([float(r["fitted"]) for r in rows])
        np.testing.assert_allclose(np.diff(fitted, 2), 0, atol=1e-10)

    def test_plot_data_rows_and_interval_containment(self):
        est, ts = self.estimate(SimSpec(150, (1.0, -1.0, 0.5), (50.3, 100.6), sigma=3.0))
        rows = list(csv.DictReader(io.StringIO(emit_plot_data(est, ts).decode())))
        assert len(rows) == ts.n
        marked = [r for r in rows if r["is_breakpoint"] == "1"]
        assert len(marked) == est.fit.k
        for r in marked:
            assert int(r["ci_low"]) <= int(r["day"]) <= int(r["ci_high"])

    def test_csv_rows(self):
        est, ts = self.estimate(SimSpec(150, (0.01, -0.01, 0.02), (50.0, 100.0), sigma=0.01))
        report = build_report(est, ts, SeriesSelector(log=True))
        rows = list(csv.DictReader(io.StringIO(emit_report(report, "csv").decode())))
        assert [r["row"] for r in rows] == ["segment"] * (est.fit.k + 1) + ["summary"]
        assert float(rows[-1]["adpc"]) == report["adpc"]["estimate"]

    def test_round_trip_lossless(self):
        est, ts = self.estimate(SimSpec(120, (1.0, -1.0), (60.0,), sigma=2.0))
        report = build_report(est, ts, SeriesSelector(), config={"b": 1, "a": "x"})
        assert load_report(emit_report(report)) == report


def test_equal_slopes_choose_no_breaks():
    chosen = []
    for seed in range(100):
        ts, _ = simulate(SimSpec(200, (0.7, 0.7, 0.7), (60.0, 130.0), sigma=2.0), seed)
        chosen.append(select_num_breaks(ts).chosen_m)
    assert sum(m == 0 for m in chosen) >= 95
