import csv
import io
import json
import math

import pytest

from hcdlab import cli
from hcdlab.errors import NoConvergence, WitnessInvalid


def run_text(capsys, *argv):
    rc = cli.run(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_trig_table_csv(capsys):
    rc, out, _ = run_text(capsys, "trig-table", "--norm", "lp:4", "--samples", "360")
    assert rc == 0
    rows = rows_of(out)
    assert list(rows[0]) == list(cli.CSV_COLUMNS["trig-table"])
    assert len(rows) == 360
    assert max(float(r["residual"]) for r in rows) < 1e-7


def test_jacobian_scan_slope(capsys):
    rc, out, _ = run_text(capsys, "jacobian-scan", "--norm", "euclidean",
                          "--phi", "0.7", "--omega", "1.3", "--r", "1.0")
    assert rc == 0
    rows = rows_of(out)
    assert abs(float(rows[0]["slope_J"]) - 5.0) < 0.1
    rc, out, _ = run_text(capsys, "jacobian-scan", "--format", "json")
    res = json.loads(out)["result"]
    assert abs(res["slope_detM1"] - 2.0) < 0.1 and abs(res["slope_dz_domega"] - 3.0) < 0.15


def test_json_is_byte_identical_and_carries_config(capsys):
    argv = ("geodesic", "--norm", "lp:3", "--samples", "17", "--format", "json", "--seed", "0x2a")
    _, a, _ = run_text(capsys, *argv)
    _, b, _ = run_text(capsys, *argv)
    assert a == b
    doc = json.loads(a)
    assert doc["config"]["seed"] == 42 and doc["config"]["norm"] == "lp:3"
    assert doc["config"]["samples"] == 17
    assert list(doc) == sorted(doc)


def test_floats_round_trip():
    for x in (0.1, 1 / 3, math.pi * 1e-300, 2.0**-1074, 1e22):
        assert float(json.loads(cli.dumps(x))) == x
    assert json.loads(cli.dumps({"a": math.nan, "b": -math.inf})) == {"a": None, "b": None}


@pytest.mark.parametrize(
    "argv",
    [
        ["geodesic", "--bogus", "1"],
        ["distance", "--samples", "3", "--point", "1,0,0"],  # --samples is not a distance flag
        ["trig-table", "--norm", "lp:0.5"],
        ["trig-table", "--norm", "hexagon"],
        ["distance", "--point", "1,2"],
        ["geodesic", "--seed", str(2**64)],
        ["nonsense"],
        [],
    ],
)
def test_usage_errors_exit_2(capsys, argv):
    rc, out, err = run_text(capsys, *argv)
    assert rc == 2 and out == ""
    assert err


def test_bad_norm_message_names_grammar(capsys):
    _, _, err = run_text(capsys, "trig-table", "--norm", "lp:0.5")
    assert "--norm" in err and "lens:<c>,<R>" in err


def test_runtime_usage_error(capsys):
    rc, _, err = run_text(capsys, "bm-falsify", "--norm", "lens:1,2", "--samples", "100")
    assert rc == 2 and "C¹" in err


@pytest.mark.parametrize("exc", [NoConvergence, WitnessInvalid])
def test_numeric_failure_exit_3(capsys, monkeypatch, exc):
    def boom(cfg):
        raise exc("stuck")

    monkeypatch.setitem(cli.HANDLERS, "distance", boom)
    rc, _, err = run_text(capsys, "distance", "--point", "1,0,0")
    assert rc == 3 and "stuck" in err


def test_output_writes_only_that_file(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    target = tmp_path / "out" / "lemma.csv"
    target.parent.mkdir()
    rc, out, _ = run_text(capsys, "lemma-check", "--output", str(target))
    assert rc == 0 and out == ""
    assert sorted(p.relative_to(tmp_path).as_posix() for p in tmp_path.rglob("*")) == [
        "out", "out/lemma.csv",
    ]
    rows = rows_of(target.read_text())
    assert list(rows[0]) == ["s", "alpha", "beta", "d", "a", "ratio"]


def test_distance_report(capsys):
    rc, out, _ = run_text(capsys, "distance", "--point", "0,0,1")
    res = json.loads(out)["result"]
    assert rc == 0 and res["distance"] == pytest.approx(math.sqrt(4 * math.pi))
    assert res["covector"] == [None, None, None]


def test_geodesic_reports_cut_time(capsys):
    _, out, _ = run_text(capsys, "geodesic", "--omega", "2.0", "--t", "2.0", "--format", "json")
    res = json.loads(out)["result"]
    assert res["cut_time"] == pytest.approx(math.pi) and res["minimal"]


def test_bm_csv_row(capsys):
    rc, out, _ = run_text(capsys, "bm-falsify", "--samples", "20000", "--N", "3", "--format", "csv")
    (row,) = rows_of(out)
    assert rc == 0 and row["violated"] == "false"
    assert float(row["rho"]) == 2.0**-6


def test_contraction_slope(capsys):
    _, out, _ = run_text(capsys, "contraction", "--samples", "5000", "--format", "json")
    assert abs(json.loads(out)["result"]["slope"] - 5.0) < 0.3


@pytest.mark.slow
def test_lens_mcp_example(capsys):
    rc, out, _ = run_text(capsys, "mcp-falsify", "--norm", "lens:1,2", "--K", "0", "--N", "5",
                          "--samples", "20000")
    doc = json.loads(out)["result"]
    w = doc["details"]["witness"]
    assert rc == 0 and doc["violated"]
    assert max(w["confinement_max_abs_y"], w["confinement_max_abs_z"]) < 1e-9
    assert doc["rhs"] > 0
