from __future__ import annotations

import csv
import io
import json

import pytest

from shintani import records as rec
from shintani.cli import main
from shintani.invariants import clear_caches
from shintani.precision import parse_real

FAST = ["--precision", "128", "--n-min", "4", "--n-max", "8"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_field(capsys):
    assert run(capsys, "field", "--d", "5")[:2] == (0, "a=3 b=1 eps=(3+√5)/2\n")
    code, out, _ = run(capsys, "field", "--d", "3")
    assert code == 0 and out.startswith("a=4 b=2")
    code, _, err = run(capsys, "field", "--d", "4")
    assert code == 2 and "not squarefree" in err


def test_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["invariant", "--d", "5"])
    assert exc.value.code == 2
    assert run(capsys, "invariant", "--d", "5", "--u", "2", "--routes", "r9")[0] == 2
    assert run(capsys, "invariant", "--d", "5", "--u", "0", "--v", "0")[0] == 2


def test_invariant_json_round_trip(capsys):
    code, out, _ = run(capsys, "invariant", "--d", "5", "--u", "2", "--v", "0", "--routes", "r2,r3,r4",
                       "--format", "json", *FAST)
    assert code == 0
    records = rec.from_json(out)
    assert rec.to_json(records) == out
    routes = {r.route for r in records}
    assert {"r2:x1", "r2:x2", "r3:x1", "r3:x2", "r4:x1", "r2:x"} <= routes
    estimates = [r for r in records if r.n == "estimate"]
    assert estimates and all(r.value and r.error_indicator for r in estimates)
    for r in records:
        if r.value is not None:
            assert parse_real(r.value, r.precision_bits) > 0
    assert all((r.g, r.x, r.y) == (3, "1", "1/2") for r in records)
    assert any(r.status == "degenerate" for r in records)
    assert records == rec.sort_records(records)


def test_invariant_route_error_is_a_record(capsys):
    code, out, _ = run(capsys, "invariant", "--d", "5", "--u", "1", "--v", "0", "--routes", "r4", "--format", "json")
    assert code == 0
    (record,) = rec.from_json(out)
    assert record.route == "r4" and record.value is None and record.status.startswith("error")


def test_invariant_csv(capsys):
    code, out, _ = run(capsys, "invariant", "--d", "5", "--u", "2", "--routes", "r2", "--format", "csv", *FAST)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "d,a,b,u,v,norm,g,x,y,route,n,value,error,precision"
    rows = list(csv.reader(io.StringIO(out)))
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    assert buf.getvalue() == out
    assert {row[9] for row in rows[1:]} == {"r2:x1", "r2:x2", "r2:x"}


def test_invariant_table(capsys):
    code, out, _ = run(capsys, "invariant", "--d", "5", "--u", "2", "--routes", "r2", *FAST)
    assert code == 0 and out.startswith("route") and "estimate" in out


def test_verify_exit_codes(capsys):
    args = ["verify", "--d", "5", "--u", "2", "--routes", "r2,r3,r4", *FAST]
    code, out, _ = run(capsys, *args, "--tol", "1e-2")
    assert code == 0 and out.rstrip().endswith("PASS")
    code, out, _ = run(capsys, *args, "--tol", "1e-30")
    assert code == 1 and out.rstrip().endswith("FAIL")


def test_verify_json(capsys):
    code, out, _ = run(capsys, "verify", "--d", "5", "--u", "2", "--routes", "r2,r4", "--format", "json",
                       "--tol", "1e-2", *FAST)
    report = json.loads(out)
    assert code == 0 and report["passed"] and report["g"] == 3
    assert set(report["routes"]) == {"r2", "r4"}
    assert report["routes"]["r4"]["degenerate_n"] == [4, 7]


def test_verify_calibration_failure_exit_2(capsys):
    clear_caches()
    code, _, err = run(capsys, "verify", "--d", "5", "--u", "2", "--routes", "r1,r2", "--tol", "0",
                       "--precision", "128", "--n-max", "7")
    assert code == 2 and "inconclusive" in err


def test_env_overrides(capsys, monkeypatch):
    monkeypatch.setenv("SHINTANI_PRECISION", "96")
    monkeypatch.setenv("SHINTANI_N_MAX", "6")
    monkeypatch.setenv("SHINTANI_FORMAT", "json")
    code, out, _ = run(capsys, "invariant", "--d", "5", "--u", "2", "--routes", "r2")
    records = rec.from_json(out)
    assert code == 0 and {r.precision_bits for r in records} == {96}
    assert max(r.n for r in records if isinstance(r.n, int)) == 6


def test_scan_cache_and_skip(capsys, tmp_path):
    cache = tmp_path / "scan.jsonl"
    args = ["scan", "--d", "5", "--norm-max", "5", "--routes", "r2", "--cache", str(cache), *FAST]
    code, out, _ = run(capsys, *args)
    assert code == 0
    lines = out.splitlines()
    assert lines and len(cache.read_text().splitlines()) == len(lines)
    first = [json.loads(line) for line in lines]
    assert any((r["u"], r["v"], r["g"]) == (2, 0, 3) for r in first)
    assert all(2 <= r["norm"] <= 5 for r in first)
    code, out, _ = run(capsys, *args)
    assert code == 0 and out == ""
    assert len(cache.read_text().splitlines()) == len(lines)


def test_scan_empty_range(capsys):
    # No element of Z[(1+sqrt 5)/2] of the form u + v sqrt 5 has norm 2 or 3.
    code, out, _ = run(capsys, "scan", "--d", "5", "--norm-max", "3")
    assert code == 0 and out == ""
    assert run(capsys, "scan", "--d", "5", "--norm-max", "1")[0] == 2


def test_dilog_command(capsys):
    code, out, _ = run(capsys, "dilog", "cyclic", "--m", "1", "--n", "2")
    assert code == 0 and out.startswith("1.41421356237309504880168872420969807856967187537694")
    code, out, _ = run(capsys, "dilog", "cyclic", "--m", "1", "--n", "2", "--x", "1")
    assert out == "0\n"
    code, _, err = run(capsys, "dilog", "cyclic-complex", "--m", "1", "--n", "2", "--x", "1")
    assert code == 2 and "degenerate" in err
    code, out, _ = run(capsys, "dilog", "qpoch", "--x", "1", "--tau-im", "1")
    assert code == 0 and out.startswith("9.98129")
    code, out, _ = run(capsys, "dilog", "double-sine", "--omega", "eps", "--d", "5", "--z", "1/2",
                       "--precision", "128")
    assert code == 0 and float(out) > 0
    assert run(capsys, "dilog", "double-sine", "--omega", "1", "--z", "3")[0] == 2
