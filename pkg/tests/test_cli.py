import csv
import io
import json

import pytest

from mwmpc.cli import build_parser, main


def _run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_verify_mw_l8(capsys):
    code, out = _run(capsys, "verify", "mw", "--l", "8")
    rep = json.loads(out.out)
    assert code == 0 and rep["failures"] == 0 and rep["cases"] > 0


def test_verify_div(capsys):
    code, out = _run(capsys, "verify", "div", "--l", "10", "--d", "7")
    assert code == 0 and json.loads(out.out)["failures"] == 0


def test_verify_rexp_reports_max_ulp(capsys):
    code, out = _run(capsys, "verify", "rexp", "--f", "12")
    rep = json.loads(out.out)
    assert code == 0
    assert rep["cases"] == 8 * 4096
    assert rep["max_dev"] <= 1.435


def test_verify_fails_with_tight_budget(capsys):
    code, out = _run(capsys, "verify", "sin", "--batch", "256", "--max-ulp", "0.1")
    assert code == 1
    assert json.loads(out.out)["status"] == "fail"


def test_verify_config_error(capsys):
    code, out = _run(capsys, "verify", "trunc", "--l", "10", "--k", "12")
    assert code == 2 and "error" in out.err


@pytest.mark.parametrize("proto", ["comp", "drelu", "sext", "crossterm", "exp", "mwconv", "softmax"])
def test_verify_randomized(capsys, proto):
    extra = ["--rows", "2", "--n", "16"] if proto == "softmax" else ["--batch", "64"]
    code, out = _run(capsys, "verify", proto, *extra)
    assert code == 0, out.out


def test_bench_mw_rows(capsys):
    code, out = _run(capsys, "bench", "mw", "--l", "37", "--lp", "37", "--B", "0.5", "0.9999", "1", "--batch", "16")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out.out)))
    assert [int(r["modeled_bits"]) for r in rows[:1]] == [165]
    assert int(rows[1]["modeled_bits"]) <= 2153
    assert int(rows[2]["modeled_bits"]) == 5419
    assert "OPEN DISCREPANCY" in rows[2]["note"] and "5254" in rows[2]["note"]


def test_bench_rexp_budget_and_extrapolation(capsys):
    code, out = _run(
        capsys, "bench", "rexp", "--l", "16", "--f", "12", "--batch", "64", "--extrapolate", "1048576", "--format", "json"
    )
    assert code == 0
    rows = json.loads(out.out)["rows"]
    assert rows[0]["modeled_bits"] <= 28 * 128 + 2 * 16 + 4 * 12 + 897
    assert rows[0]["within_budget"] is True
    assert rows[0]["runs"] == 1 << 14 and rows[0]["extrapolated"] is False
    assert rows[1]["extrapolated"] is True and rows[1]["runs"] == 1 << 20
    assert rows[1]["aggregate_mb"] == pytest.approx(rows[0]["aggregate_mb"] * 64)


def test_bench_is_byte_identical(capsys, tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        main(["bench", "sin", "--batch", "128", "--seed", "5", "--out", str(p)])
    assert paths[0].read_bytes() == paths[1].read_bytes()
    header = paths[0].read_text().splitlines()[0]
    assert header.startswith("protocol,params,modeled_bits")


def test_seed_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("MWMPC_SEED", "17")
    _, out = _run(capsys, "bench", "mw", "--batch", "8", "--format", "json")
    assert '\\"seed\\": 17' in out.out


def test_absolute_bound(capsys):
    _, out = _run(capsys, "bench", "mw", "--l", "10", "--B", "100", "--batch", "8", "--format", "json")
    params = json.loads(json.loads(out.out)["rows"][0]["params"])
    assert params["B_abs"] == 100


def test_parser_rejects_unknown_protocol():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["verify", "tan"])
