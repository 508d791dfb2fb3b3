import csv
import io
import json
import subprocess
import sys

import pytest

from pmmdi import keyrate
from pmmdi.cli import main
from pmmdi.keyrate import loss_rate_analytic, plob_bound
from pmmdi.sweep import CSV_COLUMNS


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def parse_fields(text):
    return dict(line.split(None, 1) for line in text.strip().splitlines())


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def test_rate_loss_only_matches_closed_form(capsys):
    code, out, _ = run(["rate", "--loss-only", "--L", "0", "--mu", "0.1146"], capsys)
    assert code == 0
    f = parse_fields(out)
    assert float(f["R_inf"]) == pytest.approx(loss_rate_analytic(1.0, 0.1146), rel=1e-9)
    assert f["mu_optimized"] == "false" and f["plob"] == "inf"


def test_rate_optimizes_when_mu_missing(capsys, tmp_path):
    out_json = tmp_path / "rate.json"
    code, out, _ = run(["rate", "--L", "300", "--out", str(out_json)], capsys)
    assert code == 0
    f = parse_fields(out)
    assert f["mu_optimized"] == "true"
    assert 0.01 < float(f["mu"]) < 0.5
    assert float(f["R_inf"]) > float(f["plob"]) and f["beats_bound"] == "true"
    doc = json.loads(out_json.read_text())
    assert doc["model"]["eta_d"] == 0.145 and doc["R_inf"] == pytest.approx(float(f["R_inf"]), rel=1e-9)


def test_bound(capsys):
    code, out, _ = run(["bound", "--L", "50"], capsys)
    assert code == 0
    assert float(parse_fields(out)["plob"]) == pytest.approx(plob_bound(0.1), rel=1e-9)


def test_config_errors_exit_2(capsys, tmp_path, monkeypatch):
    def forbidden(*a, **k):
        raise AssertionError("numeric code reached")

    monkeypatch.setattr(keyrate, "total_rate", forbidden)
    for doc in ({"model": {"bogus": 1}}, {"extra": {}}, {"model": {"V": 2.0}}, {"sim": {"rounds": 0}}):
        code, _, err = run(["rate", "--config", write_json(tmp_path / "c.json", doc)], capsys)
        assert code == 2 and "invalid config" in err
    (tmp_path / "bad.json").write_text("{not json")
    assert run(["sweep", "--config", str(tmp_path / "bad.json")], capsys)[0] == 2


def test_help_exits_cleanly(monkeypatch):
    monkeypatch.setattr(keyrate, "total_rate", lambda *a: (_ for _ in ()).throw(AssertionError()))
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--help"])
    assert exc.value.code == 0
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_io_errors_exit_3(capsys, tmp_path):
    assert run(["rate", "--config", str(tmp_path / "missing.json")], capsys)[0] == 3
    cfg = write_json(tmp_path / "c.json", {"sweep": {"L_start": 0, "L_end": 0}})
    code, _, err = run(["sweep", "--config", cfg, "--out", str(tmp_path / "no" / "dir" / "x.csv")], capsys)
    assert code == 3 and "cannot write" in err


def test_empty_sweep_header_only(capsys, tmp_path):
    cfg = write_json(tmp_path / "c.json", {"sweep": {"L_start": 10, "L_end": 0}})
    code, out, _ = run(["sweep", "--config", cfg], capsys)
    assert code == 0 and out == ",".join(CSV_COLUMNS) + "\n"


def test_sweep_csv_and_svg(capsys, tmp_path):
    cfg = write_json(tmp_path / "c.json", {"sweep": {"L_start": 0, "L_end": 300, "L_step": 10}})
    csv_path, svg_path = tmp_path / "s.csv", tmp_path / "s.svg"
    code, _, _ = run(["sweep", "--loss-only", "--config", cfg, "--out", str(csv_path), "--svg", str(svg_path)], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(csv_path.read_text())))
    assert len(rows) == 31 and tuple(rows[0]) == CSV_COLUMNS
    first = next(float(r["L_km"]) for r in rows if r["beats_bound"] == "true")
    assert first == 130.0
    svg = svg_path.read_text()
    assert svg.startswith("<svg") and svg.count("<polyline") >= 2 and "repeaterless bound" in svg
    # bitwise reproducible, serial or parallel
    again = tmp_path / "t.csv"
    run(["sweep", "--loss-only", "--config", cfg, "--out", str(again), "--workers", "2"], capsys)
    assert again.read_bytes() == csv_path.read_bytes()


def test_simulate_reproducible_and_checked(capsys, tmp_path):
    args = ["simulate", "--loss-only", "--L", "100", "--mu", "0.1146", "--rounds", "1000000", "--seed", "2", "--check"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(args + ["--out", str(a)], capsys)[0] == 0
    assert run(args + ["--out", str(b)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert doc["passes_check"] and doc["config"]["seed"] == 2


def test_simulate_negative_control_exit_4(capsys, tmp_path):
    args = ["simulate", "--loss-only", "--L", "100", "--mu", "0.1146", "--rounds", "1000000", "--seed", "2", "--check"]
    code, _, err = run(args + ["--expect", "V=0.7", "--out", str(tmp_path / "r.json")], capsys)
    assert code == 4 and "check failed" in err
    assert run(args + ["--expect", "nope=1"], capsys)[0] == 2
    assert run(args + ["--expect", "V=abc"], capsys)[0] == 2


def test_simulate_config_sections(capsys, tmp_path):
    cfg = write_json(
        tmp_path / "c.json",
        {"model": {"L": 50, "mu": 0.2}, "sim": {"rounds": 20000, "seed": 7, "test_grid": [[0.0, 1], [0.5, 2]]}},
    )
    code, out, _ = run(["simulate", "--config", cfg], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["rounds"] == 20000 and doc["config"]["test_grid"] == [[0.0, 1], [0.5, 2]]
    assert doc["config"]["model"]["mu"] == 0.2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "pmmdi", "bound", "--L", "100"], capture_output=True, text=True)
    assert res.returncode == 0 and "plob" in res.stdout
