import csv
import io
import json
import subprocess
import sys

import pytest

from polyhgm.cli import TableSpec, build_table, format_csv, main, table_row, thread_count
from polyhgm.families import orthant, simplex_p


@pytest.fixture
def p2_file(tmp_path):
    path = tmp_path / "p2.json"
    path.write_text(simplex_p(2).to_json())
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_prob_p2(capsys, p2_file):
    code, out, _ = run(capsys, "prob", p2_file)
    assert code == 0
    doc = json.loads(out)
    assert doc["probability"] == pytest.approx(0.285205, abs=5e-4)
    assert doc["method"] == "bounded"
    assert len(doc["g_final"]) == 7


def test_prob_quiet_orthant_csv(capsys, tmp_path):
    path = tmp_path / "orthant.csv"
    path.write_text(orthant(2).to_csv())
    code, out, _ = run(capsys, "prob", path, "--method", "cone", "--quiet")
    assert code == 0
    assert float(out) == pytest.approx(0.25, abs=1e-12)


@pytest.mark.parametrize(
    "content, name",
    [("{not json", "bad.json"), ('{"a": [[1, 0]], "b": [1]}', "shape.json"), ("1,2\nx,y\n", "bad.csv")],
)
def test_prob_malformed_exits_2(capsys, tmp_path, content, name):
    path = tmp_path / name
    path.write_text(content)
    code, out, err = run(capsys, "prob", path)
    assert code == 2
    assert out == ""
    assert "error" in json.loads(err)


def test_prob_missing_file_exits_2(capsys, tmp_path):
    assert run(capsys, "prob", tmp_path / "nope.json")[0] == 2


def test_prob_no_method_exits_3(capsys, tmp_path):
    path = tmp_path / "orthant.json"
    path.write_text(orthant(2).to_json())
    code, _, err = run(capsys, "prob", path, "--method", "bounded")
    assert code == 3
    assert json.loads(err)["error"] == "UnboundedPolyhedron"


def test_prob_numerical_failure_exits_4(capsys, p2_file):
    code, _, err = run(capsys, "prob", p2_file, "--max-steps", "2")
    assert code == 4
    assert json.loads(err)["error"] == "MaxStepsExceeded"


def test_table_spec_guards():
    with pytest.raises(ValueError):
        TableSpec("P", 1, 3)
    with pytest.raises(ValueError):
        TableSpec("P", 4, 3)
    with pytest.raises(ValueError):
        TableSpec("P", 2, 13)
    with pytest.raises(ValueError):
        TableSpec("X", 2, 3)
    with pytest.raises(ValueError):
        TableSpec("P", 2, 3, methods=("hgm", "spline"))


def test_table_bad_range_exits_2(capsys):
    assert run(capsys, "table", "--family", "P", "--d-min", "5", "--d-max", "3")[0] == 2


def test_table_markdown_layout(capsys):
    code, out, _ = run(capsys, "table", "--family", "P", "--d-min", "2", "--d-max", "3", "--samples", "1e4")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("| d | HGM |")
    assert lines[2].startswith("| 2 | 0.2852046 |")
    assert len(lines) == 4


def test_table_is_deterministic_and_csv_round_trips(capsys):
    argv = ["table", "--family", "Q", "--d-min", "2", "--d-max", "4", "--samples", "20000",
            "--seed", "9", "--format", "csv"]
    first = run(capsys, *argv)[1]
    second = run(capsys, *argv)[1]
    strip_time = [{k: v for k, v in r.items() if k != "hgm_time_s"} for r in csv.DictReader(io.StringIO(first))]
    again = [{k: v for k, v in r.items() if k != "hgm_time_s"} for r in csv.DictReader(io.StringIO(second))]
    assert strip_time == again
    spec = TableSpec("Q", 2, 4, mc_samples=20000, seed=9)
    for rec in strip_time:
        row = table_row(spec, int(rec["d"]))
        assert float(rec["hgm"]) == row.hgm
        assert float(rec["mc"]) == row.mc
        assert float(rec["mc_std_error"]) == row.mc_std_error


def test_table_failed_row_is_flagged():
    spec = TableSpec("P", 2, 4, methods=("hgm", "quad"))
    rows = build_table(spec, workers=1)
    assert [r.d for r in rows] == [2, 3, 4]
    assert rows[2].quad is None and "quad:DimensionTooLarge" in rows[2].flags
    assert rows[2].hgm is not None
    assert "quad:DimensionTooLarge" in format_csv(rows)


def test_thread_count(monkeypatch):
    monkeypatch.delenv("HGM_THREADS", raising=False)
    assert thread_count() == 1
    monkeypatch.setenv("HGM_THREADS", "0")
    assert thread_count() >= 1
    monkeypatch.setenv("HGM_THREADS", "3")
    assert thread_count() == 3


def test_parallel_rows_match_serial_rows():
    spec = TableSpec("C", 2, 4, mc_samples=5000, seed=1)
    serial = build_table(spec, workers=1)
    parallel = build_table(spec, workers=2)
    for s, p in zip(serial, parallel):
        assert (s.d, s.hgm, s.mc, s.mc_std_error) == (p.d, p.hgm, p.mc, p.mc_std_error)


def test_check_small_run(capsys):
    code, out, _ = run(capsys, "check", "--d-max", "3", "--samples", "1e5")
    assert code == 0
    assert "FAIL" not in out
    assert out.strip().splitlines()[-1].startswith("36/36 checks passed")


def test_check_with_perturbation(capsys):
    code, out, _ = run(capsys, "check", "--d-max", "3", "--perturb", "1e-3", "--samples", "1e5")
    assert code == 0
    assert out.count("identity") == 12


def test_module_entry_point(p2_file):
    proc = subprocess.run([sys.executable, "-m", "polyhgm", "prob", str(p2_file), "--quiet"],
                          capture_output=True, text=True, check=True)
    assert float(proc.stdout) == pytest.approx(0.285205, abs=5e-4)
