import csv
import io
import json
import subprocess
import sys

import pytest

from modindex.cli import main
from modindex.ops import OPS
from modindex.report import CSV_COLUMNS

from conftest import SCENARIOS


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_chemical_potential_scenario(capsys):
    code, out, _ = _run(capsys, "run", str(SCENARIOS / "chemical_potential.json"))
    assert code == 0
    rep = json.loads(out)
    asym = next(c for c in rep["checks"] if c["id"] == "mu-asymmetry")
    assert asym["residuals"]["asymmetry"] < 1e-10


def test_double_s3_table_row(capsys):
    code, out, _ = _run(capsys, "run", str(SCENARIOS / "double_s3.json"), "--format", "md")
    assert code == 0
    assert "D(S_3): Σd² = 36 = |G|²" in out


def test_malformed_json_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_bytes(b'{"scenario_version": 1,\n "checks": [}')
    code, out, err = _run(capsys, "run", str(bad))
    assert code == 2 and out == ""
    assert "byte 36" in err and "malformed JSON" in err


def test_validation_error_exit_code(tmp_path, capsys):
    f = tmp_path / "s.json"
    f.write_text(json.dumps({"scenario_version": 1, "checks": [{"id": "a", "op": "qsys.nope"}]}))
    code, _, err = _run(capsys, "verify", str(f))
    assert code == 2 and "checks[0].op" in err


def test_missing_file_and_usage_errors(tmp_path, capsys):
    assert _run(capsys, "run", str(tmp_path / "absent.json"))[0] == 2
    assert _run(capsys, "run", str(SCENARIOS / "empty.json"), "--format", "xml")[0] == 2
    assert _run(capsys, "run", str(SCENARIOS / "empty.json"), "--tolerance", "-1")[0] == 2
    assert _run(capsys)[0] == 2


def test_failing_check_exit_code(tmp_path, capsys):
    f = tmp_path / "s.json"
    f.write_text(json.dumps({"scenario_version": 1, "systems": {"R": {"type": "fusion_ring", "builtin": "fibonacci"}},
                             "checks": [{"id": "wrong", "op": "category.pf_dimension",
                                         "args": {"ring": "R", "label": "tau", "expected": 2}}]}))
    code, out, _ = _run(capsys, "run", str(f))
    rep = json.loads(out)
    assert code == 1 and rep["summary"]["failed"] == 1


def test_check_error_is_reported_not_raised(tmp_path, capsys):
    f = tmp_path / "s.json"
    f.write_text(json.dumps({"scenario_version": 1, "systems": {"S": {"type": "rep", "builtin": "S3.std"},
                                                                    "T": {"type": "rep", "builtin": "Q8.spin"}},
                             "checks": [{"id": "x", "op": "category.frobenius_map", "args": {"rep1": "S", "rep2": "T"}}]}))
    code, out, _ = _run(capsys, "run", str(f))
    c = json.loads(out)["checks"][0]
    assert code == 1 and c["status"] == "error" and c["error"]


def test_verify_prints_nothing(capsys):
    code, out, err = _run(capsys, "verify", str(SCENARIOS / "double_s3.json"))
    assert code == 0 and out == "" and err == ""


def test_list_checks(capsys):
    code, out, _ = _run(capsys, "list-checks")
    names = [line.split("\t")[0] for line in out.splitlines()]
    assert code == 0 and names == sorted(OPS)


@pytest.mark.parametrize("fmt", ["json", "md", "csv"])
def test_empty_scenario_all_formats(fmt, capsys):
    code, out, _ = _run(capsys, "run", str(SCENARIOS / "empty.json"), "--format", fmt)
    assert code == 0 and out
    if fmt == "json":
        rep = json.loads(out)
        assert rep["report_version"] == 1 and rep["checks"] == [] and rep["summary"]["total"] == 0
    if fmt == "csv":
        assert out.strip().split(",") == list(CSV_COLUMNS)


def test_csv_has_seven_columns(capsys):
    _, out, _ = _run(capsys, "run", str(SCENARIOS / "category.json"), "--format", "csv", "--timings")
    rows = list(csv.reader(io.StringIO(out)))
    assert len(rows) > 2 and all(len(r) == 7 for r in rows)
    assert all(r[6] for r in rows[1:])


def test_markdown_residuals_match_json(tmp_path, capsys):
    path = str(SCENARIOS / "charge.json")
    _run(capsys, "run", path, "--out", str(tmp_path / "r.json"))
    _run(capsys, "run", path, "--format", "md", "--out", str(tmp_path / "r.md"))
    rep = json.loads((tmp_path / "r.json").read_text())
    md = (tmp_path / "r.md").read_text().splitlines()
    rows = {}
    for line in md:
        cells = [c.strip() for c in line.strip("|").split(" | ")]
        if len(cells) == 6 and cells[0] in {c["id"] for c in rep["checks"]}:
            rows[cells[0]] = cells
    assert len(rows) == len(rep["checks"])
    for c in rep["checks"]:
        cells = rows[c["id"]]
        assert float(cells[3]) == float(f"{c['max_residual']:.3e}")
        assert float(cells[4]) == float(f"{c['tolerance']:.3e}")
        assert cells[5] == c["status"]


def test_seed_override_changes_random_checks(capsys):
    path = str(SCENARIOS / "qsys.json")
    _, a, _ = _run(capsys, "run", path)
    _, b, _ = _run(capsys, "run", path, "--seed", "99")
    assert json.loads(b)["seed"] == 99 and a != b


def test_tolerance_override_precedence(capsys):
    _, out, _ = _run(capsys, "run", str(SCENARIOS / "cocycle.json"), "--tolerance", "1e-7")
    tol = {c["id"]: c["tolerance"] for c in json.loads(out)["checks"]}
    assert tol["connes-modular"] == 1e-7
    assert tol["dimension-scaling"] == 1e-10  # set on the check itself


def test_jobs_keep_declaration_order(capsys, monkeypatch):
    path = str(SCENARIOS / "category.json")
    _, serial, _ = _run(capsys, "run", path)
    _, parallel, _ = _run(capsys, "run", path, "--jobs", "4")
    monkeypatch.setenv("MODINDEX_JOBS", "3")
    _, env, _ = _run(capsys, "run", path)
    assert serial == parallel == env


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "modindex", "verify", str(SCENARIOS / "double_s3.json")],
                          capture_output=True)
    assert proc.returncode == 0
