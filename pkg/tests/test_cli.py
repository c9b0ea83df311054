"""CLI surface: exit codes, determinism, fixture regeneration."""

import json
import subprocess
import sys

import pytest

from mmsplab import fixtures as fx

BUNDLE = "bundle.json"
STRUCT = "structure.json"


@pytest.fixture()
def ex1_files(tmp_path):
    ex = fx.example1()
    b = tmp_path / BUNDLE
    s = tmp_path / STRUCT
    b.write_text(json.dumps(ex.bundle.to_json()))
    s.write_text(json.dumps(ex.access.to_json()))
    return str(b), str(s)


def run_cli(*args):
    r = subprocess.run([sys.executable, "-m", "mmsplab.cli", *args],
                       capture_output=True, text=True)
    return r.returncode, r.stdout, r.stderr


def test_verify_ok(ex1_files):
    rc, out, _ = run_cli("verify", *ex1_files)
    assert rc == 0
    assert json.loads(out)["ok"]


def test_verify_counterexample(tmp_path, ex1_files):
    bpath, spath = ex1_files
    fs = json.loads(open(spath).read())
    fs["reject"].append([1, 3])
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(fs))
    rc, out, _ = run_cli("verify", bpath, str(bad))
    assert rc == 1
    rep = json.loads(out)
    failing = [c for c in rep["checks"] if not c["ok"]]
    assert failing and failing[0]["detail"]["set"] == [1, 3, 4, 6]


def test_verify_malformed_json(tmp_path, ex1_files):
    bad = tmp_path / "garbage.json"
    bad.write_text("{not json")
    rc, _, _ = run_cli("verify", str(bad), ex1_files[1])
    assert rc == 2


def test_rate_command():
    rc, out, _ = run_cli("rate", "eass", "2", "1", "3")
    assert rc == 0 and json.loads(out)["rate"] == "2/3"
    rc, _, _ = run_cli("rate", "qqss", "2", "1", "5")
    assert rc == 1


def test_construct_roundtrip(tmp_path, ex1_files):
    out_path = tmp_path / "cq.json"
    rc, _, _ = run_cli("construct", "cq", "2", "1", "3", "3",
                       "--out", str(out_path))
    assert rc == 0
    fs = tmp_path / "thresh.json"
    fs.write_text(json.dumps({"n": 3, "accept": {"threshold": 2},
                              "reject": {"threshold": 1}}))
    rc, out, _ = run_cli("verify", str(out_path), str(fs))
    assert rc == 0


def test_construct_out_of_range():
    rc, out, _ = run_cli("construct", "qq", "2", "1", "5")
    assert rc == 1
    assert "bound violated" in out


def test_audit_and_exit_codes(ex1_files):
    rc, out, _ = run_cli("audit", "eass", *ex1_files)
    assert rc == 0 and json.loads(out)["ok"]


def test_simulate_deterministic(ex1_files):
    args = ("simulate", "--protocol", "eass", "--bundle", ex1_files[0],
            "--structure", ex1_files[1], "--message", "1,2", "--seed", "5")
    rc1, out1, _ = run_cli(*args)
    rc2, out2, _ = run_cli(*args)
    assert rc1 == rc2 == 0
    assert out1 == out2  # byte-identical reports for identical inputs/seed


def test_crosscheck(ex1_files):
    rc, out, _ = run_cli("crosscheck", *ex1_files)
    assert rc == 0 and json.loads(out)["ok"]


def test_fixtures_regenerate_bit_exact():
    rc1, out1, _ = run_cli("fixtures")
    rc2, out2, _ = run_cli("fixtures")
    assert rc1 == rc2 == 0
    assert out1 == out2
    rep = json.loads(out1)
    ex1 = fx.example1()
    assert rep["fixtures"]["example1"]["bundle"] == json.loads(
        json.dumps(ex1.bundle.to_json()))
