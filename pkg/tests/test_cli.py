from __future__ import annotations

import io
import json

import pytest

from sawbound.cli import THREADS_ENV, default_threads, run


def call(*argv):
    out = io.StringIO()
    code = run(list(argv), stdout=out)
    return code, out.getvalue()


def test_lattices_lists_builtins():
    code, out = call("lattices")
    assert code == 0
    assert "hexagonal,xy-equal,2,2,x z,2" in out
    code, out = call("lattices", "--json")
    assert {r["name"] for r in json.loads(out)} == {"square", "cubic", "triangular", "hexagonal"}


def test_bound_square_isotropic():
    code, out = call("bound", "--lattice", "square", "--scheme", "general", "--mode", "saw",
                     "-m", "1", "-n", "2", "-z", "1,1")
    assert code == 0
    header, row = out.splitlines()
    assert header == "bound,bracket_low,bracket_high"
    value, lo, hi = map(float, row.split(","))
    assert value == pytest.approx(3.0, abs=1e-12) and lo <= 3.0 <= hi


def test_usage_errors(capsys):
    assert call("bound", "-m", "2", "-n", "1", "-z", "1,1")[0] == 2
    assert call("bound", "-z", "1,1,1")[0] == 2
    assert call("bound", "--lattice", "kagome", "-z", "1,1")[0] == 2
    assert call("bound", "-z", "a,b")[0] == 2
    assert call("frobnicate")[0] == 2
    assert call()[0] == 2
    assert "usage" in capsys.readouterr().err


def test_domain_errors(tmp_path):
    assert call("bound", "-z", "1,-1")[0] == 1
    assert call("bound", "--lattice", "hexagonal", "-m", "0", "-n", "1", "-z", "1,1,1")[0] == 1
    bad = tmp_path / "bad.mat"
    bad.write_text("not a matrix\n")
    assert call("bound", "--matrix", str(bad), "-z", "1,1")[0] == 1
    assert call("matrix", "info", str(tmp_path / "missing.mat"))[0] == 1


def test_matrix_build_info_and_bound(tmp_path):
    path = tmp_path / "g.mat"
    assert call("matrix", "build", "--mode", "sat", "-m", "1", "-n", "2", "-o", str(path))[0] == 0
    code, out = call("matrix", "info", str(path))
    assert code == 0 and "t=2" in out.splitlines()
    info = json.loads(call("matrix", "info", str(path), "--json")[1])
    assert info["t"] == 2 and info["mode"] == "sat"
    from_file = call("bound", "--matrix", str(path), "-z", "0.4,0.6")[1]
    direct = call("bound", "--mode", "sat", "-m", "1", "-n", "2", "-z", "0.4,0.6")[1]
    assert from_file == direct


def test_bound_json():
    code, out = call("bound", "--lattice", "hexagonal", "--scheme", "xy-equal", "-z", "1,1", "--json")
    data = json.loads(out)
    assert code == 0 and data["value"] == pytest.approx(2.0)
    assert data["lower"] <= data["value"] <= data["upper"]


def test_scan_outputs_are_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert call("scan", "grid", "--samples", "12", "-o", str(path))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 145
    f1, f2 = tmp_path / "f1.csv", tmp_path / "f2.csv"
    for path in (f1, f2):
        assert call("--threads", "2", "scan", "frontier", "--rays", "64", "-o", str(path))[0] == 0
    assert f1.read_bytes() == f2.read_bytes()
    assert len(f1.read_text().splitlines()) == 65


def test_domain_command():
    code, out = call("domain", "-x", "0.3,0.3")
    assert code == 0 and out.splitlines()[1].startswith("inside,")
    assert call("domain", "-x", "0.5,0.5")[1].splitlines()[1].startswith("outside,")


def test_validate_command():
    code, out = call("validate", "--lattice", "triangular", "--scheme", "xz", "-n", "3", "--trials", "20")
    assert code == 0 and "closed-form table3/saw/1-3,yes" in out
    assert call("validate", "-n", "4", "--row", "table1/saw/1-2", "--trials", "5")[0] == 1


def test_walks_commands(tmp_path):
    code, out = call("walks", "count", "-n", "4")
    assert code == 0 and out.splitlines()[1:] == ["0,1,4", "0,2,12", "0,3,36", "0,4,100"]
    code, out = call("walks", "count", "--lattice", "hexagonal", "-n", "2", "-z", "1,1,1", "--json")
    assert [r["count"] for r in json.loads(out)] == [3, 6, 3, 6]
    path = tmp_path / "w.txt"
    assert call("walks", "dump", "-n", "2", "--mode", "sat", "-o", str(path))[0] == 0
    assert len(path.read_text().splitlines()) == 12
    assert call("walks", "count", "-n", "2", "--class", "3")[0] == 2


def test_kp_commands(tmp_path):
    cert = tmp_path / "cert.txt"
    code, out = call("kp", "check", "--epsilon", "0.01", "--alpha", "0.5", "--kpT", "0.1", "-o", str(cert))
    assert code == 0 and "verdict: True" in out
    assert cert.read_text() in out
    code, out = call("kp", "check", "--epsilon", "0.1", "--alpha", "0.4", "--kpT", "0.1", "--json")
    assert code == 1 and json.loads(out)["verdict"] is False
    code, out = call("kp", "epsilon0", "--f", "0.5", "--kpT", "0.1", "--iterations", "8")
    assert code == 0 and float(out.splitlines()[0].split(": ")[1]) > 0
    assert call("kp", "epsilon0", "--f", "1.0", "--kpT", "0.1")[0] == 1


def test_threads_env(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert default_threads() == 3
    monkeypatch.setenv(THREADS_ENV, "zero")
    assert call("lattices")[0] == 2
    monkeypatch.delenv(THREADS_ENV)
    assert default_threads() >= 1
    assert call("--threads", "0", "lattices")[0] == 2
