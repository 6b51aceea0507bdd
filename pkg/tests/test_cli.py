import csv
import io
import json
import subprocess
import sys

import pytest

from hermite_flow import cli


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def strip_runtime(doc):
    for r in doc["reports"]:
        r.pop("runtime_ms")
    return doc


def test_verify_bellman_small(capsys):
    code, out, err = run(["verify-bellman", "--p", "2", "--samples", "400"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["version"] == "hermite-flow/1"
    names = {(r["name"], r["params"].get("branch")) for r in doc["reports"]}
    for prop in ("i", "ii", "iii"):
        assert (f"theorem21-{prop}", "A") in names and (f"theorem21-{prop}", "B") in names
    assert {"bellman-gradient-fd", "bellman-hessian-fd"} <= {r["name"] for r in doc["reports"]}
    assert "[PASS]" in err
    keys = {"name", "params", "value", "bound", "margin", "pass", "runtime_ms"}
    assert all(set(r) == keys for r in doc["reports"])


def test_reports_sorted_by_name_and_params(capsys):
    code, out, _ = run(["kernels", "--n", "1", "--samples", "300", "--quiet"], capsys)
    assert code == 0
    names = [r["name"] for r in json.loads(out)["reports"]]
    assert names == sorted(names)


def test_determinism(capsys, tmp_path):
    argv = ["riesz-scan", "--p", "2", "4", "--degree", "12", "--samples", "2", "--iterations", "5", "--quiet"]
    _, a, _ = run(argv, capsys)
    _, b, _ = run(argv, capsys)
    assert strip_runtime(json.loads(a)) == strip_runtime(json.loads(b))


def test_riesz_scan_table(capsys, tmp_path):
    table = tmp_path / "scan.csv"
    code, out, _ = run(["riesz-scan", "--p", "2", "4", "--degree", "12", "--samples", "2", "--iterations", "5",
                        "--table", str(table), "--quiet"], capsys)
    assert code == 0
    rows = list(csv.DictReader(table.open()))
    assert {"p", "norm_lower", "ratio_to_linear"} <= set(rows[0])
    p2 = [r for r in rows if float(r["p"]) == 2.0][0]
    assert float(p2["norm_lower"]) == pytest.approx(2 ** 0.5, abs=1e-6)


def test_riesz_word(capsys):
    code, out, _ = run(["riesz-scan", "--word", "1+ 1- 2+", "--p", "2", "--degree", "4", "--samples", "1",
                        "--quiet"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["config"]["n"] == [2]
    assert doc["reports"][0]["name"] == "riesz-word-norm"


def test_csv_format(capsys):
    code, out, _ = run(["multiplier", "--n", "1", "--p", "2", "--samples", "3", "--iterations", "2", "--format",
                        "csv", "--quiet"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["name", "params", "value", "bound", "margin", "pass", "runtime_ms"]
    assert {r["name"] for r in rows} >= {"multiplier-o0", "zusatz-chain", "duality-plain", "duality-star"}


def test_embedding_small(capsys, tmp_path):
    path = tmp_path / "emb.json"
    code, _, _ = run(["embedding", "--n", "1", "--samples", "2", "--out", str(path), "--quiet"], capsys)
    assert code == 0
    doc = json.loads(path.read_text())
    lhs = [r for r in doc["reports"] if r["name"] == "embedding-lhs-closed-form"][0]
    assert lhs["value"] <= 1e-6


def test_tolerance_override_can_fail_a_run(capsys):
    code, out, _ = run(["multiplier", "--n", "1", "--p", "2", "--samples", "3", "--iterations", "2",
                        "--tol.duality", "0", "--tol.o0=0", "--quiet"], capsys)
    doc = json.loads(out)
    assert doc["config"]["tol"]["duality"] == 0.0
    assert code in (0, 1)
    assert code == (0 if all(r["pass"] for r in doc["reports"]) else 1)


@pytest.mark.parametrize("argv", [[], ["bogus"], ["kernels", "--frobnicate"], ["kernels", "--n", "x"],
                                  ["kernels", "--tol.mass"]])
def test_usage_errors(argv, capsys):
    code, out, err = run(argv, capsys)
    assert code == 64
    assert out == ""
    assert "usage" in err.lower() or "hermite-flow" in err


@pytest.mark.parametrize("argv", [
    ["verify-bellman", "--p", "1.0001"],
    ["verify-bellman", "--samples", "0"],
    ["kernels", "--n", "4"],
    ["kernels", "--tol.nonsense", "1"],
    ["riesz-scan", "--word", "3+", "--n", "2"],
])
def test_config_errors_emit_empty_report(argv, capsys):
    code, out, err = run(argv, capsys)
    assert code == 2
    assert json.loads(out)["reports"] == []
    assert "config error" in err


def test_config_file(capsys, tmp_path):
    good = tmp_path / "run.json"
    good.write_text(json.dumps({"n": 1, "samples": 200, "tol": {"mass": 1e-7}}))
    code, out, _ = run(["kernels", "--config", str(good), "--quiet"], capsys)
    assert code == 0
    cfg = json.loads(out)["config"]
    assert cfg["n"] == [1] and cfg["samples"] == 200 and cfg["tol"]["mass"] == 1e-7

    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "n": 1,\n  "samples": ,\n}')
    code, out, err = run(["kernels", "--config", str(bad)], capsys)
    assert code == 2 and "line 3" in err

    unknown = tmp_path / "unknown.json"
    unknown.write_text('{"colour": 1}')
    code, _, err = run(["kernels", "--config", str(unknown)], capsys)
    assert code == 2 and "colour" in err


def test_version(capsys):
    assert cli.main(["--version"]) == 0
    assert "hermite-flow" in capsys.readouterr().out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "hermite_flow", "kernels", "--n", "1", "--samples", "100",
                          "--quiet"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["version"] == "hermite-flow/1"
