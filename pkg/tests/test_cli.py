import io
import json

import pytest

from covest import __version__, cli
from covest.io import csv_body


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run(argv, out, err)
    return code, out.getvalue(), err.getvalue()


def csv_rows(text):
    lines = csv_body(text).splitlines()
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:]]


def test_theorem3_gaussian():
    code, out, _ = run(["theorem3", "--preset", "gaussian", "--sigma", "1", "--n", "1,2,4,8"])
    assert code == 0
    rows = csv_rows(out)
    assert [int(row["n"]) for row in rows] == [1, 2, 4, 8]
    assert all(abs(float(row["scaled"]) - 0.25) < 1e-4 for row in rows)


def test_metadata_carries_config_and_version():
    code, out, _ = run(["theorem3", "--n", "1,2"])
    meta = {line[2:].split(": ", 1)[0]: line[2:].split(": ", 1)[1] for line in out.splitlines() if line.startswith("#")}
    assert meta["version"] == __version__
    assert json.loads(meta["config"])["n"] == [1, 2]
    assert "timestamp" in meta
    _, quiet, _ = run(["theorem3", "--n", "1,2", "--no-meta"])
    assert "timestamp" not in quiet and "# version:" in quiet


@pytest.mark.parametrize("argv", [["--bogus"], ["theorem3", "--bogus"], ["frobnicate"], [],
                                  ["theorem3", "--grid", "1,2"], ["state", "--format", "xml"]])
def test_usage_errors_exit_2(argv):
    code, out, err = run(argv)
    assert code == 2 and out == ""


def test_usage_error_prints_usage(capsys):
    assert cli.run(["--bogus"]) == 2
    assert "usage: covest" in capsys.readouterr().err


def test_missing_seed_named():
    code, _, err = run(["pitman-mc", "--trials", "100"])
    assert code == 2 and "seed" in err


def test_config_file_used_and_flags_override(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"preset": "sinc", "a": 1.0, "n": [2], "trials": 100, "seed": 3}))
    code, out, _ = run(["pitman-mc", "--config", str(cfg), "--no-meta"])
    assert code == 0
    config = json.loads(next(line for line in out.splitlines() if line.startswith("# config:"))[len("# config: "):])
    assert config["seed"] == 3 and config["n"] == [2] and config["trials"] == 100
    code, out, _ = run(["pitman-mc", "--config", str(cfg), "--seed", "7", "--no-meta"])
    config = json.loads(next(line for line in out.splitlines() if line.startswith("# config:"))[len("# config: "):])
    assert code == 0 and config["seed"] == 7


@pytest.mark.parametrize("content, key", [({"sigmaa": 1}, "sigmaa"), ({"seed": "x"}, "seed"),
                                          ({"n": []}, "n"), ({"trials": 10}, "seed"),
                                          ({"grid": [1, 2]}, "grid"), ({"preset": "square"}, "preset")])
def test_config_schema_errors_name_the_key(tmp_path, content, key):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps(content))
    code, _, err = run(["theorem3", "--config", str(cfg)])
    assert code == 2 and key in err


def test_state_csv_and_json():
    code, out, _ = run(["state", "--preset", "g", "--grid=-8,8,64", "--no-meta"])
    assert code == 0
    assert csv_body(out).splitlines()[0] == "lambda,re_psi,im_psi,p"
    assert len(csv_body(out).splitlines()) == 65
    code, out, _ = run(["state", "--preset", "g", "--grid=-8,8,64", "--format", "json"])
    doc = json.loads(out)
    assert len(doc["rows"]) == 64 and doc["meta"]["version"] == __version__


def test_state_grid_too_narrow_is_reported():
    code, _, err = run(["state", "--grid=-2,2,64"])
    assert code == 2 and "truncates" in err


def test_optimal_command():
    code, out, _ = run(["optimal", "--preset", "mixture", "--lambdas", "0.5,1"])
    assert code == 0
    rows = csv_rows(out)
    assert [float(row["lambda"]) for row in rows] == [0.5, 1.0]
    assert all(float(row["product"]) >= 0.25 for row in rows)


def test_compare_command():
    code, out, _ = run(["compare", "--preset", "mixture", "--w", "0.3"])
    row = csv_rows(out)[0]
    assert code == 0 and float(row["gap"]) > 1e-4


def test_limitlaw_and_appendix():
    code, out, _ = run(["limitlaw", "--n", "16,64"])
    rows = csv_rows(out)
    assert code == 0 and float(rows[1]["l1_limit_law"]) < float(rows[0]["l1_limit_law"])
    code, out, _ = run(["appendix", "--n", "10,30"])
    doc = json.loads(out)
    assert code == 0 and [row["n"] for row in doc["rows"]] == [10, 30]
    code, _, err = run(["limitlaw", "--preset", "gaussian"])
    assert code == 2 and "preset" in err


def test_out_path(tmp_path):
    target = tmp_path / "sweep.csv"
    code, out, _ = run(["theorem3", "--n", "1", "--out", str(target)])
    assert code == 0 and out == ""
    assert target.read_text().splitlines()[-1].startswith("1,")
    assert b"\r\n" not in target.read_bytes()


def test_verify_suite_summary():
    code, out, _ = run(["verify", "--suite", "core"])
    doc = json.loads(out)
    assert code == 0
    assert doc["meta"]["failed"] == 0 and doc["meta"]["checks"] == len(doc["rows"]) >= 20
    assert {row["module"] for row in doc["rows"]} == {"states", "spectral", "optimal", "semiclassical",
                                                  "asymptotics", "special"}


def test_verify_failure_exits_1(monkeypatch):
    from covest import verify
    monkeypatch.setitem(verify.SUITES, "core", [("states", lambda: (False, "forced"))])
    code, out, _ = run(["verify"])
    assert code == 1 and json.loads(out)["meta"]["failed"] == 1


def test_pitman_mc_deterministic():
    argv = ["pitman-mc", "--preset", "sinc", "--n", "1,3", "--trials", "500", "--seed", "4"]
    first, second = run(argv)[1], run(argv)[1]
    assert csv_body(first) == csv_body(second)
    assert csv_body(first) != csv_body(run(argv[:-1] + ["5"])[1])
