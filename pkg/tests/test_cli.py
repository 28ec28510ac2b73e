import json
import subprocess
import sys

import pytest

from streamfec.bounds import capacity
from streamfec.channels import ErasureTrace, write_trace
from streamfec.cli import main, parse_range


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_range():
    assert parse_range("40:43") == [40, 41, 42, 43]
    assert parse_range("1:9:4") == [1, 5, 9]
    assert parse_range("3,5") == [3, 5]
    with pytest.raises(Exception):
        parse_range("a:b")


def test_capacity_staircase_csv(capsys):
    code, out, _ = run_cli(capsys, "capacity", "--M", "20", "--T", "5", "--B", "40:110")
    assert code == 0
    rows = out.splitlines()[1:]
    assert len(rows) == 71
    for row in rows:
        M, T, B, b, Bp, cap, *_ = row.split(",")
        assert cap == str(capacity(20, 5, int(B)))
    code, out, _ = run_cli(capsys, "capacity", "--M", "1", "--T", "3", "--B", "5")
    assert out.splitlines()[1].split(",")[5] == "0"


def test_certify_exit_status(capsys):
    code, out, _ = run_cli(capsys, "certify", "--family", "midas", "--N", "2", "--B", "3", "--T", "4",
                           "--W", "5")
    cert = json.loads(out)
    assert code == 0 and cert["passed"] and cert["rate"] == "4/9"
    code, out, _ = run_cli(capsys, "certify", "--family", "midas", "--N", "2", "--B", "3", "--T", "4",
                           "--W", "5", "--test-B", "4", "--decoder", "oracle")
    assert code == 1 and not json.loads(out)["passed"]


def test_certify_cap_exit(capsys):
    code, _, err = run_cli(capsys, "certify", "--family", "genms", "--B", "3", "--T", "7", "--test-N", "4",
                           "--cap", "5", "--exhaustive")
    assert code == 3 and "cap" in err


def test_build_and_certify_json(capsys, tmp_path):
    path = tmp_path / "code.json"
    code, _, err = run_cli(capsys, "build", "--family", "unequal", "--M", "2", "--T", "3", "--B", "3",
                           "--out", str(path))
    assert code == 0 and "rate 7/10" in err
    code, out, _ = run_cli(capsys, "certify", "--code-json", str(path))
    assert code == 0 and json.loads(out)["rate"] == "7/10"


def test_config_file_and_errors(capsys, tmp_path):
    good = tmp_path / "c.json"
    good.write_text(json.dumps({"code": {"family": "midas", "N": 2, "B": 3, "T": 4}}))
    assert run_cli(capsys, "build", "--config", str(good))[0] == 0
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_cli(capsys, "build", "--config", str(bad))[0] == 2
    assert run_cli(capsys, "build", "--family", "midas", "--N", "2")[0] == 2
    assert run_cli(capsys, "build", "--family", "midas", "--N", "5", "--B", "3", "--T", "4")[0] == 2
    assert run_cli(capsys, "build")[0] == 2
    assert run_cli(capsys, "capacity", "--M", "2", "--T", "3", "--B", "x:y")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["nosuchcommand"])
    assert exc.value.code == 2


def test_tradeoff_and_distance(capsys):
    code, out, _ = run_cli(capsys, "tradeoff", "--R", "0.6", "--T", "40")
    assert code == 0 and "smds,16,16,3/5,40,41,1" in out and "midas,4,24,3/5,40,41,1" in out
    code, out, _ = run_cli(capsys, "distance", "--family", "midas", "--N", "2", "--B", "3", "--T", "4")
    rep = json.loads(out)
    assert code == 0 and rep["holds"] and rep["design_ok"]


def test_patterns_and_histogram(capsys, tmp_path):
    path = tmp_path / "mixed.trace"
    write_trace(ErasureTrace.from_positions([0, 1, 2, 6, 8, 12, 13, 14], 20), path)
    code, out, _ = run_cli(capsys, "patterns", "--trace", str(path), "--N", "2", "--B", "3", "--W", "5")
    assert code == 0 and json.loads(out)["admissible"]
    code, out, _ = run_cli(capsys, "patterns", "--trace", str(path), "--N", "1", "--B", "2", "--W", "5")
    assert code == 1 and json.loads(out)["first_violating_window"] == 0
    code, out, _ = run_cli(capsys, "histogram", "--trace", str(path))
    assert code == 0 and out == "length,count\n1,2\n3,2\n"
    code, out, _ = run_cli(capsys, "histogram", "--channel", '{"alpha": 0.01, "beta": 0.5}',
                           "--length", "10000", "--seed", "3")
    assert code == 0 and out.startswith("length,count\n")
    assert run_cli(capsys, "histogram", "--channel", '{"alpha": 0.01, "beta": 0.5}')[0] == 2
    path.write_text("junk\n")
    assert run_cli(capsys, "histogram", "--trace", str(path))[0] == 2


def test_simulate(capsys, tmp_path):
    cfg = {"codes": [{"family": "midas", "N": 2, "B": 3, "T": 4}, {"family": "genms", "B": 3, "T": 4}],
           "channel": {"model": "ge", "alpha": 0.01, "beta": 0.3}, "grid_param": "eps",
           "grid": [0.001, 0.005], "length": 10000, "seed": 1}
    path = tmp_path / "sim.json"
    path.write_text(json.dumps(cfg))
    code, out, _ = run_cli(capsys, "simulate", "--config", str(path))
    assert code == 0 and len(out.splitlines()) == 5
    again = run_cli(capsys, "simulate", "--config", str(path))[1]
    assert again == out
    other = run_cli(capsys, "simulate", "--config", str(path), "--seed", "2")[1]
    assert other != out
    path.write_text(json.dumps({**cfg, "grid": []}))
    assert run_cli(capsys, "simulate", "--config", str(path))[0] == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "streamfec", "capacity", "--M", "2", "--T", "3", "--B", "3"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.splitlines()[1].split(",")[5] == "7/10"
