import json
import subprocess
import sys

import pytest

from fueter_kit.cli import build_report, deterministic_part, dumps, main
from fueter_kit.errors import ConfigError
from fueter_kit.suites import RunConfig, run_suite


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_cocycle_exit_zero(capsys):
    code, out = run(capsys, "cocycle", "--n", "2", "--samples", "60")
    rep = json.loads(out.out)
    assert code == 0 and rep["pass"]
    assert rep["config"]["n"] == 2 and rep["suites"][0]["suite"] == "cocycle"
    assert {"max_abs_err", "max_rel_err", "pass"} <= set(rep["suites"][0]["checks"][0])


def test_failing_tolerance_gives_exit_one(capsys):
    code, out = run(capsys, "volume", "--tol", "volume=1e-30")
    assert code == 1 and not json.loads(out.out)["pass"]


@pytest.mark.parametrize("argv", [["cocycle", "--n", "0"], ["cocycle", "--tol", "bogus=1"],
                                  ["cocycle", "--tol", "cocycle=-1"], ["cocycle", "--tol", "cocycle"],
                                  ["cocycle", "--config", "/nonexistent.json"]])
def test_config_errors_give_exit_two(capsys, argv):
    code, out = run(capsys, *argv)
    assert code == 2 and "configuration error" in out.err


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 2, "seed": 3, "samples": 20, "tolerances": {"cocycle": 1e-8}}))
    code, out = run(capsys, "cocycle", "--config", str(cfg), "--seed", "5")
    rep = json.loads(out.out)
    assert code == 0
    assert rep["config"]["n"] == 2 and rep["config"]["seed"] == 5
    assert rep["config"]["tolerances"]["cocycle"] == 1e-8
    cfg.write_text(json.dumps({"colour": "red"}))
    assert run(capsys, "cocycle", "--config", str(cfg))[0] == 2


def test_out_file_and_text(tmp_path, capsys):
    path = tmp_path / "rep.json"
    code, out = run(capsys, "kernel", "--k", "1", "--out", str(path), "--text")
    assert code == 0
    assert "[PASS] kernel" in out.out and "overall: PASS" in out.out
    assert json.loads(path.read_text())["command"] == "kernel"


def test_reports_are_deterministic_across_thread_counts(monkeypatch):
    cfg = RunConfig(n=1, k=1, seed=11, samples=60)
    monkeypatch.setenv("FUETER_KIT_THREADS", "1")
    a = dumps(deterministic_part(build_report("invariance", cfg)))
    monkeypatch.setenv("FUETER_KIT_THREADS", "3")
    b = dumps(deterministic_part(build_report("invariance", cfg)))
    assert a == b


def test_seed_changes_report():
    a = run_suite("cocycle", RunConfig(samples=30, seed=1))
    b = run_suite("cocycle", RunConfig(samples=30, seed=2))
    assert a != b


def test_bad_thread_setting(monkeypatch):
    monkeypatch.setenv("FUETER_KIT_THREADS", "zero")
    with pytest.raises(ConfigError):
        run_suite("cocycle", RunConfig(samples=10))


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "fueter_kit", "cocycle", "--samples", "10"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["pass"]
