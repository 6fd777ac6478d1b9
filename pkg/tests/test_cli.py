from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pucci_eigen import (BarrierFailureError, BracketError, ConfigError, IndeterminateLambdaError,
                         InvalidInputError, NonConvergenceError)
from pucci_eigen.cli import dumps, exit_code_for, main, parse_config

DISC = """
[operator]
a = 1
A = 2
alpha = 1

[domain]
type = ball
center = 0, 0
R = 1

[grid]
h = 1/16
"""


def run_cli(tmp_path, command, text, *extra):
    cfg = tmp_path / "run.ini"
    cfg.write_text(text)
    out = tmp_path / "out"
    code = main([command, "--config", str(cfg), "--out", str(out), *extra])
    return code, out


# --- configuration ------------------------------------------------------------------------


def test_defaults_are_resolved():
    cfg = parse_config("", "eigen")
    assert cfg.grid == {"h": 1 / 128, "stencil_width": 2}
    assert cfg.domain == {"type": "interval", "lo": -1.0, "hi": 1.0}
    assert cfg.operator["eps_reg"] == 0.0
    assert cfg.params["bracket_tol"] == 1e-3


def test_singular_operator_gets_mesh_regularization():
    cfg = parse_config("[operator]\nalpha = -0.5\n[grid]\nh = 1/64\n", "solve")
    assert cfg.operator["eps_reg"] == 1 / 64


def test_case_sensitive_keys():
    cfg = parse_config("[operator]\na = 0.5\nA = 3\n")
    assert (cfg.operator["a"], cfg.operator["A"]) == (0.5, 3.0)


@pytest.mark.parametrize("text, line, key", [
    ("[operator]\na = 1\nalpa = 2\n", 3, "alpa"),
    ("[operator]\nalpha = -1\n", 2, "alpha"),
    ("[operator]\na = 2\nA = 1\n", 3, "A"),
    ("\n[grid]\nh = fine\n", 3, "h"),
    ("[mystery]\nx = 1\n", 1, None),
    ("[barrier]\ngamma = 1.5\n", 2, "gamma"),
])
def test_config_errors_point_at_the_entry(text, line, key):
    with pytest.raises(ConfigError) as err:
        parse_config(text, "barrier")
    assert err.value.line == line
    if key is not None:
        assert err.value.key == key


def test_unknown_key_column():
    with pytest.raises(ConfigError) as err:
        parse_config("[operator]\n  alpa = 2\n")
    assert (err.value.line, err.value.column) == (2, 3)


# --- serialization --------------------------------------------------------------------------


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_dumps_round_trips_floats(x):
    assert json.loads(dumps({"x": x}))["x"] == x


def test_dumps_special_values():
    data = json.loads(dumps({"a": math.nan, "b": -math.inf, "c": [1, 2.5], "d": np.float64(0.1), "e": True}))
    assert data == {"a": "nan", "b": "-inf", "c": [1, 2.5], "d": 0.1, "e": True}


@pytest.mark.parametrize("exc, code", [
    (InvalidInputError("x"), 2), (ConfigError("x"), 2), (NonConvergenceError("x", 1.0, 3), 3),
    (IndeterminateLambdaError("x", 1.0), 3), (BracketError("x"), 4),
])
def test_exit_codes(exc, code):
    assert exit_code_for(exc) == code


def test_barrier_failure_exit_code():
    assert exit_code_for(BarrierFailureError("x", [0.0, 0.0], 1.0)) == 4


# --- commands ---------------------------------------------------------------------------------


def test_eigen_command_is_deterministic(tmp_path):
    code, out = run_cli(tmp_path, "eigen", DISC)
    assert code == 0
    first = (out / "eigen.json").read_bytes()
    record = json.loads(first)
    assert record["lambda_lo"] <= record["lambda_hat"] <= record["lambda_hi"]
    assert record["config"]["grid"]["h"] == 1 / 16
    for suffix in ("csv", "bin", "dat"):
        assert (out / f"eigenfunction.{suffix}").exists()
    assert json.loads((out / "metadata.json").read_text())["exit_code"] == 0
    code, _ = run_cli(tmp_path, "eigen", DISC)
    assert (out / "eigen.json").read_bytes() == first


def test_solve_command(tmp_path):
    code, out = run_cli(tmp_path, "solve", DISC + "[solve]\nlam = 1\n[output]\nformats = json\n")
    assert code == 0
    record = json.loads((out / "solve.json").read_text())
    assert record["residual"] < 1e-9
    assert not (out / "solution.csv").exists()


def test_radial_command(tmp_path):
    code, out = run_cli(tmp_path, "radial", "[operator]\nalpha = 1\n")
    assert code == 0
    record = json.loads((out / "radial.json").read_text())
    assert record["lambda_hat"] == pytest.approx(1.7680476, abs=1e-6)
    assert record["N"] == 1
    profile = np.loadtxt(out / "profile.dat")
    assert profile[0, 1] == pytest.approx(1.0, abs=1e-6)


def test_radial_command_rejects_star(tmp_path):
    code, out = run_cli(tmp_path, "radial", "[domain]\ntype = star\n")
    assert code == 2
    assert json.loads((out / "error.json").read_text())["error"] == "InvalidInputError"


def test_verify_operator_command(tmp_path):
    code, out = run_cli(tmp_path, "verify-operator", "[verify-operator]\nn_samples = 2000\n", "--seed", "3")
    assert code == 0
    record = json.loads((out / "axioms.json").read_text())
    assert record["passed"] and record["config"]["seed"] == 3


def test_barrier_command(tmp_path):
    code, out = run_cli(tmp_path, "barrier", DISC)
    assert code == 0
    assert json.loads((out / "barrier.json").read_text())["certified_margin"] > 0


def test_barrier_failure_writes_diagnostics(tmp_path):
    text = "[domain]\ntype = star\n[grid]\nh = 1/16\n[operator]\nA = 2\n[barrier]\nkind = boundary\ngamma = 0.95\ndelta = 0.5\n"
    code, out = run_cli(tmp_path, "barrier", text)
    assert code == 4
    err = json.loads((out / "error.json").read_text())
    assert err["error"] == "BarrierFailureError" and len(err["worst_point"]) == 2


def test_compare_command(tmp_path):
    code, out = run_cli(tmp_path, "compare", DISC)
    assert code == 0
    record = json.loads((out / "compare.json").read_text())
    assert record["agree"]
    assert abs(record["relative_difference"]) < 0.05


def test_bad_config_exits_with_two(tmp_path, capsys):
    code, out = run_cli(tmp_path, "eigen", "[operator]\nalpa = 1\n")
    assert code == 2
    assert "line 2" in capsys.readouterr().err
    assert json.loads((out / "error.json").read_text())["line"] == 2


def test_missing_config_file(tmp_path):
    assert main(["eigen", "--config", str(tmp_path / "nope.ini"), "--out", str(tmp_path)]) == 2


def test_threads_do_not_change_results(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    a.mkdir()
    b.mkdir()
    assert run_cli(a, "solve", DISC, "--threads", "1")[0] == 0
    assert run_cli(b, "solve", DISC, "--threads", "2")[0] == 0
    ra = json.loads((a / "out" / "solve.json").read_text())
    rb = json.loads((b / "out" / "solve.json").read_text())
    ra["config"].pop("threads")
    rb["config"].pop("threads")
    assert ra == rb
