"""CLI subcommands, exit codes, manifests, determinism."""

import time

import numpy as np
import pytest

import plobstacle.harness as harness
from plobstacle.cli import (EXIT_INPUT, EXIT_NONCONVERGED, EXIT_OK,
                            EXIT_VERIFY_FAIL, main)

CONSTANT = """\
scenario.name = tiny-constant
grid.dim = 1
grid.extent = 0 1
grid.nx = 17
grid.T = 1.0
grid.nt = 9
p = 3.0
obstacle.id = constant
obstacle.level = 0.5
refine.levels = 1
"""

HUMP = """\
scenario.name = tiny-hump
grid.dim = 1
grid.extent = 0 1
grid.nx = 33
grid.T = 1.0
grid.nt = 17
p = 3.0
obstacle.id = shrinking-hump
refine.levels = 1
"""


def _scenario(tmp_path, text, name="scenario.txt"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_solve_constant(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["solve", "--scenario", _scenario(tmp_path, CONSTANT),
                 "--out", str(out)])
    assert code == EXIT_OK
    rows = (out / "trajectory.csv").read_text().strip().splitlines()
    assert rows[0] == "t,x,u,psi"
    assert all(r.split(",")[2] == "0.5" for r in rows[1:])
    manifest = (out / "manifest.txt").read_text()
    assert "trajectory.csv" in manifest and "steps.csv" in manifest
    assert "wall_time_s" in manifest and "solver_converged = 1" in manifest


def test_missing_scenario_file(tmp_path, capsys):
    code = main(["solve", "--scenario", str(tmp_path / "nope.txt"),
                 "--out", str(tmp_path / "o")])
    assert code == EXIT_INPUT
    assert "not found" in capsys.readouterr().err


def test_missing_grid_nx_names_key(tmp_path, capsys):
    path = _scenario(tmp_path, "scenario.name = x\n")
    code = main(["solve", "--scenario", path, "--out", str(tmp_path / "o")])
    assert code == EXIT_INPUT
    assert "grid.nx" in capsys.readouterr().err


def test_unknown_key_names_line(tmp_path, capsys):
    path = _scenario(tmp_path, "grid.nx = 9\nwibble = 1\n")
    code = main(["solve", "--scenario", path, "--out", str(tmp_path / "o")])
    assert code == EXIT_INPUT
    err = capsys.readouterr().err
    assert ":2:" in err and "wibble" in err


def test_solve_nonconvergence_exit(tmp_path, capsys):
    text = HUMP + "solver.step_tol = 1e-12\nsolver.max_sweeps = 1\n"
    code = main(["solve", "--scenario", _scenario(tmp_path, text),
                 "--out", str(tmp_path / "o")])
    assert code == EXIT_NONCONVERGED


def test_verify_constant_passes_and_is_deterministic(tmp_path, capsys):
    path = _scenario(tmp_path, CONSTANT)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["verify", "--scenario", path, "--out", str(out)]) == EXIT_OK
        outs.append(out)
    text = (outs[0] / "report.txt").read_text()
    assert "[FAIL]" not in text and "[PASS]" in text
    # byte-identical reports across runs
    assert (outs[0] / "report.txt").read_bytes() == (outs[1] / "report.txt").read_bytes()
    assert (outs[0] / "report.kv").read_bytes() == (outs[1] / "report.kv").read_bytes()


def test_verify_failure_exit(tmp_path, capsys, monkeypatch):
    # force the theorem2 contract to be unattainable
    monkeypatch.setattr(harness, "THEOREM2_REL", -1.0)
    code = main(["verify", "--scenario", _scenario(tmp_path, HUMP),
                 "--out", str(tmp_path / "o")])
    assert code == EXIT_VERIFY_FAIL
    assert "[FAIL] theorem2" in (tmp_path / "o" / "report.txt").read_text()


def test_verify_nonconverged_exit(tmp_path, capsys):
    text = HUMP + "solver.step_tol = 1e-12\nsolver.max_sweeps = 1\n"
    code = main(["verify", "--scenario", _scenario(tmp_path, text),
                 "--out", str(tmp_path / "o")])
    assert code == EXIT_NONCONVERGED


def test_convergence_zero_eps_row(tmp_path, capsys):
    text = CONSTANT + "eps_list = 0\n"
    out = tmp_path / "o"
    code = main(["convergence", "--scenario", _scenario(tmp_path, text),
                 "--out", str(out)])
    assert code == EXIT_OK
    rows = (out / "eps_convergence.csv").read_text().strip().splitlines()
    assert rows[0] == "eps,u_diff_lp,grad_diff_lp"
    assert [float(v) for v in rows[1].split(",")] == [0.0, 0.0, 0.0]


def test_ineq_small_and_deterministic(capsys):
    assert main(["ineq", "--trials", "1000", "--seed", "3"]) == EXIT_OK
    first = capsys.readouterr().out
    assert main(["ineq", "--trials", "1000", "--seed", "3"]) == EXIT_OK
    assert capsys.readouterr().out == first
    assert "monotonicity" in first and "young3" in first


def test_ineq_swap_detects_violation(capsys):
    assert main(["ineq", "--trials", "1000", "--seed", "3",
                 "--debug-swap"]) == EXIT_VERIFY_FAIL


def test_ineq_rejects_bad_trials(capsys):
    assert main(["ineq", "--trials", "0"]) == EXIT_INPUT
    assert "--trials" in capsys.readouterr().err


def test_solve_257_under_30s(tmp_path, capsys):
    text = HUMP.replace("grid.nx = 33", "grid.nx = 257") \
               .replace("grid.nt = 17", "grid.nt = 257")
    t0 = time.perf_counter()
    code = main(["solve", "--scenario", _scenario(tmp_path, text),
                 "--out", str(tmp_path / "o")])
    elapsed = time.perf_counter() - t0
    assert code == EXIT_OK
    assert elapsed < 30.0
