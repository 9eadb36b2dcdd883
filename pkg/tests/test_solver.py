"""Implicit-Euler projected Gauss-Seidel solver."""

import numpy as np
import pytest

from plobstacle.fields import Obstacle
from plobstacle.geometry import build_grid
from plobstacle.pflux import PParams
from plobstacle.scenarios import (make_affine_inactive, make_constant,
                                  make_parabolic_hump, make_shrinking_hump)
from plobstacle.solver import (SolverConfig, comparison_check, solve,
                               solve_unconstrained)

EXTENT1 = ((0.0, 1.0),)
EXTENT2 = ((0.0, 1.0), (0.0, 1.0))


def _config(p=3.0, **kw):
    return SolverConfig(params=PParams(p=p), **kw)


def test_config_validation():
    with pytest.raises(ValueError):
        _config(step_tol=0.0)
    with pytest.raises(ValueError):
        _config(max_sweeps=0)
    for omega in (0.0, 2.0, -1.0):
        with pytest.raises(ValueError):
            _config(omega=omega)


def test_constant_obstacle_is_stationary():
    grid = build_grid(1, EXTENT1, 17, 1.0, 9)
    res = solve(grid, make_constant(1, EXTENT1, level=0.5), _config())
    assert res.converged
    assert np.all(res.u.values == 0.5)


def test_affine_data_stays_affine():
    grid = build_grid(1, EXTENT1, 33, 1.0, 17)
    ob = make_affine_inactive(1, EXTENT1, offset=0.0, slope=3.0, gap=1.0)
    res = solve(grid, ob, _config())
    assert res.converged
    trace = np.stack([ob.boundary_trace(grid.coords(), t) for t in grid.times])
    np.testing.assert_allclose(res.u.values, trace, atol=1e-10)
    # the obstacle never binds
    assert np.min(res.u.values - ob.sample(grid)) >= 1.0 - 1e-10


def test_inactive_matches_unconstrained():
    grid = build_grid(1, EXTENT1, 33, 1.0, 17)
    ob = make_affine_inactive(1, EXTENT1)
    res = solve(grid, ob, _config())
    free = solve_unconstrained(grid, ob.boundary_trace, _config())
    assert np.max(np.abs(res.u.values - free.u.values)) <= 1e-10


def test_p2_matches_dense_heat_solve():
    nx, nt = 33, 33
    grid = build_grid(1, EXTENT1, nx, 0.1, nt)

    def data(x, t):
        return np.sin(np.pi * x[..., 0])

    cfg = SolverConfig(params=PParams(p=2.0), step_tol=1e-12)
    res = solve_unconstrained(grid, data, cfg)
    assert res.converged

    h, tau = grid.h[0], grid.tau
    A = np.zeros((nx, nx))
    A[0, 0] = A[-1, -1] = 1.0
    for i in range(1, nx - 1):
        A[i, i - 1] = A[i, i + 1] = -1.0 / h ** 2
        A[i, i] = 1.0 / tau + 2.0 / h ** 2
    bvals = data(grid.coords(), 0.0)
    u = np.array(bvals)
    ref = [u]
    for _ in range(nt - 1):
        rhs = u / tau
        rhs[0], rhs[-1] = bvals[0], bvals[-1]
        u = np.linalg.solve(A, rhs)
        ref.append(u)
    assert np.max(np.abs(res.u.values - np.stack(ref))) <= 1e-10


def test_crest_contact_parabolic_hump():
    grid = build_grid(1, EXTENT1, 65, 1.0, 17)
    ob = make_parabolic_hump(1, EXTENT1, height=1.0, curvature=10.0)
    res = solve(grid, ob, _config())
    assert res.converged
    assert np.min(res.u.values - ob.sample(grid)) >= 0.0
    # the crest (x = 0.5) stays in contact: u = psi = 1 there
    np.testing.assert_array_equal(res.u.values[:, 32], 1.0)


def test_translation_invariance():
    grid = build_grid(1, EXTENT1, 33, 1.0, 17)
    ob = make_shrinking_hump(1, EXTENT1, amplitude=0.5, rate=0.9)
    shifted = Obstacle(
        1,
        lambda x, t: ob.psi(x, t) + 1.0,
        ob.psi_t, ob.grad_psi, ob.hess_psi,
        name="shifted", check=False)
    res_a = solve(grid, ob, _config())
    res_b = solve(grid, shifted, _config())
    assert np.max(np.abs(res_b.u.values - res_a.u.values - 1.0)) <= 1e-10


def test_comparison_principle():
    grid = build_grid(1, EXTENT1, 33, 1.0, 17)
    lo = solve(grid, make_shrinking_hump(1, EXTENT1, amplitude=0.3), _config())
    hi = solve(grid, make_shrinking_hump(1, EXTENT1, amplitude=0.5), _config())
    assert comparison_check(lo, lo, tol=0.0)
    assert comparison_check(lo, hi, tol=1e-8)
    other = solve(build_grid(1, EXTENT1, 17, 1.0, 17),
                  make_constant(1, EXTENT1), _config())
    with pytest.raises(ValueError):
        comparison_check(lo, other, tol=0.0)


def test_sweep_order_and_determinism():
    grid = build_grid(1, EXTENT1, 33, 1.0, 17)
    ob = make_shrinking_hump(1, EXTENT1)
    a = solve(grid, ob, _config())
    b = solve(grid, ob, _config())
    np.testing.assert_array_equal(a.u.values, b.u.values)  # bitwise
    back = solve(grid, ob, _config(), forward=False)
    assert np.max(np.abs(back.u.values - a.u.values)) <= 1e-7


def test_energy_descent_debug():
    grid = build_grid(1, EXTENT1, 17, 1.0, 9)
    ob = make_shrinking_hump(1, EXTENT1)
    res = solve(grid, ob, _config(debug_energy=True))
    assert len(res.energies) == grid.nt - 1
    for en in res.energies:
        assert len(en) >= 2
        assert np.all(np.diff(en) <= 1e-12)


def test_nonconvergence_reported():
    grid = build_grid(1, EXTENT1, 33, 1.0, 17)
    ob = make_shrinking_hump(1, EXTENT1)
    res = solve(grid, ob, _config(step_tol=1e-12, max_sweeps=1))
    assert not res.converged
    assert any(not s.converged for s in res.steps)


def test_trace_below_obstacle_rejected():
    grid = build_grid(1, EXTENT1, 9, 1.0, 5)
    ob = make_constant(1, EXTENT1, level=0.5)
    bad = Obstacle(1, ob.psi, ob.psi_t, ob.grad_psi, ob.hess_psi,
                   boundary_trace=lambda x, t: np.zeros(np.shape(x)[:-1]),
                   name="bad-trace", check=False)
    with pytest.raises(ValueError):
        solve(grid, bad, _config())


def test_2d_shrinking_hump():
    grid = build_grid(2, EXTENT2, 17, 0.5, 9)
    ob = make_shrinking_hump(2, EXTENT2)
    res = solve(grid, ob, _config())
    assert res.converged
    assert np.min(res.u.values - ob.sample(grid)) >= 0.0
    # boundary data imposed exactly (psi at x=1 is sin(pi) ~ 1e-16, not 0)
    x = grid.coords()
    for k, t in enumerate(grid.times):
        tr = ob.boundary_trace(x, t)
        np.testing.assert_array_equal(res.u.values[k][:, -1], tr[:, -1])
        np.testing.assert_array_equal(res.u.values[k][0, :], tr[0, :])


def test_2d_affine_matches_unconstrained():
    grid = build_grid(2, EXTENT2, 9, 1.0, 5)
    ob = make_affine_inactive(2, EXTENT2, slope=2.0)
    res = solve(grid, ob, _config())
    free = solve_unconstrained(grid, ob.boundary_trace, _config())
    trace = np.stack([ob.boundary_trace(grid.coords(), t) for t in grid.times])
    assert np.max(np.abs(res.u.values - trace)) <= 1e-10
    assert np.max(np.abs(res.u.values - free.u.values)) <= 1e-10


def test_trajectory_csv(tmp_path):
    grid = build_grid(1, EXTENT1, 9, 1.0, 5)
    ob = make_constant(1, EXTENT1, level=0.25)
    res = solve(grid, ob, _config())
    path = tmp_path / "traj.csv"
    res.trajectory_csv(path, psi=ob.sample(grid))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,x,u,psi"
    assert len(lines) == 1 + 9 * 5
    assert all(row.split(",")[2] == "0.25" for row in lines[1:])
