"""Implicit-Euler time stepping for the (regularized) obstacle problem.

Each step solves the discrete elliptic variational inequality

    v >= psi,   (v - u_prev)/tau - div flux_eps(grad v) >= 0,
    equality where v > psi,

by projected nonlinear Gauss-Seidel with a single nodewise Newton step per
visit. Boundary and initial values come from the obstacle's parabolic
boundary trace.
"""

import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels
from .fields import ScalarField
from .geometry import lateral_mask
from .pflux import PParams

__all__ = [
    "SolverConfig",
    "SolveResult",
    "StepInfo",
    "step_vi",
    "solve",
    "solve_unconstrained",
    "comparison_check",
]


@dataclass(frozen=True)
class SolverConfig:
    params: PParams
    step_tol: float = None      # default resolved to 1e-10 * (1 + sup|psi|)
    max_sweeps: int = None      # default resolved to 500 * max(nx)
    omega: float = 1.0
    debug_energy: bool = False

    def __post_init__(self):
        if self.step_tol is not None and not self.step_tol > 0:
            raise ValueError("step_tol must be positive")
        if self.max_sweeps is not None and self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if not 0.0 < self.omega < 2.0:
            raise ValueError("omega must lie in (0, 2)")

    def resolve(self, grid, psi_sup):
        tol = self.step_tol if self.step_tol is not None else 1e-10 * (1.0 + psi_sup)
        sweeps = self.max_sweeps if self.max_sweeps is not None else 500 * max(grid.nx)
        return tol, sweeps


@dataclass
class StepInfo:
    sweeps: int
    residual: float
    converged: bool


@dataclass
class SolveResult:
    u: ScalarField
    eps: float
    steps: list          # StepInfo per time step (nt - 1 entries)
    wall_time: float
    energies: list = dc_field(default_factory=list)  # per step, debug only

    @property
    def converged(self):
        return all(s.converged for s in self.steps)

    def trajectory_csv(self, path, psi=None):
        """Columns t, x[, y], u[, psi] in node order."""
        import csv
        grid = self.u.grid
        xs = grid.coords().reshape(-1, grid.dim)
        header = ["t", "x"] + (["y"] if grid.dim == 2 else []) + ["u"]
        if psi is not None:
            header.append("psi")
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(header)
            for k, t in enumerate(grid.times):
                uv = self.u.values[k].reshape(-1)
                pv = psi[k].reshape(-1) if psi is not None else None
                for idx in range(len(uv)):
                    row = [f"{t:.17g}"] + [f"{c:.17g}" for c in xs[idx]] + [f"{uv[idx]:.17g}"]
                    if pv is not None:
                        row.append(f"{pv[idx]:.17g}")
                    w.writerow(row)


def _discrete_energy(grid, v, uprev, params, tau):
    """Per-step energy sum (1/p)(|grad v|^2 + eps^2)^(p/2) + (1/2 tau)(v - uprev)^2,
    edges + nodes weighted by cell volume (1D only; used in debug mode)."""
    h = grid.h[0]
    d = np.diff(v) / h
    e = np.sum((d * d + params.eps ** 2) ** (params.p / 2.0)) / params.p * h
    e += np.sum((v - uprev) ** 2) / (2.0 * tau) * h
    return float(e)


def _sweep(grid, v, uprev, psi, tau, params, omega, project, forward):
    if grid.dim == 1:
        _kernels.sweep_1d(v, uprev, psi, tau, grid.h[0], params.p, params.eps,
                          omega, project, forward)
    else:
        _kernels.sweep_2d(v, uprev, psi, tau, grid.h[0], grid.h[1], params.p,
                          params.eps, omega, project, forward)


def _comp_residual(grid, v, uprev, psi, tau, params, project):
    if grid.dim == 1:
        return _kernels.comp_residual_1d(v, uprev, psi, tau, grid.h[0],
                                         params.p, params.eps, project)
    return _kernels.comp_residual_2d(v, uprev, psi, tau, grid.h[0], grid.h[1],
                                     params.p, params.eps, project)


def step_vi(grid, u_prev_slice, psi_next, trace_next, config, step_tol, max_sweeps,
            project=True, forward=True, collect_energy=False):
    """Advance one implicit-Euler step; returns (slice, StepInfo[, energies]).

    psi_next/trace_next are the obstacle and boundary trace sampled at the
    target time level. The initial iterate is the previous slice with the
    lateral trace imposed, clamped to the obstacle (feasible by construction).
    """
    lat = lateral_mask(grid)
    v = np.array(u_prev_slice, dtype=float)
    v[lat] = trace_next[lat]
    if project:
        np.maximum(v, psi_next, out=v)
    uprev = np.ascontiguousarray(u_prev_slice, dtype=float)
    psi = np.ascontiguousarray(psi_next, dtype=float)
    v = np.ascontiguousarray(v)
    tau = grid.tau
    energies = []
    if collect_energy and grid.dim == 1:
        energies.append(_discrete_energy(grid, v, uprev, config.params, tau))
    residual = np.inf
    sweeps = 0
    while sweeps < max_sweeps:
        _sweep(grid, v, uprev, psi, tau, config.params, config.omega, project, forward)
        sweeps += 1
        if collect_energy and grid.dim == 1:
            energies.append(_discrete_energy(grid, v, uprev, config.params, tau))
        residual = _comp_residual(grid, v, uprev, psi, tau, config.params, project)
        if residual <= step_tol:
            break
    info = StepInfo(sweeps=sweeps, residual=float(residual),
                    converged=residual <= step_tol)
    if collect_energy:
        return v, info, energies
    return v, info


def _run(grid, psi_all, trace_fn, config, project, forward=True):
    t0 = time.perf_counter()
    psi_sup = float(np.max(np.abs(psi_all))) if psi_all is not None else \
        float(np.max(np.abs(trace_fn(0))))
    step_tol, max_sweeps = config.resolve(grid, psi_sup)
    u = np.empty(grid.shape)
    u[0] = trace_fn(0)
    if project:
        np.maximum(u[0], psi_all[0], out=u[0])
    steps = []
    energies = []
    for k in range(1, grid.nt):
        psi_k = psi_all[k] if project else np.full(grid.space_shape, -np.inf)
        out = step_vi(grid, u[k - 1], psi_k, trace_fn(k), config, step_tol,
                      max_sweeps, project=project, forward=forward,
                      collect_energy=config.debug_energy)
        if config.debug_energy:
            u[k], info, en = out
            energies.append(en)
        else:
            u[k], info = out
        steps.append(info)
    return SolveResult(u=ScalarField(grid, u), eps=config.params.eps,
                       steps=steps, wall_time=time.perf_counter() - t0,
                       energies=energies)


def solve(grid, obstacle, config, forward=True):
    """Solve the obstacle problem: u(.,0) and the lateral boundary from the
    obstacle's parabolic boundary trace, u >= psi enforced by projection."""
    psi_all = obstacle.sample(grid)
    x = grid.coords()

    def trace(k):
        return np.asarray(obstacle.boundary_trace(x, grid.times[k]), dtype=float)

    tr0 = trace(0)
    if np.any(tr0 < psi_all[0] - 1e-12 * (1.0 + np.max(np.abs(psi_all)))):
        raise ValueError("boundary trace at t=0 lies below the obstacle")
    return _run(grid, psi_all, trace, config, project=True, forward=forward)


def solve_unconstrained(grid, boundary_data, config, forward=True):
    """Same stepping without the obstacle projection; boundary_data is a
    callable (x, t) -> values giving initial and lateral data."""
    x = grid.coords()

    def trace(k):
        return np.asarray(boundary_data(x, grid.times[k]), dtype=float)

    return _run(grid, None, trace, config, project=False, forward=forward)


def comparison_check(result_a, result_b, tol):
    """True iff u_a <= u_b + tol nodewise (comparison principle surrogate)."""
    if result_a.u.grid != result_b.u.grid:
        raise ValueError("comparison_check requires matching grids")
    return bool(np.all(result_a.u.values <= result_b.u.values + tol))
