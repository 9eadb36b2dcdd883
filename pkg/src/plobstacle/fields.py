"""Scalar/vector fields on a grid: discrete calculus, L^q norms, CSV export."""

import csv
from dataclasses import dataclass, field as dc_field

import numpy as np

from .geometry import Grid

__all__ = [
    "ScalarField",
    "VectorField",
    "Obstacle",
    "gradient_slice",
    "gradient",
    "divergence_slice",
    "time_diff",
    "lq_norm",
    "shift",
]


def _check_finite(values, what):
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{what} contains non-finite values")


@dataclass(frozen=True)
class ScalarField:
    """One real value per space-time node; `valid` marks nodes carrying data."""

    grid: Grid
    values: np.ndarray
    valid: np.ndarray = None  # bool array, None means all valid

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} != grid shape {self.grid.shape}")
        if self.valid is None:
            _check_finite(v, "ScalarField")
        else:
            _check_finite(v[self.valid], "ScalarField")
        object.__setattr__(self, "values", v)

    def valid_mask(self):
        if self.valid is None:
            return np.ones(self.grid.shape, dtype=bool)
        return self.valid

    def to_csv(self, path):
        """Rows t, x[, y], value in node order (lexicographic in (k, i[, j]))."""
        grid = self.grid
        xs = grid.coords().reshape(-1, grid.dim)
        header = ["t", "x"] + (["y"] if grid.dim == 2 else []) + ["value"]
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(header)
            for k, t in enumerate(grid.times):
                vals = self.values[k].reshape(-1)
                for xrow, v in zip(xs, vals):
                    w.writerow([f"{t:.17g}"] + [f"{c:.17g}" for c in xrow]
                               + [f"{v:.17g}"])

    @classmethod
    def from_csv(cls, path, grid):
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        vals = np.array([float(r[-1]) for r in rows[1:]])
        return cls(grid, vals.reshape(grid.shape))


@dataclass(frozen=True)
class VectorField:
    """One n-vector per node, stored with the component axis last."""

    grid: Grid
    values: np.ndarray
    valid: np.ndarray = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape + (self.grid.dim,):
            raise ValueError(f"values shape {v.shape} incompatible with grid")
        if self.valid is None:
            _check_finite(v, "VectorField")
        object.__setattr__(self, "values", v)


def gradient_slice(grid, u_slice):
    """Spatial gradient of one time slice: central differences at interior
    nodes, one-sided second order at the lateral boundary. Exact on affines
    and (interior) quadratics. Returns shape (*space_shape, dim)."""
    u = np.asarray(u_slice, dtype=float)
    g = np.empty(u.shape + (grid.dim,))
    for ax, h in enumerate(grid.h):
        g[..., ax] = _diff_axis(u, ax, h)
    return g


def _diff_axis(u, ax, h):
    d = np.empty_like(u)
    u = np.moveaxis(u, ax, 0)
    out = np.moveaxis(d, ax, 0)
    out[1:-1] = (u[2:] - u[:-2]) / (2.0 * h)
    out[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h)
    out[-1] = (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * h)
    return d


def gradient(field):
    """Space gradient of a ScalarField at every time level."""
    grid = field.grid
    g = np.empty(grid.shape + (grid.dim,))
    for k in range(grid.nt):
        g[k] = gradient_slice(grid, field.values[k])
    return VectorField(grid, g)


def divergence_slice(grid, v_slice):
    """Discrete divergence of a spatial vector slice (..., dim), central
    differences with one-sided closure, exact on affine vector fields."""
    v = np.asarray(v_slice, dtype=float)
    out = np.zeros(v.shape[:-1])
    for ax, h in enumerate(grid.h):
        out += _diff_axis(v[..., ax], ax, h)
    return out


def time_diff(field):
    """Discrete time derivative: central in the interior, one-sided second
    order at t=0 and t=T. Requires nt >= 3."""
    grid = field.grid
    if grid.nt < 3:
        raise ValueError("time_diff requires nt >= 3")
    d = _diff_axis(field.values, 0, grid.tau)
    return ScalarField(grid, d, valid=field.valid)


def lq_norm(field, q, weight=None, region_mask=None):
    """Space-time L^q norm (sum weight*|v|^q * trapezoid weights)^(1/q).

    `field` may be a ScalarField or a plain array on grid.shape (then pass
    the grid via field=(grid, values)). `weight` is an optional nonnegative
    nodal array; `region_mask` a boolean node subset. Invalid nodes of the
    field are excluded. Summation via np.sum (pairwise, deterministic).
    """
    if isinstance(field, ScalarField):
        grid, values, valid = field.grid, field.values, field.valid
    else:
        grid, values = field
        values = np.asarray(values, dtype=float)
        valid = None
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    w = grid.quad_weights()
    if weight is not None:
        weight = np.asarray(weight, dtype=float)
        if np.any(weight < 0):
            raise ValueError("weight must be nonnegative")
        w = w * weight
    mask = np.ones(grid.shape, dtype=bool) if region_mask is None else region_mask
    if valid is not None:
        mask = mask & valid
    contrib = w[mask] * np.abs(values[mask]) ** q
    return float(np.sum(contrib) ** (1.0 / q))


def shift(field, axis, steps):
    """Translate a ScalarField by `steps` grid cells along spatial `axis`.

    shift(f)[..., i, ...] = f[..., i + steps, ...]; nodes whose source
    leaves the grid are flagged invalid and excluded from masked norms.
    """
    grid = field.grid
    if not 0 <= axis < grid.dim:
        raise ValueError(f"axis {axis} out of range for dim {grid.dim}")
    steps = int(steps)
    vals = np.array(field.values)
    valid = np.array(field.valid_mask())
    arr_ax = 1 + axis
    if steps != 0:
        vals = np.roll(vals, -steps, axis=arr_ax)
        valid = np.roll(valid, -steps, axis=arr_ax)
        idx = [slice(None)] * vals.ndim
        if steps > 0:
            idx[arr_ax] = slice(-steps, None)
        else:
            idx[arr_ax] = slice(None, -steps)
        valid[tuple(idx)] = False
        vals[~valid] = 0.0
    return ScalarField(grid, vals, valid=valid)


def shift_by_length(field, h_vector):
    """Shift by a displacement vector that must be a grid multiple along
    exactly one axis (the difference-quotient increment h)."""
    grid = field.grid
    h_vector = np.atleast_1d(np.asarray(h_vector, dtype=float))
    if h_vector.shape != (grid.dim,):
        raise ValueError("h_vector must have one entry per spatial axis")
    nonzero = np.nonzero(h_vector)[0]
    if len(nonzero) == 0:
        return shift(field, 0, 0)
    if len(nonzero) > 1:
        raise ValueError("shift must be along a single axis")
    ax = int(nonzero[0])
    ratio = h_vector[ax] / grid.h[ax]
    steps = round(ratio)
    if abs(ratio - steps) > 1e-9 * max(1.0, abs(ratio)):
        raise ValueError(f"shift {h_vector[ax]} is not a multiple of h={grid.h[ax]}")
    return shift(field, ax, steps)


class Obstacle:
    """Obstacle psi with analytic derivatives, sampled on demand.

    psi, psi_t: callables (x, t) -> scalar array, x of shape (..., dim);
    grad_psi: (x, t) -> (..., dim); hess_psi: (x, t) -> (..., dim, dim).
    boundary_trace defaults to psi; a separate trace admits scenarios where
    the Dirichlet data sits strictly above the constraint.
    The constructor probes psi_t and grad_psi against finite differences of
    psi at random points and rejects inconsistent callbacks.
    """

    def __init__(self, dim, psi, psi_t, grad_psi, hess_psi,
                 boundary_trace=None, name="obstacle", check=True):
        self.dim = dim
        self.psi = psi
        self.psi_t = psi_t
        self.grad_psi = grad_psi
        self.hess_psi = hess_psi
        self.boundary_trace = boundary_trace if boundary_trace is not None else psi
        self.name = name
        if check:
            self._self_check()

    def _self_check(self, npoints=16, delta=1e-5, t_range=(0.05, 0.95)):
        rng = np.random.default_rng(0)
        x = rng.uniform(0.1, 0.9, size=(npoints, self.dim))
        t = rng.uniform(*t_range, size=npoints)
        fd_t = (self.psi(x, t + delta) - self.psi(x, t - delta)) / (2 * delta)
        tol = 1e-4 * (1.0 + float(np.max(np.abs(fd_t))))
        if np.max(np.abs(fd_t - self.psi_t(x, t))) > tol:
            raise ValueError(f"{self.name}: psi_t inconsistent with psi")
        g = self.grad_psi(x, t)
        for ax in range(self.dim):
            e = np.zeros(self.dim)
            e[ax] = delta
            fd = (self.psi(x + e, t) - self.psi(x - e, t)) / (2 * delta)
            tol = 1e-4 * (1.0 + float(np.max(np.abs(fd))))
            if np.max(np.abs(fd - g[..., ax])) > tol:
                raise ValueError(f"{self.name}: grad_psi axis {ax} inconsistent")

    def sample(self, grid, t=None):
        """psi at all nodes (t None) or at one time level (t scalar)."""
        x = grid.coords()
        if t is not None:
            return self.psi(x, t)
        out = np.empty(grid.shape)
        for k, tk in enumerate(grid.times):
            out[k] = self.psi(x, tk)
        return out

    def sample_trace(self, grid, t):
        return self.boundary_trace(grid.coords(), t)

    def sample_psi_t(self, grid):
        x = grid.coords()
        out = np.empty(grid.shape)
        for k, tk in enumerate(grid.times):
            out[k] = self.psi_t(x, tk)
        return out

    def hess_norm_sup(self, grid):
        """max over nodes of |D^2 psi| (Frobenius)."""
        x = grid.coords()
        worst = 0.0
        for tk in grid.times:
            H = self.hess_psi(x, tk)
            worst = max(worst, float(np.max(np.sqrt(np.sum(H * H, axis=(-2, -1))))))
        return worst
