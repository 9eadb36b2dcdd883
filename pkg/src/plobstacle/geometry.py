"""Uniform space-time grids on box domains, boundary classification, cutoffs."""

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

__all__ = [
    "Grid",
    "NodeClass",
    "build_grid",
    "classify_boundary",
    "Cutoff",
    "bump_cutoff",
    "smoothstep",
    "smoothstep_d1",
]


class NodeClass(IntEnum):
    """Classification of a space-time node."""

    INTERIOR = 0
    PARABOLIC_BOUNDARY = 1
    # Lateral nodes at the final time are part of the parabolic boundary
    # (lateral at all t); this tag is reserved for callers that want to
    # distinguish them and is never produced by classify_boundary.
    FINAL_TIME_LATERAL = 2


@dataclass(frozen=True)
class Grid:
    """Uniform Cartesian grid on a box [a_0,b_0] x ... crossed with [0,T].

    Nodes include the boundary: x_i = a + i*h with i = 0..nx-1, and
    t_k = k*tau with k = 0..nt-1, so h = (b-a)/(nx-1) and tau = T/(nt-1).
    Node ordering is lexicographic in (k, i[, j]).
    """

    dim: int
    extent: tuple  # ((a_0, b_0), ...) one pair per spatial axis
    nx: tuple      # nodes per spatial axis
    T: float
    nt: int

    @property
    def h(self):
        """Spatial step per axis."""
        return tuple((b - a) / (n - 1) for (a, b), n in zip(self.extent, self.nx))

    @property
    def tau(self):
        return self.T / (self.nt - 1)

    @property
    def space_shape(self):
        return tuple(self.nx)

    @property
    def shape(self):
        """Full array shape (nt, nx_0[, nx_1])."""
        return (self.nt,) + self.space_shape

    @property
    def axes(self):
        """Per-axis node coordinate arrays."""
        return tuple(np.linspace(a, b, n) for (a, b), n in zip(self.extent, self.nx))

    @property
    def times(self):
        return np.linspace(0.0, self.T, self.nt)

    def coords(self):
        """Spatial coordinates as an array of shape (*space_shape, dim)."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    @property
    def cell_volume(self):
        v = 1.0
        for h in self.h:
            v *= h
        return v

    def quad_weights_space(self):
        """Trapezoid weights per spatial node (1 interior, 1/2 faces, 1/4 corners)."""
        w = np.ones(self.space_shape)
        for ax in range(self.dim):
            idx = [slice(None)] * self.dim
            for end in (0, -1):
                idx[ax] = end
                w[tuple(idx)] *= 0.5
        return w * self.cell_volume

    def quad_weights_time(self):
        """Trapezoid weights per time level, including the tau factor."""
        w = np.full(self.nt, self.tau)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def quad_weights(self):
        """Space-time quadrature weights, shape == grid.shape."""
        wt = self.quad_weights_time()
        ws = self.quad_weights_space()
        return wt.reshape((self.nt,) + (1,) * self.dim) * ws


def build_grid(dim, extent, nx, T, nt):
    """Build a validated Grid.

    extent may be a single (a, b) pair in 1D or a sequence of pairs;
    nx may be an int (same node count per axis) or a sequence.
    """
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    extent = np.asarray(extent, dtype=float)
    if extent.ndim == 1:
        extent = extent.reshape(1, 2)
    if extent.shape != (dim, 2):
        raise ValueError(f"extent must give {dim} (a, b) pairs, got shape {extent.shape}")
    if np.isscalar(nx):
        nx = (int(nx),) * dim
    else:
        nx = tuple(int(n) for n in nx)
    if len(nx) != dim:
        raise ValueError(f"nx must give {dim} entries, got {len(nx)}")
    for n in nx:
        if n < 3:
            raise ValueError(f"nx must be >= 3 per axis, got {n}")
    for a, b in extent:
        if not b > a:
            raise ValueError(f"degenerate extent [{a}, {b}]")
    T = float(T)
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    nt = int(nt)
    if nt < 2:
        raise ValueError(f"nt must be >= 2, got {nt}")
    return Grid(dim=dim, extent=tuple((float(a), float(b)) for a, b in extent),
                nx=nx, T=T, nt=nt)


def classify_boundary(grid):
    """Classify every node: t=0 and lateral nodes are PARABOLIC_BOUNDARY.

    The final-time interior belongs to the solve, hence INTERIOR.
    Returns an integer array of NodeClass values, shape == grid.shape.
    """
    mask = np.full(grid.shape, int(NodeClass.INTERIOR), dtype=np.int8)
    mask[0] = NodeClass.PARABOLIC_BOUNDARY
    for ax in range(grid.dim):
        idx = [slice(None)] * (1 + grid.dim)
        for end in (0, -1):
            idx[1 + ax] = end
            mask[tuple(idx)] = NodeClass.PARABOLIC_BOUNDARY
            idx[1 + ax] = slice(None)
    return mask


def lateral_mask(grid):
    """Boolean spatial mask of nodes on the lateral boundary of the box."""
    m = np.zeros(grid.space_shape, dtype=bool)
    for ax in range(grid.dim):
        idx = [slice(None)] * grid.dim
        for end in (0, -1):
            idx[ax] = end
            m[tuple(idx)] = True
            idx[ax] = slice(None)
    return m


def smoothstep(r):
    """Quintic smoothstep 6r^5 - 15r^4 + 10r^3, clamped to [0, 1]."""
    r = np.clip(r, 0.0, 1.0)
    return r * r * r * (10.0 + r * (-15.0 + 6.0 * r))


def smoothstep_d1(r):
    """Derivative of smoothstep on (0, 1), 0 outside."""
    inside = (r > 0.0) & (r < 1.0)
    r = np.clip(r, 0.0, 1.0)
    return np.where(inside, 30.0 * r * r * (1.0 - r) ** 2, 0.0)


@dataclass(frozen=True)
class Cutoff:
    """Spatial cutoff zeta(x): 0 within margin of the box boundary, ramping
    to 1 over a second margin-width band, C^2 across the junctions."""

    grid: Grid
    margin: float

    def __call__(self, x):
        """Evaluate zeta at points x of shape (..., dim)."""
        x = np.asarray(x, dtype=float)
        if self.grid.dim == 1 and x.shape[-1:] != (1,):
            x = x.reshape(x.shape + (1,))
        z = np.ones(x.shape[:-1])
        for ax, (a, b) in enumerate(self.grid.extent):
            d = np.minimum(x[..., ax] - a, b - x[..., ax])
            z = z * smoothstep((d - self.margin) / self.margin)
        return z

    def gradient(self, x):
        """Analytic gradient of zeta, shape (..., dim)."""
        x = np.asarray(x, dtype=float)
        if self.grid.dim == 1 and x.shape[-1:] != (1,):
            x = x.reshape(x.shape + (1,))
        factors = []
        dfactors = []
        for ax, (a, b) in enumerate(self.grid.extent):
            da = x[..., ax] - a
            db = b - x[..., ax]
            lower = da <= db
            d = np.where(lower, da, db)
            sgn = np.where(lower, 1.0, -1.0)
            r = (d - self.margin) / self.margin
            factors.append(smoothstep(r))
            dfactors.append(sgn * smoothstep_d1(r) / self.margin)
        g = np.empty(x.shape)
        for ax in range(self.grid.dim):
            comp = dfactors[ax]
            for other in range(self.grid.dim):
                if other != ax:
                    comp = comp * factors[other]
            g[..., ax] = comp
        return g

    def values(self):
        """zeta sampled at the grid's spatial nodes."""
        return self(self.grid.coords())


def bump_cutoff(grid, margin):
    """Cutoff vanishing within `margin` of the box boundary, 1 beyond 2*margin."""
    margin = float(margin)
    half_min = 0.5 * min(b - a for a, b in grid.extent)
    if not 0.0 < margin < half_min:
        raise ValueError(f"margin must lie in (0, {half_min}), got {margin}")
    return Cutoff(grid=grid, margin=margin)
