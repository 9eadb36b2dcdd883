"""p-structure kernels: regularized flux, the half-power map F, the discrete
p-Laplacian, and the elementary vector inequalities behind the estimates."""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PParams",
    "flux_eps",
    "f_map",
    "p_laplacian_slice",
    "p_laplacian",
    "monotonicity_lhs_rhs",
    "lipschitz_bound_lhs_rhs",
    "young3",
]


@dataclass(frozen=True)
class PParams:
    """Exponent p >= 2 and regularization eps >= 0."""

    p: float
    eps: float = 0.0

    def __post_init__(self):
        if self.p < 2:
            raise ValueError(f"p must be >= 2, got {self.p}")
        if self.eps < 0:
            raise ValueError(f"eps must be >= 0, got {self.eps}")


def flux_eps(g, params):
    """(|g|^2 + eps^2)^((p-2)/2) g, the regularized flux. g has the vector
    components on the last axis."""
    g = np.asarray(g, dtype=float)
    s = np.sum(g * g, axis=-1) + params.eps ** 2
    w = s ** ((params.p - 2.0) / 2.0) if params.p != 2.0 else np.ones_like(s)
    return w[..., None] * g


def f_map(g, p):
    """F(g) = |g|^((p-2)/2) g, continuous at 0 for p >= 2."""
    g = np.asarray(g, dtype=float)
    mag = np.sqrt(np.sum(g * g, axis=-1))
    if p == 2.0:
        return np.array(g)
    w = mag ** ((p - 2.0) / 2.0)
    return w[..., None] * g


def _edge_weight(sq, p):
    if p == 2.0:
        return np.ones_like(sq)
    return sq ** ((p - 2.0) / 2.0)


def half_node_flux_1d(grid, u_slice, params):
    """Flux at the nx-1 half nodes from one-sided differences."""
    h = grid.h[0]
    d = np.diff(np.asarray(u_slice, dtype=float)) / h
    w = _edge_weight(d * d + params.eps ** 2, params.p)
    return w * d


def half_node_flux_2d(grid, u_slice, params):
    """Edge fluxes on the two staggered edge families.

    Along each edge the longitudinal difference is one-sided; the transverse
    gradient component is the average of the central differences at the two
    endpoints (one-sided at the lateral boundary). Returns (qx, qy) with
    qx shape (nx-1, ny) and qy shape (nx, ny-1).
    """
    u = np.asarray(u_slice, dtype=float)
    hx, hy = grid.h
    e2 = params.eps ** 2
    p = params.p

    def cdiff(a, ax, h):
        d = np.empty_like(a)
        a = np.moveaxis(a, ax, 0)
        out = np.moveaxis(d, ax, 0)
        out[1:-1] = (a[2:] - a[:-2]) / (2 * h)
        out[0] = (-3 * a[0] + 4 * a[1] - a[2]) / (2 * h)
        out[-1] = (3 * a[-1] - 4 * a[-2] + a[-3]) / (2 * h)
        return d

    uy = cdiff(u, 1, hy)
    ux = cdiff(u, 0, hx)
    dx = (u[1:, :] - u[:-1, :]) / hx
    tx = 0.5 * (uy[1:, :] + uy[:-1, :])
    qx = _edge_weight(dx * dx + tx * tx + e2, p) * dx
    dy = (u[:, 1:] - u[:, :-1]) / hy
    ty = 0.5 * (ux[:, 1:] + ux[:, :-1])
    qy = _edge_weight(dy * dy + ty * ty + e2, p) * dy
    return qx, qy


def p_laplacian_slice(grid, u_slice, params):
    """Discrete p-Laplacian of one time slice: divergence of the staggered
    half-node flux, exactly 0 for affine u. Defined at interior nodes;
    lateral boundary entries are set to 0."""
    out = np.zeros(grid.space_shape)
    if grid.dim == 1:
        q = half_node_flux_1d(grid, u_slice, params)
        out[1:-1] = np.diff(q) / grid.h[0]
    else:
        qx, qy = half_node_flux_2d(grid, u_slice, params)
        hx, hy = grid.h
        out[1:-1, 1:-1] = ((qx[1:, 1:-1] - qx[:-1, 1:-1]) / hx
                           + (qy[1:-1, 1:] - qy[1:-1, :-1]) / hy)
    return out


def p_laplacian(field, params):
    """p_laplacian_slice applied at every time level; returns a values array
    of grid.shape (boundary columns 0)."""
    grid = field.grid
    out = np.empty(grid.shape)
    for k in range(grid.nt):
        out[k] = p_laplacian_slice(grid, field.values[k], params)
    return out


def monotonicity_lhs_rhs(a, b, p):
    """Both sides of (4/p^2)|F(b)-F(a)|^2 <= <|b|^(p-2)b - |a|^(p-2)a, b-a>.

    a, b: vectors with components on the last axis. Returns (lhs, rhs)."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    df = f_map(b, p) - f_map(a, p)
    lhs = (4.0 / p ** 2) * np.sum(df * df, axis=-1)
    params = PParams(p=p, eps=0.0)
    dflux = flux_eps(b, params) - flux_eps(a, params)
    rhs = np.sum(dflux * (b - a), axis=-1)
    return lhs, rhs


def lipschitz_bound_lhs_rhs(a, b, p):
    """Both sides of ||b|^(p-2)b - |a|^(p-2)a| <=
    (p-1)(|b|^((p-2)/2) + |a|^((p-2)/2)) |F(b) - F(a)|."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    params = PParams(p=p, eps=0.0)
    dflux = flux_eps(b, params) - flux_eps(a, params)
    lhs = np.sqrt(np.sum(dflux * dflux, axis=-1))
    ma = np.sqrt(np.sum(a * a, axis=-1))
    mb = np.sqrt(np.sum(b * b, axis=-1))
    df = f_map(b, p) - f_map(a, p)
    ex = (p - 2.0) / 2.0
    rhs = (p - 1.0) * (mb ** ex + ma ** ex) * np.sqrt(np.sum(df * df, axis=-1))
    return lhs, rhs


def young3(a, b, c, p, eps_y):
    """Three-factor Young bound: returns
    (a*b*c, eps_y^2 a^2/2 + eps_y^-p b^p/p + (p-2) c^(2p/(p-2)) / (2p))."""
    if p <= 2.0:
        raise ValueError("young3 requires p > 2 (exponent 2p/(p-2))")
    if eps_y <= 0:
        raise ValueError("eps_y must be positive")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    if np.any(a < 0) or np.any(b < 0) or np.any(c < 0):
        raise ValueError("young3 requires nonnegative factors")
    lhs = a * b * c
    rhs = (eps_y ** 2 * a ** 2 / 2.0
           + eps_y ** (-p) * b ** p / p
           + (p - 2.0) * c ** (2.0 * p / (p - 2.0)) / (2.0 * p))
    return lhs, rhs
