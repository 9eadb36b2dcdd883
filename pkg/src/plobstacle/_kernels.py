"""Numba kernels for the projected nonlinear Gauss-Seidel sweeps.

The residual discretization here must match pflux.p_laplacian_slice exactly;
the solver tests assert that agreement.
"""

import numpy as np
from numba import njit

JAC_FLOOR = 1.0e-12


@njit(cache=True)
def sweep_1d(v, uprev, psi, tau, h, p, eps, omega, project, forward):
    """One projected Gauss-Seidel sweep with a single nodewise Newton step.

    The Newton slope uses eps floored at JAC_FLOOR inside the Jacobian only;
    the residual keeps the exact eps.
    """
    n = v.shape[0]
    e2 = eps * eps
    ej = eps if eps > JAC_FLOOR else JAC_FLOOR
    ej2 = ej * ej
    ex = (p - 2.0) / 2.0
    if forward:
        start, stop, step = 1, n - 1, 1
    else:
        start, stop, step = n - 2, 0, -1
    for i in range(start, stop, step):
        dl = (v[i] - v[i - 1]) / h
        dr = (v[i + 1] - v[i]) / h
        wl = (dl * dl + e2) ** ex
        wr = (dr * dr + e2) ** ex
        r = (v[i] - uprev[i]) / tau - (wr * dr - wl * dl) / h
        sl = (dl * dl + ej2) ** ex + (p - 2.0) * (dl * dl + ej2) ** (ex - 1.0) * dl * dl
        sr = (dr * dr + ej2) ** ex + (p - 2.0) * (dr * dr + ej2) ** (ex - 1.0) * dr * dr
        slope = 1.0 / tau + (sl + sr) / (h * h)
        vn = v[i] - omega * r / slope
        if project and vn < psi[i]:
            vn = psi[i]
        v[i] = vn


@njit(cache=True)
def comp_residual_1d(v, uprev, psi, tau, h, p, eps, project):
    """Max complementarity residual over interior nodes: |r| where inactive,
    max(-r, 0) where clamped to the obstacle."""
    n = v.shape[0]
    e2 = eps * eps
    ex = (p - 2.0) / 2.0
    worst = 0.0
    for i in range(1, n - 1):
        dl = (v[i] - v[i - 1]) / h
        dr = (v[i + 1] - v[i]) / h
        wl = (dl * dl + e2) ** ex
        wr = (dr * dr + e2) ** ex
        r = (v[i] - uprev[i]) / tau - (wr * dr - wl * dl) / h
        if project and v[i] <= psi[i]:
            res = -r if r < 0.0 else 0.0
        else:
            res = abs(r)
        if res > worst:
            worst = res
    return worst


@njit(cache=True)
def _edge_terms_2d(v, i, j, hx, hy, e2, ej2, p):
    """Flux divergence at interior node (i, j) and the frozen-direction
    Newton slope sum; ej2 floors the slope weights only."""
    ex = (p - 2.0) / 2.0
    nx = v.shape[0]
    ny = v.shape[1]
    div = 0.0
    slope = 0.0
    # x-edges: (i-1,j)-(i,j) and (i,j)-(i+1,j)
    for s in range(2):
        ia = i - 1 + s
        d = (v[ia + 1, j] - v[ia, j]) / hx
        t = 0.0
        for node in range(ia, ia + 2):
            if j == 0:
                t += (-3.0 * v[node, 0] + 4.0 * v[node, 1] - v[node, 2]) / (2.0 * hy)
            elif j == ny - 1:
                t += (3.0 * v[node, ny - 1] - 4.0 * v[node, ny - 2] + v[node, ny - 3]) / (2.0 * hy)
            else:
                t += (v[node, j + 1] - v[node, j - 1]) / (2.0 * hy)
        t *= 0.5
        sq = d * d + t * t + e2
        q = sq ** ex * d
        if s == 0:
            div -= q / hx
        else:
            div += q / hx
        sj = sq if sq > ej2 else ej2
        slope += (sj ** ex + (p - 2.0) * sj ** (ex - 1.0) * d * d) / (hx * hx)
    # y-edges
    for s in range(2):
        ja = j - 1 + s
        d = (v[i, ja + 1] - v[i, ja]) / hy
        t = 0.0
        for node in range(ja, ja + 2):
            if i == 0:
                t += (-3.0 * v[0, node] + 4.0 * v[1, node] - v[2, node]) / (2.0 * hx)
            elif i == nx - 1:
                t += (3.0 * v[nx - 1, node] - 4.0 * v[nx - 2, node] + v[nx - 3, node]) / (2.0 * hx)
            else:
                t += (v[i + 1, node] - v[i - 1, node]) / (2.0 * hx)
        t *= 0.5
        sq = d * d + t * t + e2
        q = sq ** ex * d
        if s == 0:
            div -= q / hy
        else:
            div += q / hy
        sj = sq if sq > ej2 else ej2
        slope += (sj ** ex + (p - 2.0) * sj ** (ex - 1.0) * d * d) / (hy * hy)
    return div, slope


@njit(cache=True)
def sweep_2d(v, uprev, psi, tau, hx, hy, p, eps, omega, project, forward):
    nx = v.shape[0]
    ny = v.shape[1]
    ej = eps if eps > JAC_FLOOR else JAC_FLOOR
    e2 = eps * eps
    ej2 = ej * ej
    if forward:
        irange = range(1, nx - 1)
    else:
        irange = range(nx - 2, 0, -1)
    for i in irange:
        if forward:
            jrange = range(1, ny - 1)
        else:
            jrange = range(ny - 2, 0, -1)
        for j in jrange:
            div, slope_j = _edge_terms_2d(v, i, j, hx, hy, e2, ej2, p)
            r = (v[i, j] - uprev[i, j]) / tau - div
            slope = 1.0 / tau + slope_j
            vn = v[i, j] - omega * r / slope
            if project and vn < psi[i, j]:
                vn = psi[i, j]
            v[i, j] = vn


@njit(cache=True)
def comp_residual_2d(v, uprev, psi, tau, hx, hy, p, eps, project):
    nx = v.shape[0]
    ny = v.shape[1]
    e2 = eps * eps
    worst = 0.0
    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            div, _ = _edge_terms_2d(v, i, j, hx, hy, e2, 1.0, p)
            r = (v[i, j] - uprev[i, j]) / tau - div
            if project and v[i, j] <= psi[i, j]:
                res = -r if r < 0.0 else 0.0
            else:
                res = abs(r)
            if res > worst:
                worst = res
    return worst
