"""Numerical checks for the theorem-level claims: the variational inequality,
the supersolution property, the time-derivative formula, the regularization
convergence, the difference-quotient gradient estimate, the integration-by-
parts identity, and the necessary condition on the coincidence set."""

from dataclasses import dataclass, field as dc_field

import numpy as np

from .fields import ScalarField, gradient, gradient_slice, lq_norm, time_diff
from .geometry import NodeClass, classify_boundary
from .pflux import PParams, f_map, flux_eps, half_node_flux_1d, half_node_flux_2d, p_laplacian
from .solver import solve

__all__ = [
    "CoincidenceMask",
    "CheckResult",
    "VerificationReport",
    "TestFunction",
    "build_test_functions",
    "default_tol_xi",
    "detect_coincidence",
    "theorem2_residual",
    "vi_residual",
    "supersolution_test",
    "eps_convergence_study",
    "theorem5_estimate",
    "corollary6_identity",
    "viscosity_necessary_condition",
    "obstacle_p_laplacian",
]


# ---------------------------------------------------------------------------
# coincidence set

@dataclass(frozen=True)
class CoincidenceMask:
    """Nodewise contact indicator: True where u - psi <= tol_xi."""

    mask: np.ndarray
    tol_xi: float

    def interior(self, grid):
        return self.mask & (classify_boundary(grid) == NodeClass.INTERIOR)

    def complement_interior(self, grid):
        return (~self.mask) & (classify_boundary(grid) == NodeClass.INTERIOR)


def default_tol_xi(grid, obstacle):
    h = max(grid.h)
    return 10.0 * (h * h + grid.tau) * (1.0 + obstacle.hess_norm_sup(grid))


def detect_coincidence(result, obstacle, tol_xi=None):
    """Detect the contact set {u - psi <= tol_xi}. Projection makes true
    contact exact, so tol_xi may be taken much smaller than the default when
    only the discrete active set is wanted."""
    grid = result.u.grid
    if tol_xi is None:
        tol_xi = default_tol_xi(grid, obstacle)
    gap = result.u.values - obstacle.sample(grid)
    return CoincidenceMask(mask=gap <= tol_xi, tol_xi=float(tol_xi))


# ---------------------------------------------------------------------------
# report plumbing

@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool
    details: dict = dc_field(default_factory=dict)


@dataclass
class VerificationReport:
    checks: list = dc_field(default_factory=list)
    meta: dict = dc_field(default_factory=dict)

    def add(self, check):
        if any(c.name == check.name for c in self.checks):
            raise ValueError(f"duplicate check {check.name}")
        self.checks.append(check)

    @property
    def all_passed(self):
        return all(c.passed for c in self.checks)

    def as_text(self):
        lines = []
        for k in sorted(self.meta):
            lines.append(f"# {k} = {self.meta[k]}")
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            lines.append(f"[{status}] {c.name}: value={c.value:.6e} tol={c.tolerance:.6e}")
            for k in sorted(c.details):
                lines.append(f"    {k} = {c.details[k]}")
        return "\n".join(lines) + "\n"

    def as_keyvalues(self):
        lines = []
        for k in sorted(self.meta):
            lines.append(f"meta.{k} = {self.meta[k]}")
        for c in self.checks:
            lines.append(f"{c.name}.value = {c.value:.17g}")
            lines.append(f"{c.name}.tolerance = {c.tolerance:.17g}")
            lines.append(f"{c.name}.passed = {int(c.passed)}")
            for k in sorted(c.details):
                v = c.details[k]
                if isinstance(v, float):
                    v = f"{v:.17g}"
                lines.append(f"{c.name}.{k} = {v}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# smooth space-time test functions

def _bump(r):
    """C^2 bump (1 - r^2)^3 on |r| < 1, 0 outside."""
    s = np.clip(1.0 - r * r, 0.0, None)
    return s ** 3


def _bump_d1(r):
    s = np.clip(1.0 - r * r, 0.0, None)
    return -6.0 * r * s * s


class TestFunction:
    """Separable space-time bump with analytic value, time derivative and
    spatial gradient; compactly supported inside the open cylinder."""

    def __init__(self, centers, widths, t_center, t_width, modulate=None,
                 nonnegative=True):
        self.centers = np.asarray(centers, dtype=float)
        self.widths = np.asarray(widths, dtype=float)
        self.t_center = float(t_center)
        self.t_width = float(t_width)
        # modulate: None, or axis index whose bump is replaced by the signed
        # profile r * (1 - r^2)^3
        self.modulate = modulate
        self.nonnegative = nonnegative and modulate is None

    def _space_factors(self, x):
        rs = [(x[..., ax] - self.centers[ax]) / self.widths[ax]
              for ax in range(len(self.centers))]
        fs, dfs = [], []
        for ax, r in enumerate(rs):
            if self.modulate == ax:
                fs.append(r * _bump(r))
                dfs.append((_bump(r) + r * _bump_d1(r)) / self.widths[ax])
            else:
                fs.append(_bump(r))
                dfs.append(_bump_d1(r) / self.widths[ax])
        return fs, dfs

    def _tfactor(self, t):
        r = (np.asarray(t, dtype=float) - self.t_center) / self.t_width
        return _bump(r), _bump_d1(r) / self.t_width

    def value(self, x, t):
        fs, _ = self._space_factors(np.asarray(x, dtype=float))
        ft, _ = self._tfactor(t)
        out = ft
        for f in fs:
            out = out * f
        return out

    def dt(self, x, t):
        fs, _ = self._space_factors(np.asarray(x, dtype=float))
        _, dft = self._tfactor(t)
        out = dft
        for f in fs:
            out = out * f
        return out

    def grad(self, x, t):
        x = np.asarray(x, dtype=float)
        fs, dfs = self._space_factors(x)
        ft, _ = self._tfactor(t)
        g = np.empty(x.shape)
        for ax in range(len(self.centers)):
            comp = ft * dfs[ax]
            for other in range(len(self.centers)):
                if other != ax:
                    comp = comp * fs[other]
            g[..., ax] = comp
        return g


def build_test_functions(grid, count=20, margin_frac=0.05, seed=7):
    """Deterministic family of bumps supported strictly inside the cylinder
    (a margin_frac band is kept clear of the boundary), mixing nonnegative
    members and signed (modulated) variants."""
    rng = np.random.default_rng(seed)
    lo = np.array([a for a, b in grid.extent])
    hi = np.array([b for a, b in grid.extent])
    span = hi - lo
    funcs = []
    for j in range(count):
        widths = span * rng.uniform(0.12, 0.25, size=grid.dim)
        clear = margin_frac * span
        centers = rng.uniform(lo + widths + clear, hi - widths - clear)
        t_width = grid.T * rng.uniform(0.12, 0.25)
        t_clear = margin_frac * grid.T
        t_center = rng.uniform(t_width + t_clear, grid.T - t_width - t_clear)
        modulate = None
        if j % 3 == 2:
            modulate = int(rng.integers(0, grid.dim))
        funcs.append(TestFunction(centers, widths, t_center, t_width,
                                  modulate=modulate))
    return funcs


def _sample_tf(tf, grid, what="value"):
    x = grid.coords()
    out = None
    for k, t in enumerate(grid.times):
        if what == "value":
            v = tf.value(x, t)
        elif what == "dt":
            v = tf.dt(x, t)
        else:
            v = tf.grad(x, t)
        if out is None:
            out = np.empty((grid.nt,) + v.shape)
        out[k] = v
    return out


# ---------------------------------------------------------------------------
# analytic p-Laplacian of the obstacle

def obstacle_p_laplacian(obstacle, grid, p):
    """Delta_p psi from exact derivatives:
    |grad|^{p-2} (Lap + (p-2) <H g, g>/|g|^2), with the value 0 at critical
    points when p > 2 and the plain Laplacian when p = 2."""
    x = grid.coords()
    out = np.empty(grid.shape)
    for k, t in enumerate(grid.times):
        g = obstacle.grad_psi(x, t)
        H = obstacle.hess_psi(x, t)
        lap = np.trace(H, axis1=-2, axis2=-1)
        g2 = np.sum(g * g, axis=-1)
        if p == 2.0:
            out[k] = lap
            continue
        hgg = np.einsum("...ij,...i,...j->...", H, g, g)
        safe = g2 > 0
        val = np.zeros_like(g2)
        val[safe] = g2[safe] ** ((p - 2.0) / 2.0) * (
            lap[safe] + (p - 2.0) * hgg[safe] / g2[safe])
        out[k] = val
    return out


# ---------------------------------------------------------------------------
# Theorem 2

def interior_region(grid, margin):
    """Boolean node mask excluding a collar of width `margin` near the
    lateral boundary, t = 0 and t = T."""
    x = grid.coords()
    dist = np.full(grid.space_shape, np.inf)
    for ax, (a, b) in enumerate(grid.extent):
        dist = np.minimum(dist, np.minimum(x[..., ax] - a, b - x[..., ax]))
    space_ok = dist >= margin - 1e-12
    t = grid.times
    t_ok = (t >= margin - 1e-12) & (t <= grid.T - margin + 1e-12)
    return t_ok.reshape((grid.nt,) + (1,) * grid.dim) & space_ok


def theorem2_residual(result, obstacle, mask, interior_margin, params):
    """Residual of u_t = Delta_p u + (psi_t - Delta_p psi) chi_Xi on the
    margin-shrunk cylinder; returns (L^{p/(p-1)} norm, residual ScalarField,
    region mask)."""
    grid = result.u.grid
    ut = time_diff(result.u).values
    lap_u = p_laplacian(result.u, params)
    src = obstacle.sample_psi_t(grid) - obstacle_p_laplacian(obstacle, grid, params.p)
    r = ut - lap_u - src * mask.mask
    region = interior_region(grid, interior_margin)
    q = params.p / (params.p - 1.0)
    norm = lq_norm((grid, r), q, region_mask=region)
    return norm, ScalarField(grid, r), region


# ---------------------------------------------------------------------------
# variational inequality (Eq. 1) and supersolution (Eq. 2)

def _eq1_slack(result, tf, s, flux, ut, grid):
    phi = _sample_tf(tf, grid, "value")
    phi_t = _sample_tf(tf, grid, "dt")
    gphi = _sample_tf(tf, grid, "grad")
    w = grid.quad_weights()
    # phi_tilde = u + s*phi: grad(phi_tilde - u) = s grad(phi),
    # d(phi_tilde)/dt = u_t + s phi_t, final-time term vanishes (phi(T)=0)
    term_flux = np.sum(w * s * np.sum(flux * gphi, axis=-1))
    term_time = np.sum(w * s * phi * (ut + s * phi_t))
    return float(term_flux + term_time)


def vi_residual(result, testset, params, obstacle, s_mag=0.05):
    """Minimum discrete Eq.-(1) slack over admissible perturbations
    phi = u + s*phi_j. Returns (min_slack, records)."""
    grid = result.u.grid
    gap = result.u.values - obstacle.sample(grid)
    flux = flux_eps(gradient(result.u).values, PParams(p=params.p, eps=0.0))
    ut = time_diff(result.u).values
    records = []
    min_slack = 0.0  # slack at phi = u is exactly 0 by construction
    for j, tf in enumerate(testset):
        phi = _sample_tf(tf, grid, "value")
        for s in (s_mag, -s_mag):
            # admissibility: u + s*phi >= psi everywhere
            if np.min(gap + s * phi) < 0.0:
                records.append((j, s, None, "skipped: not admissible"))
                continue
            slack = _eq1_slack(result, tf, s, flux, ut, grid)
            records.append((j, s, slack, "ok"))
            min_slack = min(min_slack, slack)
    return min_slack, records


def supersolution_test(result, testset, params):
    """Minimum over nonnegative phi of the Eq.-(2) integral
    integral <|grad u|^{p-2} grad u, grad phi> - u phi_t."""
    grid = result.u.grid
    flux = flux_eps(gradient(result.u).values, PParams(p=params.p, eps=0.0))
    w = grid.quad_weights()
    worst = np.inf
    values = []
    for tf in testset:
        if not tf.nonnegative:
            continue
        gphi = _sample_tf(tf, grid, "grad")
        phi_t = _sample_tf(tf, grid, "dt")
        val = float(np.sum(w * (np.sum(flux * gphi, axis=-1)
                                - result.u.values * phi_t)))
        values.append(val)
        worst = min(worst, val)
    return worst, values


# ---------------------------------------------------------------------------
# Lemma 4 surrogate

def eps_convergence_study(grid, obstacle, config, eps_list):
    """Rows (eps, ||u_eps - u||_{L^p}, ||grad u_eps - grad u||_{L^p}) against
    the eps = 0 reference solve."""
    from dataclasses import replace
    p = config.params.p
    ref_cfg = replace(config, params=PParams(p=p, eps=0.0))
    ref = solve(grid, obstacle, ref_cfg)
    gref = gradient(ref.u).values
    rows = []
    for eps in eps_list:
        if eps == 0.0:
            rows.append((0.0, 0.0, 0.0))
            continue
        res = solve(grid, obstacle, replace(config, params=PParams(p=p, eps=eps)))
        du = lq_norm((grid, res.u.values - ref.u.values), p)
        gdiff = gradient(res.u).values - gref
        dg = lq_norm((grid, np.sqrt(np.sum(gdiff * gdiff, axis=-1))), p)
        rows.append((float(eps), du, dg))
    return rows, ref


# ---------------------------------------------------------------------------
# Theorem 5 surrogate

def _dh_f_sq(grid, F):
    """|D_h F|^2: squared forward difference quotients of F at spacing h,
    averaged over the two orientations, summed over axes and components.
    Entries whose stencil leaves the grid are zero (the cutoff kills them)."""
    out = np.zeros(grid.shape)
    for ax, h in enumerate(grid.h):
        arr_ax = 1 + ax
        dF = np.diff(F, axis=arr_ax) / h      # lives on half nodes
        sq = np.sum(dF * dF, axis=-1)
        fwd = np.zeros(grid.shape)
        bwd = np.zeros(grid.shape)
        sl_lo = [slice(None)] * (1 + grid.dim)
        sl_hi = [slice(None)] * (1 + grid.dim)
        sl_lo[arr_ax] = slice(None, -1)
        sl_hi[arr_ax] = slice(1, None)
        fwd[tuple(sl_lo)] = sq
        bwd[tuple(sl_hi)] = sq
        out += 0.5 * (fwd + bwd)
    return out


def theorem5_estimate(result, obstacle, cutoff, params):
    """lhs = integral zeta^p |D_h F|^2 and the five right-hand integrals of
    the gradient estimate (unit constants); returns (lhs, rhs_terms, ratio)."""
    grid = result.u.grid
    p = params.p
    x = grid.coords()
    zeta = cutoff.values()
    gzeta = cutoff.gradient(x)
    zp = zeta ** p
    gz_p = np.sum(gzeta * gzeta, axis=-1) ** (p / 2.0)

    gu = gradient(result.u).values
    gu_mag2 = np.sum(gu * gu, axis=-1)
    F = f_map(gu, p)
    dhF2 = _dh_f_sq(grid, F)

    w = grid.quad_weights()
    ws = grid.quad_weights_space()
    lhs = float(np.sum(w * zp * dhF2))

    gu_p = gu_mag2 ** (p / 2.0)
    gpsi = np.empty(grid.shape + (grid.dim,))
    gpsit = np.empty(grid.shape + (grid.dim,))
    hess2 = np.empty(grid.shape)
    dt = 1e-6 * grid.T
    for k, t in enumerate(grid.times):
        gpsi[k] = obstacle.grad_psi(x, t)
        # grad psi_t by central differencing the analytic gradient in t
        gpsit[k] = (obstacle.grad_psi(x, t + dt) - obstacle.grad_psi(x, t - dt)) / (2 * dt)
        H = obstacle.hess_psi(x, t)
        hess2[k] = np.sum(H * H, axis=(-2, -1))
    gpsi_p = np.sum(gpsi * gpsi, axis=-1) ** (p / 2.0)
    gpsit_2 = np.sum(gpsit * gpsit, axis=-1)

    rhs_terms = {
        "grad_u_p": float(np.sum(w * (zp + gz_p) * gu_p)),
        "grad_u_2": float(np.sum(w * zp * gu_mag2)),
        "grad_psi_p": float(np.sum(w * gz_p * gpsi_p)),
        "hess_psi_p_and_grad_psit_2": float(np.sum(w * zp * (hess2 ** (p / 2.0) + gpsit_2))),
        "grad_psi_T_2": float(np.sum(ws * zp[-1] * np.sum(gpsi[-1] ** 2, axis=-1))),
    }
    total = sum(rhs_terms.values())
    ratio = 0.0 if lhs == 0.0 else lhs / total
    return lhs, rhs_terms, ratio


# ---------------------------------------------------------------------------
# Corollary 6

def corollary6_identity(result, testset, params):
    """Max over phi of |int phi Delta_p u + int <flux, grad phi>| with the
    divergence-theorem-consistent sign. The flux is evaluated at the half
    nodes of the staggered stencil and paired with the analytic grad phi
    there, so the mismatch is pure quadrature error, O(h^2)."""
    grid = result.u.grid
    lap_u = p_laplacian(result.u, params)
    wt = grid.quad_weights_time()
    ws = grid.quad_weights_space()
    worst = 0.0
    values = []
    for tf in testset:
        total = 0.0
        for k, t in enumerate(grid.times):
            x = grid.coords()
            phi = tf.value(x, t)
            term1 = np.sum(ws * phi * lap_u[k])
            if grid.dim == 1:
                q = half_node_flux_1d(grid, result.u.values[k], params)
                xs = grid.axes[0]
                xh = 0.5 * (xs[:-1] + xs[1:])
                gphi = tf.grad(xh[:, None], t)[..., 0]
                term2 = np.sum(q * gphi) * grid.h[0]
            else:
                qx, qy = half_node_flux_2d(grid, result.u.values[k], params)
                xs, ys = grid.axes
                xhx = 0.5 * (xs[:-1] + xs[1:])
                ptsx = np.stack(np.meshgrid(xhx, ys, indexing="ij"), axis=-1)
                gx = tf.grad(ptsx, t)[..., 0]
                yhy = 0.5 * (ys[:-1] + ys[1:])
                ptsy = np.stack(np.meshgrid(xs, yhy, indexing="ij"), axis=-1)
                gy = tf.grad(ptsy, t)[..., 1]
                term2 = (np.sum(qx * gx) + np.sum(qy * gy)) * grid.cell_volume
            total += wt[k] * (term1 + term2)
        values.append(float(total))
        worst = max(worst, abs(float(total)))
    return worst, values


# ---------------------------------------------------------------------------
# viscosity necessary condition

def viscosity_necessary_condition(result, obstacle, mask, params):
    """min over the detected interior coincidence set of psi_t - Delta_p psi.

    Returns (min_value, count); (None, 0) if the detected set is empty."""
    grid = result.u.grid
    region = mask.interior(grid)
    n = int(np.count_nonzero(region))
    if n == 0:
        return None, 0
    src = obstacle.sample_psi_t(grid) - obstacle_p_laplacian(obstacle, grid, params.p)
    return float(np.min(src[region])), n
