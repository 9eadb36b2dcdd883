"""Built-in obstacle catalog and the flat key=value scenario format."""

from dataclasses import dataclass, field as dc_field

import numpy as np

from .fields import Obstacle
from .geometry import build_grid
from .pflux import PParams
from .solver import SolverConfig

__all__ = [
    "Scenario",
    "ScenarioError",
    "parse_scenario",
    "make_obstacle",
    "CATALOG",
    "CHECK_NAMES",
]

CHECK_NAMES = ("constraint", "boundary", "vi", "supersolution", "theorem2",
               "theorem5", "corollary6", "viscosity")


class ScenarioError(ValueError):
    """Invalid scenario file; message carries the offending line number."""


# ---------------------------------------------------------------------------
# catalog

def _axis_params(dim, extent):
    lo = np.array([a for a, b in extent])
    span = np.array([b - a for a, b in extent])
    return lo, span


def make_constant(dim, extent, level=0.5):
    level = float(level)

    def psi(x, t):
        return np.full(np.shape(x)[:-1], level)

    def zero(x, t):
        return np.zeros(np.shape(x)[:-1])

    def gz(x, t):
        return np.zeros(np.shape(x))

    def hz(x, t):
        return np.zeros(np.shape(x) + (dim,))

    return Obstacle(dim, psi, zero, gz, hz, name="constant")


def make_affine_inactive(dim, extent, offset=0.0, slope=3.0, gap=1.0):
    slope_v = np.full(dim, float(slope)) if np.isscalar(slope) else np.asarray(slope, float)
    offset, gap = float(offset), float(gap)

    def trace(x, t):
        return offset + np.sum(slope_v * x, axis=-1)

    def psi(x, t):
        return trace(x, t) - gap

    def zero(x, t):
        return np.zeros(np.shape(x)[:-1])

    def gpsi(x, t):
        return np.broadcast_to(slope_v, np.shape(x)).copy()

    def hz(x, t):
        return np.zeros(np.shape(x) + (dim,))

    return Obstacle(dim, psi, zero, gpsi, hz, boundary_trace=trace,
                    name="affine-inactive")


def make_parabolic_hump(dim, extent, height=1.0, curvature=10.0, center=None):
    lo, span = _axis_params(dim, extent)
    c = lo + 0.5 * span if center is None else np.asarray(center, float)
    height, curvature = float(height), float(curvature)

    def psi(x, t):
        r2 = np.sum((x - c) ** 2, axis=-1)
        return height - curvature * r2

    def zero(x, t):
        return np.zeros(np.shape(x)[:-1])

    def gpsi(x, t):
        return -2.0 * curvature * (x - c)

    def hpsi(x, t):
        eye = -2.0 * curvature * np.eye(dim)
        return np.broadcast_to(eye, np.shape(x) + (dim,)).copy()

    def trace(x, t):
        return np.maximum(psi(x, t), 0.0)

    return Obstacle(dim, psi, zero, gpsi, hpsi, boundary_trace=trace,
                    name="parabolic-hump")


def make_shrinking_hump(dim, extent, amplitude=0.5, rate=0.9):
    lo, span = _axis_params(dim, extent)
    A, R = float(amplitude), float(rate)

    def _s(x):
        return np.prod(np.sin(np.pi * (x - lo) / span), axis=-1)

    def psi(x, t):
        return A * (1.0 - R * t) * _s(x)

    def psi_t(x, t):
        return -A * R * _s(x)

    def gpsi(x, t):
        x = np.asarray(x, float)
        xi = np.pi * (x - lo) / span
        s = np.sin(xi)
        out = np.empty(np.shape(x))
        for ax in range(dim):
            comp = (np.pi / span[ax]) * np.cos(xi[..., ax])
            for other in range(dim):
                if other != ax:
                    comp = comp * s[..., other]
            out[..., ax] = comp
        fac = A * (1.0 - R * np.asarray(t, float))
        if fac.ndim:
            fac = fac[..., None]
        return fac * out

    def hpsi(x, t):
        x = np.asarray(x, float)
        xi = np.pi * (x - lo) / span
        s = np.sin(xi)
        cs = np.cos(xi)
        H = np.empty(np.shape(x) + (dim,))
        for i in range(dim):
            for j in range(dim):
                if i == j:
                    comp = -(np.pi / span[i]) ** 2 * s[..., i]
                    others = [k for k in range(dim) if k != i]
                else:
                    comp = (np.pi / span[i]) * (np.pi / span[j]) * cs[..., i] * cs[..., j]
                    others = [k for k in range(dim) if k not in (i, j)]
                for k in others:
                    comp = comp * s[..., k]
                H[..., i, j] = comp
        fac = A * (1.0 - R * np.asarray(t, float))
        if fac.ndim:
            fac = fac[..., None, None]
        return fac * H

    return Obstacle(dim, psi, psi_t, gpsi, hpsi, name="shrinking-hump")


def make_traveling_hump(dim, extent, amplitude=0.6, width=0.25, speed=0.4,
                        start=0.3):
    lo, span = _axis_params(dim, extent)
    A, w, v, s0 = float(amplitude), float(width), float(speed), float(start)

    def _parts(x, t):
        x = np.asarray(x, float)
        xi = (x[..., 0] - lo[0]) / span[0]
        z = (xi - s0 - v * t) / w
        e = np.exp(-z * z)
        sx = np.sin(np.pi * xi)
        cx = np.cos(np.pi * xi)
        return xi, z, e, sx, cx

    def _yfactor(x, t):
        if dim == 1:
            return np.ones(np.shape(x)[:-1]), None, None
        eta = (x[..., 1] - lo[1]) / span[1]
        return np.sin(np.pi * eta), np.cos(np.pi * eta), eta

    def psi(x, t):
        _, _, e, sx, _ = _parts(x, t)
        sy, _, _ = _yfactor(x, t)
        return A * sx * e * sy

    def psi_t(x, t):
        _, z, e, sx, _ = _parts(x, t)
        sy, _, _ = _yfactor(x, t)
        return A * sx * e * (2.0 * z * v / w) * sy

    def _f_xi(x, t):
        _, z, e, sx, cx = _parts(x, t)
        return e * (np.pi * cx - 2.0 * (z / w) * sx)

    def _f_xixi(x, t):
        _, z, e, sx, cx = _parts(x, t)
        return e * (-np.pi * np.pi * sx - 4.0 * np.pi * (z / w) * cx
                    - 2.0 * sx / (w * w) + 4.0 * sx * z * z / (w * w))

    def gpsi(x, t):
        sy, cy, _ = _yfactor(x, t)
        out = np.empty(np.shape(x))
        out[..., 0] = A * _f_xi(x, t) / span[0] * sy
        if dim == 2:
            _, _, e, sx, _ = _parts(x, t)
            out[..., 1] = A * sx * e * np.pi * cy / span[1]
        return out

    def hpsi(x, t):
        sy, cy, _ = _yfactor(x, t)
        H = np.empty(np.shape(x) + (dim,))
        H[..., 0, 0] = A * _f_xixi(x, t) / span[0] ** 2 * sy
        if dim == 2:
            _, _, e, sx, _ = _parts(x, t)
            H[..., 0, 1] = A * _f_xi(x, t) * np.pi * cy / (span[0] * span[1])
            H[..., 1, 0] = H[..., 0, 1]
            H[..., 1, 1] = -A * sx * e * np.pi ** 2 * sy / span[1] ** 2
        return H

    return Obstacle(dim, psi, psi_t, gpsi, hpsi, name="traveling-hump")


CATALOG = {
    "constant": (make_constant, ("level",)),
    "affine-inactive": (make_affine_inactive, ("offset", "slope", "gap")),
    "parabolic-hump": (make_parabolic_hump, ("height", "curvature", "center")),
    "shrinking-hump": (make_shrinking_hump, ("amplitude", "rate")),
    "traveling-hump": (make_traveling_hump, ("amplitude", "width", "speed", "start")),
}


def make_obstacle(obstacle_id, dim, extent, params=None):
    if obstacle_id not in CATALOG:
        raise ScenarioError(f"unknown obstacle id {obstacle_id!r}; "
                            f"catalog: {sorted(CATALOG)}")
    factory, names = CATALOG[obstacle_id]
    params = dict(params or {})
    unknown = set(params) - set(names)
    if unknown:
        raise ScenarioError(f"unknown obstacle parameters {sorted(unknown)} "
                            f"for {obstacle_id!r}")
    return factory(dim, extent, **params)


# ---------------------------------------------------------------------------
# scenario file format

@dataclass
class Scenario:
    name: str = "unnamed"
    dim: int = 1
    extent: tuple = ((0.0, 1.0),)
    nx: int = 129
    T: float = 1.0
    nt: int = 129
    p: float = 3.0
    eps: float = 0.0
    eps_list: tuple = ()
    obstacle_id: str = "shrinking-hump"
    obstacle_params: dict = dc_field(default_factory=dict)
    step_tol: float = None
    max_sweeps: int = None
    checks: dict = dc_field(default_factory=lambda: {n: True for n in CHECK_NAMES})
    refine_levels: int = 2
    cutoff_margin: float = 0.15

    def grid(self, refine=0):
        scale = 2 ** refine
        nx = tuple((n - 1) * scale + 1 for n in
                   (self.nx if isinstance(self.nx, tuple) else (self.nx,) * self.dim))
        nt = (self.nt - 1) * scale + 1
        return build_grid(self.dim, self.extent, nx, self.T, nt)

    def obstacle(self):
        return make_obstacle(self.obstacle_id, self.dim, self.extent,
                             self.obstacle_params)

    def solver_config(self, eps=None):
        return SolverConfig(params=PParams(p=self.p, eps=self.eps if eps is None else eps),
                            step_tol=self.step_tol, max_sweeps=self.max_sweeps)


def _floats(value):
    return tuple(float(v) for v in value.replace(",", " ").split())


def parse_scenario(path):
    """Parse a UTF-8 `key = value` scenario file; '#' starts a comment.
    Unknown keys are rejected with their line number."""
    sc = Scenario()
    checks_set = {}
    seen = set()
    with open(path, encoding="utf-8") as f:
        lines = f.readlines()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            known = _apply_key(sc, checks_set, key, value)
        except ScenarioError as exc:
            raise ScenarioError(f"{path}:{lineno}: {exc}") from None
        except Exception as exc:
            raise ScenarioError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from exc
        if not known:
            raise ScenarioError(f"{path}:{lineno}: unknown key {key!r}")
        seen.add(key)
    if "grid.nx" not in seen:
        raise ScenarioError(f"{path}: missing required key 'grid.nx'")
    sc.checks.update(checks_set)
    if sc.refine_levels < 1:
        raise ScenarioError(f"{path}: refine.levels must be >= 1")
    if sc.obstacle_id not in CATALOG:
        raise ScenarioError(f"{path}: unknown obstacle id {sc.obstacle_id!r}")
    return sc


def _apply_key(sc, checks_set, key, value):
    """Apply one key to the scenario; returns False for unknown keys."""
    if key == "scenario.name":
        sc.name = value
    elif key == "grid.dim":
        sc.dim = int(value)
        if sc.dim == 2 and len(sc.extent) == 1:
            sc.extent = ((0.0, 1.0), (0.0, 1.0))
    elif key == "grid.extent":
        vals = _floats(value)
        if len(vals) % 2:
            raise ValueError("extent needs pairs of floats")
        sc.extent = tuple((vals[i], vals[i + 1]) for i in range(0, len(vals), 2))
    elif key == "grid.nx":
        vals = _floats(value)
        sc.nx = int(vals[0]) if len(vals) == 1 else tuple(int(v) for v in vals)
    elif key == "grid.T":
        sc.T = float(value)
    elif key == "grid.nt":
        sc.nt = int(value)
    elif key == "p":
        sc.p = float(value)
    elif key == "eps":
        sc.eps = float(value)
    elif key == "eps_list":
        sc.eps_list = _floats(value)
    elif key == "obstacle.id":
        sc.obstacle_id = value
    elif key.startswith("obstacle."):
        name = key[len("obstacle."):]
        vals = _floats(value)
        sc.obstacle_params[name] = vals[0] if len(vals) == 1 else vals
    elif key == "solver.step_tol":
        sc.step_tol = float(value)
    elif key == "solver.max_sweeps":
        sc.max_sweeps = int(value)
    elif key.startswith("checks."):
        name = key[len("checks."):]
        if name not in CHECK_NAMES:
            raise ScenarioError(f"unknown check {name!r}; known: {CHECK_NAMES}")
        if value not in ("on", "off"):
            raise ValueError("check value must be 'on' or 'off'")
        checks_set[name] = value == "on"
    elif key == "refine.levels":
        sc.refine_levels = int(value)
    elif key == "cutoff.margin":
        sc.cutoff_margin = float(value)
    else:
        return False
    return True
