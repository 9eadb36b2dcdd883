"""Fields, discrete calculus, norms, shifts, obstacles."""

import numpy as np
import pytest

from plobstacle.fields import (Obstacle, ScalarField, divergence_slice,
                               gradient, gradient_slice, lq_norm, shift,
                               shift_by_length, time_diff)
from plobstacle.geometry import build_grid


def _grid1(nx=11, nt=11):
    return build_grid(1, (0.0, 1.0), nx, 1.0, nt)


def _field_from(grid, fn):
    x = grid.coords()
    vals = np.stack([fn(x, t) for t in grid.times])
    return ScalarField(grid, vals)


# -- gradient ---------------------------------------------------------------

def test_gradient_constant():
    g = _grid1()
    gr = gradient_slice(g, np.full(g.space_shape, 4.0))
    assert np.all(gr == 0.0)


def test_gradient_affine_exact():
    g = _grid1()
    gr = gradient_slice(g, 3.0 * g.axes[0])
    np.testing.assert_allclose(gr[:, 0], 3.0, atol=1e-13)


def test_gradient_quadratic_interior():
    g = _grid1()
    gr = gradient_slice(g, g.axes[0] ** 2)
    # central difference exact on quadratics: (0.36 - 0.16) / 0.2 = 1.0
    assert np.isclose(gr[5, 0], 1.0, atol=1e-13)
    # one-sided second-order closures are also exact on quadratics
    np.testing.assert_allclose(gr[:, 0], 2.0 * g.axes[0], atol=1e-12)


def test_gradient_field_shape():
    g = _grid1(nx=7, nt=5)
    f = _field_from(g, lambda x, t: np.sin(x[..., 0]) + t)
    assert gradient(f).values.shape == (5, 7, 1)


# -- divergence -------------------------------------------------------------

def test_divergence_constant_and_affine():
    g = build_grid(2, ((0, 1), (0, 1)), 11, 1.0, 3)
    x = g.coords()
    v = np.broadcast_to(np.array([1.5, -2.0]), x.shape).copy()
    assert np.all(divergence_slice(g, v) == 0.0)
    np.testing.assert_allclose(divergence_slice(g, x), 2.0, atol=1e-12)


def test_divergence_quadratic():
    g = build_grid(2, ((0, 1), (0, 1)), 11, 1.0, 3)
    x = g.coords()
    v = np.zeros(x.shape)
    v[..., 0] = x[..., 0] ** 2
    assert np.isclose(divergence_slice(g, v)[5, 3], 1.0, atol=1e-12)


# -- time derivative --------------------------------------------------------

def test_time_diff_linear_and_constant():
    g = _grid1(nx=5, nt=11)
    f = _field_from(g, lambda x, t: np.full(x.shape[:-1], t))
    np.testing.assert_allclose(time_diff(f).values, 1.0, atol=1e-12)
    c = _field_from(g, lambda x, t: np.full(x.shape[:-1], 2.0))
    assert np.all(time_diff(c).values == 0.0)


def test_time_diff_quadratic():
    g = _grid1(nx=5, nt=11)
    f = _field_from(g, lambda x, t: np.full(x.shape[:-1], t * t))
    assert np.isclose(time_diff(f).values[5, 2], 1.0, atol=1e-12)


def test_time_diff_requires_three_levels():
    g = build_grid(1, (0, 1), 5, 1.0, 2)
    f = _field_from(g, lambda x, t: np.zeros(x.shape[:-1]))
    with pytest.raises(ValueError):
        time_diff(f)


# -- norms ------------------------------------------------------------------

def test_lq_norm_constant():
    g = _grid1(nx=17, nt=13)
    f = _field_from(g, lambda x, t: np.ones(x.shape[:-1]))
    assert np.isclose(lq_norm(f, 2), 1.0, atol=1e-12)
    z = _field_from(g, lambda x, t: np.zeros(x.shape[:-1]))
    assert lq_norm(z, 2) == 0.0


def test_lq_norm_linear():
    g = _grid1(nx=201, nt=5)
    f = _field_from(g, lambda x, t: x[..., 0])
    assert np.isclose(lq_norm(f, 2), 1.0 / np.sqrt(3.0), atol=1e-4)


def test_lq_norm_validation_and_masking():
    g = _grid1(nx=5, nt=5)
    f = _field_from(g, lambda x, t: np.ones(x.shape[:-1]))
    with pytest.raises(ValueError):
        lq_norm(f, 0.5)
    with pytest.raises(ValueError):
        lq_norm(f, 2, weight=-np.ones(g.shape))
    mask = np.zeros(g.shape, dtype=bool)
    assert lq_norm(f, 2, region_mask=mask) == 0.0


# -- shifts -----------------------------------------------------------------

def test_shift_zero_is_identity():
    g = _grid1(nx=9, nt=3)
    f = _field_from(g, lambda x, t: np.sin(x[..., 0]))
    s = shift(f, 0, 0)
    np.testing.assert_array_equal(s.values, f.values)
    assert np.all(s.valid_mask())


def test_shift_affine():
    g = _grid1(nx=11, nt=3)
    f = _field_from(g, lambda x, t: x[..., 0])
    s = shift(f, 0, 1)
    valid = s.valid_mask()
    assert not valid[0, -1]
    np.testing.assert_allclose(s.values[valid] - f.values[valid], 0.1,
                               atol=1e-12)


def test_shift_indicator():
    g = _grid1(nx=11, nt=3)
    f = _field_from(g, lambda x, t: (x[..., 0] >= 0.5).astype(float))
    s = shift(f, 0, 1)
    # node x = 0.5 - h picks up the value at x = 0.5
    assert s.values[0, 4] == 1.0


def test_shift_by_length():
    g = _grid1(nx=11, nt=3)
    f = _field_from(g, lambda x, t: x[..., 0])
    s = shift_by_length(f, [0.2])
    assert np.isclose(s.values[0, 0], 0.2)
    with pytest.raises(ValueError):
        shift_by_length(f, [0.05 * 1.3])
    g2 = build_grid(2, ((0, 1), (0, 1)), 5, 1.0, 3)
    f2 = ScalarField(g2, np.zeros(g2.shape))
    with pytest.raises(ValueError):
        shift_by_length(f2, [0.25, 0.25])


# -- field containers -------------------------------------------------------

def test_scalar_field_validation():
    g = _grid1(nx=5, nt=3)
    with pytest.raises(ValueError):
        ScalarField(g, np.zeros((3, 4)))
    bad = np.zeros(g.shape)
    bad[1, 1] = np.nan
    with pytest.raises(ValueError):
        ScalarField(g, bad)
    # invalid-marked nodes may hold anything finite-checked nodes may not
    valid = np.ones(g.shape, dtype=bool)
    valid[1, 1] = False
    bad[1, 1] = 0.0
    ScalarField(g, bad, valid=valid)


def test_csv_round_trip(tmp_path):
    g = _grid1(nx=7, nt=4)
    f = _field_from(g, lambda x, t: np.cos(3 * x[..., 0]) * (1 + t))
    path = tmp_path / "f.csv"
    f.to_csv(path)
    back = ScalarField.from_csv(path, g)
    np.testing.assert_array_equal(back.values, f.values)


# -- obstacle ---------------------------------------------------------------

def _quadratic_obstacle(broken=False):
    def psi(x, t):
        return 1.0 - np.sum(x * x, axis=-1) - t

    def psi_t(x, t):
        return np.full(np.shape(x)[:-1], -1.0 if not broken else +1.0)

    def gpsi(x, t):
        return -2.0 * x

    def hpsi(x, t):
        return np.broadcast_to(-2.0 * np.eye(1), np.shape(x) + (1,)).copy()

    return Obstacle(1, psi, psi_t, gpsi, hpsi, name="quad")


def test_obstacle_self_check_rejects_bad_psi_t():
    _quadratic_obstacle()
    with pytest.raises(ValueError):
        _quadratic_obstacle(broken=True)


def test_obstacle_defaults_trace_to_psi():
    ob = _quadratic_obstacle()
    assert ob.boundary_trace is ob.psi
    g = _grid1(nx=5, nt=3)
    assert ob.sample(g).shape == g.shape
    assert ob.sample(g, t=0.5).shape == g.space_shape
    assert ob.hess_norm_sup(g) == pytest.approx(2.0)
