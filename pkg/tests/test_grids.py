import numpy as np
import pytest

from periodic_eigen.errors import DimensionError, PeriodicityWarning
from periodic_eigen.grids import (SpatialGrid, TimeGrid, gradient_central,
                                  integrate_space, integrate_time,
                                  neumann_laplacian, trapezoid_inner)


def test_grid_invariants():
    g = SpatialGrid(2.0, 5)
    assert g.h == pytest.approx(0.5)
    x = g.nodes
    assert x[0] == 0.0 and x[-1] == 2.0
    assert np.all(np.diff(x) > 0)
    assert g.h * (g.N - 1) == pytest.approx(g.L, abs=1e-15)
    tg = TimeGrid(8)
    assert tg.times[-1] == 1.0


def test_grid_rejects_bad_sizes():
    with pytest.raises(ValueError):
        SpatialGrid(1.0, 2)
    with pytest.raises(ValueError):
        SpatialGrid(-1.0, 10)
    with pytest.raises(ValueError):
        TimeGrid(1)


def test_laplacian_kills_constants():
    g = SpatialGrid(1.0, 33)
    out = neumann_laplacian(np.full(33, 7.0), g)
    assert np.abs(out).max() <= 1e-14


def test_laplacian_neumann_mode():
    g = SpatialGrid(1.0, 201)
    f = np.cos(np.pi * g.nodes)
    err = np.abs(neumann_laplacian(f, g) + np.pi ** 2 * f).max()
    assert err <= 1e-3


def test_laplacian_quadratic_mirror_defect():
    # f = x^2 on N=11: interior rows give exactly 2; the mirror rule gives
    # 2(f_1 - f_0)/h^2 = 2 at x=0 and 2(f_{N-2} - f_{N-1})/h^2 = 2(h-2)/h
    # = -38 at x=1 (direct stencil arithmetic, h = 0.1)
    g = SpatialGrid(1.0, 11)
    out = neumann_laplacian(g.nodes ** 2, g)
    assert out[1:-1] == pytest.approx(np.full(9, 2.0), abs=1e-10)
    assert out[0] == pytest.approx(2.0, abs=1e-10)
    assert out[-1] == pytest.approx(-38.0, abs=1e-9)


def test_laplacian_second_order_convergence():
    errs = []
    for N in (101, 201):
        g = SpatialGrid(1.0, N)
        f = np.cos(np.pi * g.nodes)
        errs.append(np.abs(neumann_laplacian(f, g) + np.pi ** 2 * f).max())
    assert errs[0] / errs[1] >= 3.5


def test_laplacian_symmetric_and_negative():
    g = SpatialGrid(1.3, 41)
    rng = np.random.default_rng(7)
    for _ in range(5):
        f = rng.standard_normal(41)
        h = rng.standard_normal(41)
        lhs = trapezoid_inner(neumann_laplacian(f, g), h, g)
        rhs = trapezoid_inner(f, neumann_laplacian(h, g), g)
        scale = np.linalg.norm(f) * np.linalg.norm(h)
        assert abs(lhs - rhs) <= 1e-10 * scale
        assert trapezoid_inner(neumann_laplacian(f, g), f, g) <= 1e-12


def test_gradient():
    g = SpatialGrid(1.0, 401)
    assert np.abs(gradient_central(np.full(401, 3.0), g)).max() == 0.0
    lin = gradient_central(g.nodes, g)
    assert lin[1:-1] == pytest.approx(np.ones(399), abs=1e-13)
    assert lin[0] == 0.0 and lin[-1] == 0.0
    f = np.sin(2 * np.pi * g.nodes)
    df = gradient_central(f, g)
    err = np.abs(df[1:-1] - 2 * np.pi * np.cos(2 * np.pi * g.nodes[1:-1])).max()
    assert err <= 1e-3


def test_integrate_space():
    g = SpatialGrid(1.0, 101)
    assert integrate_space(np.ones(101), g) == pytest.approx(1.0, abs=1e-14)
    assert integrate_space(g.nodes, g) == pytest.approx(0.5, abs=1e-14)
    assert integrate_space(g.nodes ** 2, g) == pytest.approx(1.0 / 3.0, abs=1e-4)


def test_integrate_time():
    tg = TimeGrid(64)
    assert integrate_time(np.full(65, 3.0)) == pytest.approx(3.0, abs=1e-14)
    assert integrate_time(np.cos(2 * np.pi * tg.times)) == pytest.approx(0.0, abs=1e-12)
    assert integrate_time(np.cos(2 * np.pi * tg.times) ** 2) == pytest.approx(0.5, abs=1e-12)


def test_integrate_time_warns_on_open_period():
    s = np.linspace(0.0, 1.0, 17)          # endpoints differ
    with pytest.warns(PeriodicityWarning):
        integrate_time(s)


def test_dimension_mismatch():
    g = SpatialGrid(1.0, 11)
    with pytest.raises(DimensionError):
        neumann_laplacian(np.ones(10), g)
    with pytest.raises(DimensionError):
        integrate_space(np.ones((2, 12)), g)
