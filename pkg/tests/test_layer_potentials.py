import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from heatreach.geometry import Ball, Interval, Polygon
from heatreach.layer_potentials import (BoundaryDensity, SpaceTimeGrid, boundary_operator_apply,
                                        dirichlet_solve_bie, double_layer_eval, read_density_csv,
                                        single_layer_eval, slab_integral, volterra_solve,
                                        write_density_csv)
from heatreach.special_functions import heat_kernel, heat_kernel_c

I = Interval(-1.0, 1.0)
X_OUT, T0 = 1.5, 0.1


def source(t, x):
    return heat_kernel(t - T0, np.asarray(x, dtype=float) - X_OUT, 1)


def source_dx(t, x):
    s = t - T0
    return np.where(s > 0, -(x - X_OUT) / (2 * np.maximum(s, 1e-300)) * source(t, x), 0.0)


def interval_data(grid, f):
    tc = grid.collocation_times
    return np.array([[f(t, p) for p in grid.points[:, 0]] for t in tc])


def _cquad(f, a, b, **kw):
    re = integrate.quad(lambda s: np.real(f(s)), a, b, limit=200, **kw)[0]
    im = integrate.quad(lambda s: np.imag(f(s)), a, b, limit=200, **kw)[0]
    return re + 1j * im


@pytest.mark.parametrize("c", [0.3, 0.05 + 0.2j, 1.2 - 0.7j])
@pytest.mark.parametrize("d", [1, 2])
def test_slab_integral_matches_quadrature(c, d):
    lo, hi = 0.02, 0.37
    with mpmath.workdps(30):
        cc = mpmath.mpc(c)
        ref = complex(mpmath.quad(lambda s: (4 * mpmath.pi * s) ** (-d / 2) * mpmath.exp(-cc / s),
                                  [lo, hi]))
    assert abs(slab_integral(c, lo, hi, d) - ref) < 1e-14
    ref0 = _cquad(lambda s: (4 * np.pi * s) ** (-d / 2) * np.exp(-c / s), 0, hi)
    assert abs(slab_integral(c, 0.0, hi, d) - ref0) < 1e-10


def test_slab_integral_self_term_algebraic_weight():
    # c = 0: integrable tau^(-1/2) singularity, checked with an algebraic weight rule
    hi = 0.125
    ref = integrate.quad(lambda s: 1.0 / np.sqrt(4 * np.pi), 0, hi, weight="alg", wvar=(-0.5, 0))[0]
    assert abs(slab_integral(0.0, 0.0, hi, 1) - ref) < 1e-14
    with pytest.raises(ValueError):
        slab_integral(0.0, 0.0, hi, 2)


def test_blocks_match_quadrature():
    grid = SpaceTimeGrid.for_domain(I, 1.0, 8)
    V = grid.blocks
    dt = grid.dt
    assert V.shape == (8, 2, 2)
    for m in range(4):
        lo, hi = max(m - 0.5, 0.0) * dt, (m + 0.5) * dt
        for i in range(2):
            for j in range(2):
                dx = grid.points[i, 0] - grid.points[j, 0]
                if dx == 0 and m == 0:
                    ref = integrate.quad(lambda s: 1.0 / np.sqrt(4 * np.pi),
                                         lo, hi, weight="alg", wvar=(-0.5, 0))[0]
                else:
                    ref = integrate.quad(lambda s: heat_kernel(s, dx, 1), lo, hi)[0]
                assert V[m, i, j] == pytest.approx(ref, rel=1e-10, abs=1e-15)


def test_manufactured_density_recovered():
    grid = SpaceTimeGrid.for_domain(I, 1.0, 40)
    tc = grid.collocation_times
    q = np.stack([np.sin(3 * tc) + 0.5j * tc, np.cos(2 * tc) * tc], axis=1)
    g = boundary_operator_apply(BoundaryDensity(grid, q))
    rec = volterra_solve(grid, g)
    assert np.max(np.abs(rec.values - q)) < 1e-11
    assert not rec.regularized


def test_exterior_source_interior_and_complex_points():
    grid = SpaceTimeGrid.for_domain(I, 1.0, 128)
    rho = volterra_solve(grid, interval_data(grid, source))
    for t in (0.5, 1.0):
        for z in (0.0, -0.5, 0.5, 0.3 + 0.4j, 0.9j):
            exact = heat_kernel_c(t - T0, z - X_OUT, 1)
            assert abs(single_layer_eval(rho, t, z) - exact) < 2e-4


def test_bie_refinement_improves():
    errs = []
    for nt in (64, 128, 256):
        grid = SpaceTimeGrid.for_domain(I, 1.0, nt)
        sol = dirichlet_solve_bie(grid, interval_data(grid, source), [0.0, 0.5, 0.3 + 0.4j], [1.0])
        exact = np.array([heat_kernel_c(1.0 - T0, z - X_OUT, 1) for z in (0.0, 0.5, 0.3 + 0.4j)])
        errs.append(np.max(np.abs(sol[0] - exact)))
    assert errs[0] / errs[1] >= 1.5 and errs[1] / errs[2] >= 1.5


def test_green_representation():
    # u = S[du/dn] - D[u] for a caloric function with zero initial data
    grid = SpaceTimeGrid.for_domain(I, 1.0, 256)
    g = interval_data(grid, source)
    dn = interval_data(grid, source_dx) * grid.normals[:, 0][None, :]
    x = 0.2
    S = single_layer_eval(BoundaryDensity(grid, dn), 1.0, x)
    D = double_layer_eval(BoundaryDensity(grid, g), 1.0, [x])
    assert abs(S - D - source(1.0, x)) < 1e-6


def test_double_layer_constant_density_right_endpoint():
    grid = SpaceTimeGrid.for_domain(I, 0.6, 12)
    q = np.zeros((12, 2))
    q[:, 1] = 1.0
    x = 0.25
    val = double_layer_eval(BoundaryDensity(grid, q), 0.6, [x])
    # d/dy G(s, x - y) at y = 1, outward normal +1, integrated in s with a dense Gauss rule
    nodes, w = np.polynomial.legendre.leggauss(400)
    s = 0.3 * (nodes + 1)
    ker = (x - 1.0) / (2 * s) * heat_kernel(s, x - 1.0, 1)
    assert abs(val - 0.3 * np.dot(w, ker)) < 1e-10
    with pytest.raises(ValueError):
        double_layer_eval(BoundaryDensity(grid, q), 0.6, [1.0])


def test_constant_single_layer_matches_quadrature():
    grid = SpaceTimeGrid.for_domain(I, 0.8, 16)
    q = np.zeros((16, 2))
    q[:, 1] = 1.0
    for z in (0.4, 0.2 + 0.3j):
        ref = _cquad(lambda s: heat_kernel_c(s, z - 1.0, 1), 0, 0.8)
        assert abs(single_layer_eval(BoundaryDensity(grid, q), 0.8, z) - ref) < 1e-9


def test_causality_and_linearity():
    grid = SpaceTimeGrid.for_domain(I, 1.0, 50)
    g1 = interval_data(grid, source)
    tc = grid.collocation_times
    g2 = np.stack([np.sin(tc) ** 2, tc ** 2], axis=1)
    r1, r2 = volterra_solve(grid, g1), volterra_solve(grid, g2)
    before = tc < T0 - grid.dt
    assert np.all(r1.values[before] == 0)
    r = volterra_solve(grid, 2.0 * g1 - 3j * g2)
    assert np.max(np.abs(r.values - (2.0 * r1.values - 3j * r2.values))) < 1e-10
    # values at t only depend on slabs before t
    g3 = g2.copy()
    g3[30:] += 1.0
    r3 = volterra_solve(grid, g3)
    t = grid.slab_edges[30]
    assert single_layer_eval(r3, t, 0.1) == pytest.approx(single_layer_eval(r2, t, 0.1), abs=1e-15)


@given(st.floats(-0.7, 0.7), st.floats(-0.25, 0.25))
def test_single_layer_cauchy_riemann(x, y):
    grid = SpaceTimeGrid.for_domain(I, 0.5, 20)
    tc = grid.collocation_times
    rho = BoundaryDensity(grid, np.stack([np.sin(5 * tc), tc], axis=1))
    z, h = complex(x, y), 1e-5
    f = lambda w: single_layer_eval(rho, 0.5, w)
    d_re = (f(z + h) - f(z - h)) / (2 * h)
    d_im = (f(z + 1j * h) - f(z - 1j * h)) / (2 * h)
    assert abs(d_im - 1j * d_re) < 1e-6


def test_evaluation_guards():
    grid = SpaceTimeGrid.for_domain(I, 1.0, 8)
    rho = BoundaryDensity(grid, np.ones((8, 2)))
    with pytest.raises(ValueError):
        single_layer_eval(rho, 0.5, 0.5 + 0.6j)
    with pytest.raises(ValueError):
        volterra_solve(grid, np.ones((7, 2)))
    with pytest.raises(ValueError):
        BoundaryDensity(grid, np.ones((8, 3)))


def test_disk_exterior_source():
    D = Ball([0.0, 0.0], 1.0)
    xo = np.array([1.6, 0.0])
    grid = SpaceTimeGrid.for_domain(D, 0.5, 64, 48)
    g = heat_kernel(grid.collocation_times[:, None] - 0.05, grid.points[None] - xo, 2)
    rho = volterra_solve(grid, g)
    for z in ([0.0, 0.0], [0.3, 0.2]):
        exact = heat_kernel(0.45, np.array(z) - xo, 2)
        assert abs(single_layer_eval(rho, 0.5, np.array(z, complex)) - exact) < 1e-4


def test_polygon_grid_nodes_and_normals():
    sq = Polygon([[0, 0], [1, 0], [1, 1], [0, 1]])
    grid = SpaceTimeGrid.for_domain(sq, 1.0, 4, 5)
    assert grid.n_nodes == 20
    assert grid.weights.sum() == pytest.approx(4.0)
    np.testing.assert_allclose(np.linalg.norm(grid.normals, axis=1), 1.0)
    # outward: normal points away from the centre
    assert np.all(np.sum((grid.points - 0.5) * grid.normals, axis=1) > 0)


def test_density_csv_roundtrip(tmp_path):
    grid = SpaceTimeGrid.for_domain(I, 1.0, 10)
    vals = np.arange(20).reshape(10, 2) * (0.1 + 0.3j) + np.pi
    write_density_csv(tmp_path / "rho.csv", BoundaryDensity(grid, vals), {"note": "x"})
    back = read_density_csv(tmp_path / "rho.csv", grid)
    np.testing.assert_array_equal(back.values, vals)
