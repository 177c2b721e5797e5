import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate
from scipy.interpolate import CubicSpline

from heatreach.geometry import Interval
from heatreach.onedim_controls import (EndpointSignals, FrequencyGrid, endpoint_determinant,
                                       endpoint_kernel_ft, forward_endpoint_values,
                                       read_signals_csv, rep1_eval, solve_endpoint_densities,
                                       write_densities_csv, write_signals_csv)
from heatreach.reference_solver import crank_nicolson_solve
from heatreach.special_functions import heat_kernel

L, T = 1.0, 0.5


def poly_signals(nt=129, c1=(1.0, 1.0, 0.5), c2=(0.0, -2.0)):
    t = np.linspace(0, T, nt)
    f = lambda c: sum(ck * t ** (k + 1) for k, ck in enumerate(c))
    return EndpointSignals(L, T, f(c1), f(c2))


def test_signal_validation():
    with pytest.raises(ValueError):
        EndpointSignals(L, T, np.ones(16), np.zeros(16))
    with pytest.raises(ValueError):
        EndpointSignals(L, T, np.zeros(5), np.zeros(5))
    with pytest.raises(ValueError):
        EndpointSignals(-1.0, T, np.zeros(9), np.zeros(9))
    with pytest.raises(ValueError):
        FrequencyGrid(pad=1)
    s = EndpointSignals.from_functions(L, T, 9, np.sin, lambda t: t ** 2)
    assert s.dt == pytest.approx(T / 8)
    np.testing.assert_array_equal(s.swapped().h1, s.h2)


def test_frequency_grid_never_hits_zero():
    g = FrequencyGrid()
    taus = g.taus(129, T / 128)
    assert taus.size == g.size(129) and g.size(129) >= 16 * 128
    assert np.min(np.abs(taus)) > 0
    np.testing.assert_allclose(np.sort(taus), -np.sort(taus)[::-1])


@pytest.mark.parametrize("p", [0.5, 3.0, 40.0])
def test_transfer_matches_laplace_transform(p):
    # Laplace transform of the endpoint trace of a unit point source, by quadrature
    M = endpoint_kernel_ft(-1j * p, L) / np.sqrt(2.0)
    # t = s^2 removes the t^(-1/2) singularity of the self term
    self_term = integrate.quad(lambda s: 2 * s * np.exp(-p * s * s) * heat_kernel(s * s, 0.0, 1)
                               if s > 0 else 1 / np.sqrt(np.pi), 0, np.inf)[0]
    cross = sum(integrate.quad(lambda t: np.exp(-p * t) * heat_kernel(t, 2 * L, 1), a, b,
                               limit=400)[0] for a, b in ((0, 1), (1, np.inf)))
    for entry, ref in ((M[0, 0], self_term), (M[0, 1], cross)):
        assert entry == pytest.approx(ref, rel=1e-9)


def test_kernel_matrix_symmetric_and_vectorised():
    tau = np.array([0.1, -2.0, 30.0])
    M = endpoint_kernel_ft(tau, L)
    assert M.shape == (3, 2, 2)
    np.testing.assert_array_equal(M[:, 0, 1], M[:, 1, 0])
    np.testing.assert_array_equal(M[:, 0, 0], M[:, 1, 1])
    det = M[:, 0, 0] ** 2 - M[:, 0, 1] ** 2
    np.testing.assert_allclose(endpoint_determinant(tau, L), det, rtol=1e-13)
    with pytest.raises(ValueError):
        endpoint_kernel_ft(0.0, L)


def test_determinant_scan_nonvanishing():
    taus = np.logspace(-3, 3, 2000)
    for sign in (1, -1):
        det = endpoint_determinant(sign * taus, L)
        assert np.all(np.abs(det) > 0)
        # modulus of (1 - exp(-4 L sqrt(i tau))) stays positive
        assert np.min(np.abs(det * 2j * sign * taus)) > 1e-3


def test_zero_signals_zero_densities():
    z = np.zeros(33)
    d = solve_endpoint_densities(EndpointSignals(L, T, z, z))
    assert np.all(d.q1 == 0) and np.all(d.q2 == 0)


def test_swap_symmetry_exact():
    s = poly_signals()
    a = solve_endpoint_densities(s, check=False)
    b = solve_endpoint_densities(s.swapped(), check=False)
    np.testing.assert_array_equal(a.q1, b.q2)
    np.testing.assert_array_equal(a.q2, b.q1)


@settings(max_examples=10)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(a, b):
    s1, s2 = poly_signals(65), poly_signals(65, (0.0, 2.0), (1.0,))
    comb = EndpointSignals(L, T, a * s1.h1 + b * s2.h1, a * s1.h2 + b * s2.h2)
    d1, d2 = solve_endpoint_densities(s1, check=False), solve_endpoint_densities(s2, check=False)
    dc = solve_endpoint_densities(comb, check=False)
    scale = 1 + abs(a) + abs(b)
    assert np.max(np.abs(dc.q1 - (a * d1.q1 + b * d2.q1))) < 1e-10 * scale * np.max(np.abs(d1.q1))
    assert np.max(np.abs(dc.q2 - (a * d1.q2 + b * d2.q2))) < 1e-10 * scale * np.max(np.abs(d1.q2))


def test_round_trip_reproduces_boundary_data():
    s = poly_signals(257)
    d = solve_endpoint_densities(s)
    left, right = forward_endpoint_values(d)
    ref = np.r_[s.h1[1:], s.h2[1:]]
    rel = np.linalg.norm(np.r_[left, right] - ref) / np.linalg.norm(ref)
    assert rel < 1e-2
    assert d.forward_residual == pytest.approx(rel, rel=1e-6)
    q1, q2 = d  # unpacks as a pair
    assert q1.shape == (256,) and np.allclose(d.midpoints, (np.arange(256) + 0.5) * d.dt)


def test_residual_decreases_with_resolution():
    res = [solve_endpoint_densities(poly_signals(n)).forward_residual for n in (65, 129, 257)]
    assert res[0] > res[1] > res[2]


def test_matches_crank_nicolson():
    s = poly_signals(257)
    d = solve_endpoint_densities(s, check=False)
    sp1, sp2 = CubicSpline(s.times, s.h1), CubicSpline(s.times, s.h2)
    f = crank_nicolson_solve(Interval(-L, L), np.zeros(201), lambda t, p: np.array([sp1(t), sp2(t)]),
                             T, 1000, 200, save_every=1000)
    x = f.spatial_grid[:, 0]
    u = np.array([rep1_eval(d.q1, d.q2, T, xx, L=L, T=T).real for xx in x])
    assert np.max(np.abs(u - f.at(T).real)[f.interior]) < 5e-3


def test_complex_evaluation_is_holomorphic():
    d = solve_endpoint_densities(poly_signals(65), check=False)
    z, h = 0.3 + 0.2j, 1e-5
    f = lambda w: d.eval(T, w)
    d_re = (f(z + h) - f(z - h)) / (2 * h)
    d_im = (f(z + 1j * h) - f(z - 1j * h)) / (2 * h)
    assert abs(d_im - 1j * d_re) < 1e-6 * max(1.0, abs(d_re))
    with pytest.raises(ValueError):
        rep1_eval(d.q1, d.q2, T, 0.6 + 0.5j, L=L, T=T)


def test_csv_roundtrip(tmp_path):
    s = poly_signals(17)
    write_signals_csv(tmp_path / "s.csv", s)
    back = read_signals_csv(tmp_path / "s.csv")
    np.testing.assert_array_equal(back.h1, s.h1)
    np.testing.assert_array_equal(back.h2, s.h2)
    assert (back.L, back.T) == (s.L, s.T)
    write_densities_csv(tmp_path / "q.csv", solve_endpoint_densities(s, check=False))
    assert (tmp_path / "q.csv").stat().st_size > 0
