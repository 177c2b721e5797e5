import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from heatreach.errors import NumericalGuardError
from heatreach.geometry import Interval
from heatreach.io import read_csv
from heatreach.verification import (ConvergenceReport, contour_shift_check, convergence_sweep,
                                    heat_extension, monodromy_detect, optimality_cross_check,
                                    write_convergence_csv)
from heatreach.wick_synthesis import HolomorphicTarget, make_cutoff

I = Interval(-1.0, 1.0)
SQUARE = HolomorphicTarget.polynomial({2: 1.0}, 1)
LORENTZ = HolomorphicTarget.lorentzian(1 / np.pi, 1)
X0, A = 1.2, 0.15 + 1.12j


def test_heat_extension_of_square_is_exact():
    c = make_cutoff(3.0, 4.0)  # wide enough that the cutoff tail is negligible
    z = np.array([0.0, 0.3 + 0.2j, -0.5 - 0.4j])
    for t in (0.02, 0.05):
        got = heat_extension(SQUARE, c, t, z)
        assert np.max(np.abs(got - (z ** 2 + 2 * t))) < 1e-10


def test_heat_extension_guard():
    with pytest.raises(NumericalGuardError):
        heat_extension(SQUARE, make_cutoff(1.25, 1.75), 0.001, 0.9j)


def test_sweep_square_error_is_2t():
    ts = [0.2, 0.1, 0.05, 0.025]
    rep = convergence_sweep(SQUARE, I, make_cutoff(1.25, 1.75), 0.1, ts)
    assert rep.strictly_decreasing
    # K_t z^2 = z^2 + 2t; the cutoff only adds to this at the larger t
    assert np.all(rep.errors >= 2 * np.asarray(ts) * (1 - 1e-9))
    assert rep.errors[-1] == pytest.approx(0.05, rel=0.05)
    assert rep.n_points == 21 * 9


def test_sweep_lorentzian_decreases():
    rep = convergence_sweep(LORENTZ, I, make_cutoff(1.25, 1.75), 0.1, [0.2, 0.1, 0.05, 0.025])
    assert rep.strictly_decreasing
    # first-order in t: halving t roughly halves the error
    ratios = rep.errors[:-1] / rep.errors[1:]
    assert np.all((ratios > 1.3) & (ratios < 2.6))


def test_sweep_argument_checks():
    with pytest.raises(ValueError):
        convergence_sweep(SQUARE, I, make_cutoff(1.25, 1.75), 0.1, [0.1, 0.2])
    with pytest.raises(ValueError):
        convergence_sweep(SQUARE, I, make_cutoff(0.5, 1.75), 0.1, [0.1])
    with pytest.raises(ValueError):
        convergence_sweep(LORENTZ, I, make_cutoff(1.25, 2.5), 0.1, [0.1])
    with pytest.raises(ValueError):
        ConvergenceReport(0.1, (3, 3), 9, np.array([0.1, 0.05]), np.array([1.0]))


def test_convergence_csv(tmp_path):
    rep = convergence_sweep(SQUARE, I, make_cutoff(1.25, 1.75), 0.5, [0.1, 0.05], counts=(5, 3))
    write_convergence_csv(tmp_path, rep)
    _, header, data = read_csv(tmp_path / "convergence.csv")
    np.testing.assert_array_equal(data[:, 0], [0.1, 0.05])
    assert (tmp_path / "convergence.dat").exists()


@pytest.mark.parametrize("z", [0.1j, 0.05 - 0.1j, 0.3 + 0.4j, -0.6 + 0.2j])
@pytest.mark.parametrize("t", [0.1, 0.05])
def test_contour_shift_identity(z, t):
    c = make_cutoff(1.0, 1.5, beta=0.01)
    for target in (SQUARE, LORENTZ):
        res = contour_shift_check(z, t, target, c)
        assert res.residual < 1e-6
        direct, I1, I2 = res
        assert abs(direct - (I1 + I2)) == pytest.approx(res.residual)


def test_contour_strip_term_decays_near_axis():
    c = make_cutoff(1.0, 1.5, beta=0.01)
    mags = [abs(contour_shift_check(0.1j, t, SQUARE, c).I2) for t in (0.1, 0.05, 0.025)]
    assert mags[0] / mags[1] > 5 and mags[1] / mags[2] > 5


def test_contour_shift_real_point_and_guards():
    c = make_cutoff(1.0, 1.5, beta=0.01)
    res = contour_shift_check(0.2, 0.05, SQUARE, c)
    assert res.I2 == 0 and res.direct == res.I1
    with pytest.raises(ValueError):
        contour_shift_check(0.6 + 0.5j, 0.05, SQUARE, c)
    with pytest.raises(ValueError):
        contour_shift_check(0.1j, 0.05, SQUARE, make_cutoff(0.8, 1.5, beta=0.01))
    with pytest.raises(ValueError):
        contour_shift_check(0.1j, 0.05, LORENTZ, make_cutoff(1.0, 2.5))


def test_optimality_integral_matches_e1():
    rep = optimality_cross_check(I, None, nt_quad=100, x0=X0, a=A)
    assert rep.points.size == 100
    assert all(abs(p.real) + abs(p.imag) < 1 for p in rep.points)
    assert rep.max_error < 1e-6
    assert rep.substitution_residual < 1e-8
    assert rep.source_exterior


def test_optimality_with_derived_parameters():
    rep = optimality_cross_check(I, 0.5 + 0.8j, nt_quad=10)
    assert rep.max_error < 1e-6
    assert rep.source_exterior


@pytest.mark.parametrize("radius", [0.2, 0.1])
def test_monodromy_jump(radius):
    rep = monodromy_detect(X0, A, loop_radius=radius)
    assert rep.winding == 1
    assert abs(rep.jump) == pytest.approx(np.sqrt(np.pi), rel=1e-10)
    assert rep.jump == pytest.approx(-2j * np.pi / np.sqrt(4 * np.pi), abs=1e-12)
    assert abs(rep.contour_jump - rep.jump) < 1e-8


def test_monodromy_radius_independent_and_orientation():
    a = monodromy_detect(X0, A, loop_radius=0.2).jump
    b = monodromy_detect(X0, A, loop_radius=0.1).jump
    assert abs(a - b) < 1e-8
    rev = monodromy_detect(X0, A, loop_radius=0.2, orientation=-1)
    assert rev.jump == pytest.approx(-a, abs=1e-12)


def test_monodromy_non_enclosing_loop():
    rep = monodromy_detect(X0, A, loop_radius=0.2, center=0.0)
    assert rep.winding == 0
    assert abs(rep.jump) < 1e-10
    assert abs(rep.contour_jump) < 1e-10


def test_monodromy_guards():
    with pytest.raises(ValueError):
        monodromy_detect(X0, A, steps=8)
    with pytest.raises(ValueError):
        monodromy_detect(X0, A, orientation=2)
    with pytest.raises(ValueError):
        monodromy_detect(X0, A, loop_radius=5.0, center=X0)


@given(x=st.floats(-0.9, 0.9), frac=st.floats(-1, 1), w=st.floats(1.0, 5.0),
       side=st.sampled_from([-1.0, 1.0]), eps=st.floats(0.01, 0.1))
def test_strip_exponent_bound(x, frac, w, side, eps):
    # z in the egg at margin eps, w real outside the interval:
    # |Im z| <= |Re z - w| - eps, so the kernel is damped by exp(-eps^2 / 4t)
    room = 1.0 - abs(x) - eps
    assume(room > 0)
    z, w = x + 1j * frac * room, side * w
    assert abs(z.imag) <= abs(z.real - w) - eps + 1e-12
    t = 0.05
    assert abs(np.exp(-(z - w) ** 2 / (4 * t))) <= np.exp(-eps ** 2 / (4 * t)) * (1 + 1e-12)
