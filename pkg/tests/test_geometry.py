import numpy as np
import pytest
from hypothesis import given, strategies as st

from heatreach.geometry import (Ball, ComplexPoint, Interval, Polygon, as_complex_point,
                                contains, distance_to_boundary, egg_contains,
                                nearest_boundary_point, outward_direction,
                                sample_compact_subset)

UNIT_SQUARE = Polygon([[0, 0], [1, 0], [1, 1], [0, 1]])
L_SHAPE = Polygon([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]])


def test_complex_point_validation():
    with pytest.raises(ValueError):
        ComplexPoint([1.0, 2.0], [0.0])
    p = ComplexPoint.from_complex([1 + 2j, 3 - 1j])
    assert p.d == 2
    np.testing.assert_array_equal(p.z, [1 + 2j, 3 - 1j])
    with pytest.raises(ValueError):
        p.re[0] = 5.0  # read-only


def test_domain_invariants():
    with pytest.raises(ValueError):
        Interval(1.0, -1.0)
    with pytest.raises(ValueError):
        Ball([0.0, 0.0], -1.0)
    with pytest.raises(ValueError):
        Ball([0.0, 0.0], 1.0, d=3)
    assert Ball([0.0], 1.0, d=3).center.shape == (3,)
    with pytest.raises(ValueError):
        Polygon([[0, 0], [0, 1], [1, 1], [1, 0]])  # clockwise
    with pytest.raises(ValueError):
        Polygon([[0, 0], [1, 1], [1, 0], [0, 1]])  # bow tie
    with pytest.raises(ValueError):
        Polygon([[0, 0], [1, 0]])


@pytest.mark.parametrize("domain, x, expected", [
    (Interval(-1, 1), [0.3], 0.7),
    (Ball([0, 0], 2.0), [1, 0], 1.0),
    (Interval(-1, 1), [1.0], 0.0),
    (UNIT_SQUARE, [0.5, 0.25], 0.25),
    (L_SHAPE, [1.5, 1.5], 0.5),
    (L_SHAPE, [0.5, 1.5], 0.5),
    (L_SHAPE, [1.2, 0.8], 0.2),
])
def test_distance_examples(domain, x, expected):
    assert distance_to_boundary(domain, x) == pytest.approx(expected, abs=1e-15)


def test_distance_exterior_flag_and_dimension_error():
    d, ext = distance_to_boundary(Interval(-1, 1), [1.5], with_flag=True)
    assert d == pytest.approx(0.5) and ext
    d, ext = distance_to_boundary(L_SHAPE, [1.5, 1.5], with_flag=True)
    assert ext
    d, ext = distance_to_boundary(Ball([0, 0], 1.0), [0.2, 0.0], with_flag=True)
    assert not ext
    with pytest.raises(ValueError):
        distance_to_boundary(Interval(-1, 1), [0.0, 0.0])


def test_contains_and_boundary_helpers():
    assert contains(UNIT_SQUARE, [0.5, 0.5])
    assert not contains(UNIT_SQUARE, [1.0, 0.5])
    assert contains(UNIT_SQUARE, [1.0, 0.5], closed=True)
    np.testing.assert_allclose(nearest_boundary_point(Ball([0, 0], 2.0), [1.0, 0.0]), [2.0, 0.0])
    np.testing.assert_allclose(outward_direction(Interval(-1, 1), [0.3]), [1.0])
    np.testing.assert_allclose(outward_direction(Interval(-1, 1), [1.3]), [1.0])
    np.testing.assert_allclose(outward_direction(Interval(-1, 1), [-1.0]), [-1.0])
    np.testing.assert_allclose(outward_direction(UNIT_SQUARE, [1.0, 0.5]), [1.0, 0.0])


def test_egg_examples():
    I = Interval(-1, 1)
    assert egg_contains(I, 0.5 + 0.4j)
    assert not egg_contains(I, 0.5 + 0.5j)
    assert egg_contains(I, 0.5 + 0.5j, closed=True)
    B = Ball([0, 0], 1.0)
    assert egg_contains(B, ComplexPoint([0.3, 0.0], [0.0, 0.6]))
    with pytest.raises(ValueError):
        egg_contains(B, 0.1 + 0.1j)


def _random_points(rng, d, n, scale=1.5):
    return rng.uniform(-scale, scale, (n, d)) + 1j * rng.uniform(-scale, scale, (n, d))


@pytest.mark.parametrize("domain", [Interval(-1, 1), Ball([0, 0], 1.0), UNIT_SQUARE, L_SHAPE])
def test_open_egg_implies_closed(domain, rng):
    for z in _random_points(rng, domain.d, 1000):
        if egg_contains(domain, z):
            assert egg_contains(domain, z, closed=True)


@pytest.mark.parametrize("R", [1.0, 2.5])
def test_ball_egg_is_l1_type_ball(R, rng):
    B = Ball([0, 0], R)
    hits = 0
    for z in _random_points(rng, 2, 1000, scale=R):
        expected = np.linalg.norm(z.real) + np.linalg.norm(z.imag) < R
        assert egg_contains(B, z) == expected
        hits += expected
    assert hits > 50


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_distance_is_one_lipschitz(x1, y1, x2, y2):
    for dom in (L_SHAPE, Ball([0, 0], 1.0)):
        d1 = distance_to_boundary(dom, [x1, y1])
        d2 = distance_to_boundary(dom, [x2, y2])
        assert abs(d1 - d2) <= np.hypot(x1 - x2, y1 - y2) + 1e-12


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_interval_distance_lipschitz(a, b):
    I = Interval(-1, 1)
    assert abs(distance_to_boundary(I, [a]) - distance_to_boundary(I, [b])) <= abs(a - b) + 1e-12


def test_sample_compact_subset_examples():
    I = Interval(-1, 1)
    near0 = sample_compact_subset(I, 0.999, (5, 5))
    assert all(abs(p.re[0]) <= 1e-3 + 1e-12 and abs(p.im[0]) <= 1e-3 + 1e-12 for p in near0)
    pts = sample_compact_subset(I, 0.1, (5, 5))
    assert len(pts) == 25
    assert all(egg_contains(I, p, closed=True) for p in pts)
    with pytest.raises(ValueError):
        sample_compact_subset(Ball([0, 0], 1.0), 1.1, (5, 5))
    assert sample_compact_subset(I, 0.1, (5, 5)) == sample_compact_subset(I, 0.1, (5, 5))


@given(st.floats(0.01, 0.9), st.integers(1, 9), st.integers(1, 6))
def test_compact_sample_margin_property(margin, n_re, n_im):
    for dom in (Interval(-1, 1), Ball([0, 0], 1.0), L_SHAPE):
        try:
            pts = sample_compact_subset(dom, margin, (n_re, n_im))
        except ValueError:
            continue
        for p in pts:
            dist = distance_to_boundary(dom, p.re)
            assert np.linalg.norm(p.im) <= dist - margin + 1e-12
            assert egg_contains(dom, p, closed=True)


def test_as_complex_point_dimension_check():
    assert as_complex_point(1 + 1j).d == 1
    with pytest.raises(ValueError):
        as_complex_point([1 + 1j], d=2)
