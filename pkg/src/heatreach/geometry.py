"""Domains, boundary distances and the complex analyticity domain.

For a bounded domain ``Omega`` in R^d the complex set

    E(Omega) = { x + i y in C^d : x in Omega, |y| < dist(x, dOmega) }

is where every positive-time heat solution on ``Omega`` extends
holomorphically.  For a ball of radius ``R`` centred at the origin it is the
set ``|Re z| + |Im z| < R``.

Three domain variants are supported: intervals, balls and simple planar
polygons.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

__all__ = [
    "ComplexPoint",
    "Interval",
    "Ball",
    "Polygon",
    "DomainSpec",
    "as_complex_point",
    "dimension",
    "contains",
    "distance_to_boundary",
    "nearest_boundary_point",
    "outward_direction",
    "egg_contains",
    "sample_compact_subset",
]


@dataclass(frozen=True)
class ComplexPoint:
    """A point ``z = re + i im`` in C^d stored as two real vectors."""

    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        re = np.atleast_1d(np.asarray(self.re, dtype=float)).copy()
        im = np.atleast_1d(np.asarray(self.im, dtype=float)).copy()
        if re.ndim != 1 or re.shape != im.shape or re.size < 1:
            raise ValueError("re and im must be real vectors of equal length >= 1")
        re.setflags(write=False)
        im.setflags(write=False)
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)

    @classmethod
    def from_complex(cls, z) -> "ComplexPoint":
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return cls(z.real, z.imag)

    @property
    def d(self) -> int:
        return self.re.size

    @property
    def z(self) -> np.ndarray:
        """The point as a complex vector of length ``d``."""
        return self.re + 1j * self.im

    def __repr__(self) -> str:
        return f"ComplexPoint({self.z.tolist()})"


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"Interval requires a < b, got ({self.a}, {self.b})")

    @property
    def d(self) -> int:
        return 1

    @property
    def center(self) -> np.ndarray:
        return np.array([0.5 * (self.a + self.b)])

    @property
    def inradius(self) -> float:
        return 0.5 * (self.b - self.a)


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float
    d: int = field(default=-1)

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float)).copy()
        d = c.size if self.d == -1 else int(self.d)
        if d < 1:
            raise ValueError("Ball dimension must be >= 1")
        if c.size == 1 and d > 1 and c[0] == 0.0:
            c = np.zeros(d)
        if c.size != d:
            raise ValueError(f"Ball centre has length {c.size}, expected {d}")
        if not self.radius > 0:
            raise ValueError("Ball radius must be positive")
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "d", d)

    @property
    def inradius(self) -> float:
        return float(self.radius)


@dataclass(frozen=True)
class Polygon:
    """Simple, positively oriented planar polygon."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).copy()
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise ValueError("Polygon needs at least 3 planar vertices")
        if _signed_area(v) <= 0:
            raise ValueError("Polygon vertices must be positively (counter-clockwise) oriented")
        if not _is_simple(v):
            raise ValueError("Polygon must be simple (non-self-intersecting)")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def d(self) -> int:
        return 2

    @property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Start and end points of every edge, shape ``(n, 2)`` each."""
        return self.vertices, np.roll(self.vertices, -1, axis=0)


DomainSpec = Union[Interval, Ball, Polygon]


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return np.sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    # collinear overlaps count as intersections
    def on_seg(a, b, c):
        return (min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
                and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]))
    return ((o1 == 0 and on_seg(p1, p2, q1)) or (o2 == 0 and on_seg(p1, p2, q2))
            or (o3 == 0 and on_seg(q1, q2, p1)) or (o4 == 0 and on_seg(q1, q2, p2)))


def _is_simple(v: np.ndarray) -> bool:
    n = len(v)
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                return False
    return True


def dimension(domain: DomainSpec) -> int:
    return domain.d


def _as_real_vector(domain: DomainSpec, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (domain.d,):
        raise ValueError(f"point has shape {x.shape}, domain dimension is {domain.d}")
    return x


def as_complex_point(z, d: int | None = None) -> ComplexPoint:
    """Coerce a ComplexPoint, complex scalar or complex sequence."""
    if isinstance(z, ComplexPoint):
        cp = z
    else:
        cp = ComplexPoint.from_complex(z)
    if d is not None and cp.d != d:
        raise ValueError(f"complex point has dimension {cp.d}, expected {d}")
    return cp


def _polygon_edge_distance(poly: Polygon, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distances from ``x`` to every edge and the matching closest points."""
    a, b = poly.edges
    ab = b - a
    s = np.clip(np.einsum("ij,ij->i", x - a, ab) / np.einsum("ij,ij->i", ab, ab), 0.0, 1.0)
    closest = a + s[:, None] * ab
    return np.linalg.norm(x - closest, axis=1), closest


def _polygon_contains(poly: Polygon, x: np.ndarray) -> bool:
    # crossing-number test; boundary points are resolved by the caller
    a, b = poly.edges
    yi, yj = a[:, 1], b[:, 1]
    crosses = (yi > x[1]) != (yj > x[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = a[:, 0] + (x[1] - yi) * (b[:, 0] - a[:, 0]) / (yj - yi)
    return bool(np.count_nonzero(crosses & (x[0] < xint)) % 2)


def _raw_distance(domain: DomainSpec, x: np.ndarray) -> tuple[float, bool]:
    if isinstance(domain, Interval):
        xv = float(x[0])
        dist = min(abs(xv - domain.a), abs(xv - domain.b))
        exterior = not (domain.a <= xv <= domain.b)
        return dist, exterior
    if isinstance(domain, Ball):
        r = float(np.linalg.norm(x - domain.center))
        return abs(domain.radius - r), r > domain.radius
    if isinstance(domain, Polygon):
        dists, _ = _polygon_edge_distance(domain, x)
        dist = float(dists.min())
        exterior = dist > 0.0 and not _polygon_contains(domain, x)
        return dist, exterior
    raise TypeError(f"unsupported domain {domain!r}")


def distance_to_boundary(domain: DomainSpec, x, with_flag: bool = False):
    """Euclidean distance from ``x`` to the boundary of ``domain``.

    The distance is always nonnegative.  With ``with_flag=True`` a pair
    ``(distance, exterior)`` is returned, where ``exterior`` is true for
    points outside the closed domain.
    """
    x = _as_real_vector(domain, x)
    dist, exterior = _raw_distance(domain, x)
    return (dist, exterior) if with_flag else dist


def contains(domain: DomainSpec, x, closed: bool = False) -> bool:
    dist, exterior = distance_to_boundary(domain, x, with_flag=True)
    if exterior:
        return False
    return closed or dist > 0.0


def nearest_boundary_point(domain: DomainSpec, x) -> np.ndarray:
    x = _as_real_vector(domain, x)
    if isinstance(domain, Interval):
        xv = x[0]
        return np.array([domain.a if abs(xv - domain.a) <= abs(xv - domain.b) else domain.b])
    if isinstance(domain, Ball):
        r = x - domain.center
        nr = np.linalg.norm(r)
        if nr == 0.0:
            direction = np.zeros(domain.d)
            direction[0] = 1.0
        else:
            direction = r / nr
        return domain.center + domain.radius * direction
    dists, closest = _polygon_edge_distance(domain, x)
    return closest[int(np.argmin(dists))]


def outward_direction(domain: DomainSpec, x) -> np.ndarray:
    """Unit vector pointing from ``x`` across the nearest piece of boundary."""
    x = _as_real_vector(domain, x)
    b = nearest_boundary_point(domain, x)
    dist, exterior = _raw_distance(domain, x)
    if dist > 1e-14:
        u = (b - x) / np.linalg.norm(b - x)
        return -u if exterior else u
    if isinstance(domain, Interval):
        return np.array([1.0 if b[0] == domain.b else -1.0])
    if isinstance(domain, Ball):
        u = b - domain.center
        return u / np.linalg.norm(u)
    dists, _ = _polygon_edge_distance(domain, x)
    a, e = domain.edges
    k = int(np.argmin(dists))
    t = e[k] - a[k]
    n = np.array([t[1], -t[0]])
    return n / np.linalg.norm(n)


def egg_contains(domain: DomainSpec, z, closed: bool = False) -> bool:
    """Membership of ``z`` in E(domain) (open) or its closure (``closed=True``)."""
    z = as_complex_point(z, domain.d)
    dist, exterior = distance_to_boundary(domain, z.re, with_flag=True)
    if exterior:
        return False
    ny = float(np.linalg.norm(z.im))
    if closed:
        return ny <= dist
    return dist > 0.0 and ny < dist


def _real_grid(domain: DomainSpec, margin: float, n: int) -> np.ndarray:
    if isinstance(domain, Interval):
        lo, hi = domain.a + margin, domain.b - margin
        pts = np.linspace(lo, hi, n) if n > 1 else np.array([0.5 * (lo + hi)])
        return pts[:, None]
    if isinstance(domain, Ball):
        axes = [np.linspace(c - domain.radius + margin, c + domain.radius - margin, n)
                if n > 1 else np.array([c]) for c in domain.center]
    else:
        lo, hi = domain.vertices.min(axis=0), domain.vertices.max(axis=0)
        axes = [np.linspace(lo[k], hi[k], n) for k in range(2)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def sample_compact_subset(domain: DomainSpec, margin: float,
                          counts: Sequence[int]) -> list[ComplexPoint]:
    """Deterministic sample of the compact set ``|Im z| <= dist(Re z) - margin``.

    ``counts`` is ``(n_re, n_im)`` for intervals.  In dimension ``d >= 2`` it
    is ``(n_re_per_axis, n_radii[, n_directions])``; imaginary parts are
    radii along ``n_directions`` (default 4) equally spaced directions in the
    first coordinate plane.
    """
    if not margin > 0:
        raise ValueError("margin must be positive")
    counts = tuple(int(c) for c in counts)
    if len(counts) < 2 or min(counts) < 1:
        raise ValueError("counts must give at least (n_re, n_im), all >= 1")
    d = domain.d
    if not isinstance(domain, Polygon) and margin >= domain.inradius:
        raise ValueError(f"margin {margin} leaves an empty compact set")
    base = _real_grid(domain, margin, counts[0])
    out: list[ComplexPoint] = []
    for x in base:
        dist, exterior = _raw_distance(domain, x)
        if exterior or dist < margin * (1.0 - 1e-12):
            continue
        rmax = max(dist - margin, 0.0)
        if d == 1:
            scales = np.linspace(-1.0, 1.0, counts[1]) if counts[1] > 1 else np.zeros(1)
            for s in scales:
                out.append(ComplexPoint(x, [s * rmax]))
        else:
            ndir = counts[2] if len(counts) > 2 else 4
            radii = np.linspace(0.0, 1.0, counts[1]) * rmax
            for r in radii:
                if r == 0.0:
                    out.append(ComplexPoint(x, np.zeros(d)))
                    continue
                for k in range(ndir):
                    th = 2 * np.pi * k / ndir
                    y = np.zeros(d)
                    y[0], y[1] = r * np.cos(th), r * np.sin(th)
                    out.append(ComplexPoint(x, y))
    if not out:
        raise ValueError(f"margin {margin} leaves an empty compact set")
    return out
