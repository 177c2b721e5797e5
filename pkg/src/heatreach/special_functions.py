"""Heat kernels, the exponential integral E1 and closed-form target families.

All complex-valued functions use principal branches.  Multivaluedness of E1
is only exposed through :func:`e1_continued`, which continues the function
along an explicit polyline.
"""
from __future__ import annotations

import numpy as np
from scipy.special import gamma as _gamma

from .geometry import (ComplexPoint, DomainSpec, as_complex_point, contains,
                       distance_to_boundary, egg_contains, outward_direction)

__all__ = [
    "EULER_GAMMA",
    "lorentzian_constant",
    "heat_kernel",
    "heat_kernel_c",
    "exp_integral_e1",
    "e1_continued",
    "winding_increments",
    "singular_family_value",
    "singular_family_params",
    "lorentzian_target",
]

EULER_GAMMA = 0.57721566490153286061

# series / continued-fraction switch, see _series_region
_SERIES_RADIUS = 4.0
_SERIES_CANCELLATION = 8.0
_CF_MAX_ITER = 5000


def lorentzian_constant(d: int) -> float:
    """c_d = Gamma((d+1)/2) / pi^((d+1)/2)."""
    return float(_gamma((d + 1) / 2) / np.pi ** ((d + 1) / 2))


def _square(z, d: int, center=None):
    """z^T z along the last axis (or of the scalar itself when d == 1)."""
    if isinstance(z, ComplexPoint):
        z = z.z
    z = np.asarray(z)
    if center is not None:
        z = z - np.asarray(center)
    if d == 1 and (z.ndim == 0 or z.shape[-1] != 1):
        return z * z
    if z.shape[-1] != d:
        raise ValueError(f"last axis has length {z.shape[-1]}, expected d={d}")
    return np.sum(z * z, axis=-1)


def heat_kernel(t, x, d: int):
    """Free heat kernel (4 pi t)^(-d/2) exp(-|x|^2 / 4t), zero for t <= 0.

    ``x`` is a scalar (d = 1) or an array whose last axis has length ``d``.
    """
    t = np.asarray(t, dtype=float)
    r2 = _square(np.asarray(x, dtype=float), d)
    pos = t > 0
    ts = np.where(pos, t, 1.0)
    val = (4 * np.pi * ts) ** (-d / 2) * np.exp(-r2 / (4 * ts))
    out = np.where(pos, val, 0.0)
    return out[()] if out.ndim == 0 else out


def heat_kernel_c(t, z, d: int):
    """Holomorphic extension of :func:`heat_kernel` in the space variable.

    Uses ``z^2 = z^T z`` (no complex conjugation), so the result is entire in
    ``z`` for fixed ``t > 0``.
    """
    t = np.asarray(t, dtype=float)
    zz = _square(np.asarray(z.z if isinstance(z, ComplexPoint) else z, dtype=complex), d)
    pos = t > 0
    ts = np.where(pos, t, 1.0)
    val = (4 * np.pi * ts) ** (-d / 2) * np.exp(-zz / (4 * ts))
    out = np.where(pos, val, 0.0 + 0.0j)
    return out[()] if out.ndim == 0 else out


def _series_region(z: np.ndarray) -> np.ndarray:
    # The power series loses about log10(exp(|z| + Re z)) digits to
    # cancellation; it is used where that loss is small, which also covers
    # the neighbourhood of the negative axis where the fraction crawls.
    return (np.abs(z) <= _SERIES_RADIUS) | (np.abs(z) + z.real <= _SERIES_CANCELLATION)


def _e1_series(z: np.ndarray) -> np.ndarray:
    s = np.zeros_like(z)
    term = np.ones_like(z)
    active = np.ones(z.shape, dtype=bool)
    k = 0
    while active.any():
        k += 1
        term = np.where(active, -term * z / k, term)
        contrib = term / k
        s = np.where(active, s + contrib, s)
        active &= np.abs(contrib) > 1e-17 * np.abs(s)
        if k > 400:
            raise RuntimeError("E1 power series failed to converge")
    return -EULER_GAMMA - np.log(z) - s


def _e1_continued_fraction(z: np.ndarray) -> np.ndarray:
    # E1(z) = exp(-z) / (z + 1 - 1/(z + 3 - 4/(z + 5 - ...))), modified Lentz.
    tiny = 1e-300
    f = z + 1.0
    f = np.where(f == 0, tiny, f)
    C = f.copy()
    D = np.zeros_like(z)
    active = np.ones(z.shape, dtype=bool)
    for k in range(1, _CF_MAX_ITER + 1):
        a = -float(k * k)
        b = z + (2 * k + 1)
        D = b + a * D
        D = np.where(D == 0, tiny, D)
        C = b + a / C
        C = np.where(C == 0, tiny, C)
        D = 1.0 / D
        delta = C * D
        f = np.where(active, f * delta, f)
        active &= np.abs(delta - 1.0) > 1e-16
        if not active.any():
            break
    else:
        raise RuntimeError("E1 continued fraction failed to converge")
    return np.exp(-z) / f


def exp_integral_e1(zeta):
    """Principal branch of E1(zeta) = Gamma(0, zeta).

    Power series for small arguments and near the negative real axis,
    continued fraction elsewhere.  Raises ``ValueError`` at ``zeta == 0``.
    """
    z = np.asarray(zeta, dtype=complex)
    if np.any(z == 0):
        raise ValueError("E1 has a logarithmic singularity at 0")
    flat = z.ravel()
    out = np.empty_like(flat)
    ser = _series_region(flat)
    if ser.any():
        out[ser] = _e1_series(flat[ser])
    if (~ser).any():
        out[~ser] = _e1_continued_fraction(flat[~ser])
    out = out.reshape(z.shape)
    return out[()] if out.ndim == 0 else out


def winding_increments(path) -> np.ndarray:
    """Argument increments of a polyline as seen from the origin.

    Raises ``ValueError`` if the path touches 0 or any step turns by pi/2 or
    more (the continuation would be ambiguous).
    """
    p = np.atleast_1d(np.asarray(path, dtype=complex))
    if np.any(p == 0):
        raise ValueError("path touches the branch point 0")
    inc = np.angle(p[1:] / p[:-1])
    if np.any(np.abs(inc) >= np.pi / 2):
        raise ValueError("path step too coarse for unambiguous continuation")
    return inc


def e1_continued(path) -> complex:
    """Continue E1 along ``path`` starting from the principal branch.

    The only multivalued piece of E1 is ``-log``, so the continuation equals
    the principal value at the endpoint minus ``2 pi i`` times the number of
    extra sheets picked up by the argument.
    """
    p = np.atleast_1d(np.asarray(path, dtype=complex))
    inc = winding_increments(p)
    arg_end = np.angle(p[0]) + inc.sum()
    sheets = np.round((arg_end - np.angle(p[-1])) / (2 * np.pi))
    return complex(exp_integral_e1(p[-1]) - 2j * np.pi * sheets)


def singular_family_value(z, x0, a: complex, d: int):
    """(4 pi)^(-d/2) E1(((z - x0)^T (z - x0) + a) / 4), principal branch."""
    zz = np.asarray(z.z if isinstance(z, ComplexPoint) else z, dtype=complex)
    arg = (_square(zz, d, center=np.asarray(x0, dtype=float)) + a) / 4.0
    if np.any(arg == 0):
        raise ValueError("evaluation at the singular point of the family")
    return (4 * np.pi) ** (-d / 2) * exp_integral_e1(arg)


def singular_family_params(p, domain: DomainSpec) -> tuple[np.ndarray, complex]:
    """Exterior source point ``x0`` and parameter ``a`` singular at ``p``.

    ``p`` must lie outside the closed analyticity domain of ``domain``.  The
    source point is searched on the ray from ``Re p`` across its nearest
    boundary point, at distances strictly between ``dist(Re p)`` and
    ``|Im p|``.  ``a = -(p - x0)^T (p - x0)`` then has positive real part and
    places the logarithmic singularity exactly at ``p``.
    """
    p = as_complex_point(p, domain.d)
    if egg_contains(domain, p, closed=True):
        raise ValueError("p lies in the closed analyticity domain; no singular family exists")
    x, y = p.re, p.im
    ny = float(np.linalg.norm(y))
    dist, exterior = distance_to_boundary(domain, x, with_flag=True)
    if exterior:
        candidates = [np.array(x)]
    else:
        u = outward_direction(domain, x)
        lo = dist
        candidates = [x + (lo + f * (ny - lo)) * u
                      for f in (2 / 3, 1 / 2, 5 / 6, 1 / 3, 0.9, 0.1, 0.99, 0.01)]
    for x0 in candidates:
        if contains(domain, x0, closed=True):
            continue
        if not np.linalg.norm(x - x0) < ny:
            continue
        a = complex(-_square(p.z - x0, domain.d))
        if a.real > 0:
            return np.asarray(x0, dtype=float), a
    raise ValueError("no admissible exterior source point found for p")


def lorentzian_target(alpha: float, d: int, z):
    """c_d alpha (2 pi)^((d+2)/2) / (4 pi^2 alpha^2 + z^T z)^((d+1)/2).

    Singular on ``z^T z = -4 pi^2 alpha^2``; the principal power is used, and
    arguments on its cut raise ``ValueError``.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    zz = _square(np.asarray(z.z if isinstance(z, ComplexPoint) else z, dtype=complex), d)
    base = 4 * np.pi ** 2 * alpha ** 2 + zz
    on_cut = (base.real <= 0) & (base.imag == 0) if (d + 1) % 2 else (base == 0)
    if np.any(on_cut):
        raise ValueError("argument on the branch cut / pole of the Lorentzian")
    val = lorentzian_constant(d) * alpha * (2 * np.pi) ** ((d + 2) / 2) * base ** (-(d + 1) / 2)
    return val[()] if np.ndim(val) == 0 else val
