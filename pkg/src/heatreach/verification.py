"""Numerical experiments on convergence, contour shifting and singular families.

* :func:`convergence_sweep` measures how fast ``K_t(u chi)`` approaches ``u``
  on a compact part of the analyticity domain as ``t -> 0``.
* :func:`contour_shift_check` verifies the split of the real-axis heat
  integral into a shifted-line integral plus a strip integral against the
  d-bar derivative of a tube cutoff (Stokes' theorem).
* :func:`optimality_cross_check` compares a heat field driven by an exterior
  point source with its closed form in terms of E1.
* :func:`monodromy_detect` continues that closed form around its branch
  point and measures the jump.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import NumericalGuardError
from .geometry import (ComplexPoint, DomainSpec, Interval, as_complex_point, contains,
                       egg_contains, sample_compact_subset)
from .io import write_csv, write_two_column
from .special_functions import (e1_continued, exp_integral_e1, singular_family_params,
                                singular_family_value, winding_increments)
from .wick_synthesis import GUARD, CutoffBump, HolomorphicTarget, _composite_gl

__all__ = [
    "ConvergenceReport",
    "MonodromyReport",
    "ContourShiftResult",
    "OptimalityReport",
    "convergence_sweep",
    "contour_shift_check",
    "optimality_cross_check",
    "monodromy_detect",
    "write_convergence_csv",
]


# ---------------------------------------------------------------- convergence

@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    margin: float
    counts: tuple
    n_points: int
    ts: np.ndarray
    errors: np.ndarray

    def __post_init__(self):
        if np.shape(self.ts) != np.shape(self.errors):
            raise ValueError("one error per t value is required")
        if np.any(np.diff(self.ts) >= 0):
            raise ValueError("t values must be strictly decreasing")
        if np.any(self.errors < 0):
            raise ValueError("errors must be nonnegative")

    @property
    def strictly_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.errors) < 0))


def _domain_center_radius(domain: DomainSpec) -> tuple[np.ndarray, float]:
    if isinstance(domain, Interval):
        return domain.center, domain.inradius
    if hasattr(domain, "radius"):
        return domain.center, float(domain.radius)
    raise ValueError("convergence_sweep supports intervals and balls")


def _real_rule(cutoff: CutoffBump, t: float, bmax: float, center: float):
    width = min(np.sqrt(t) / 2, (cutoff.Rp - cutoff.R) / 4)
    if bmax > 0:
        width = min(width, 2 * np.pi * t / bmax)
    R, Rp = cutoff.R, cutoff.Rp
    x, w = _composite_gl([-Rp, -R, R, Rp], width)
    return x + center, w


def heat_extension(target: HolomorphicTarget, cutoff: CutoffBump, t: float, z,
                   center=None, guard: float = GUARD) -> np.ndarray:
    """``K_t(u chi)(z)`` from the real-axis integral, ``chi = psi(|w - center|)``."""
    d = target.d
    Z = np.asarray(z.z if isinstance(z, ComplexPoint) else z, dtype=complex).reshape(-1, d)
    center = np.zeros(d) if center is None else np.asarray(center, dtype=float).reshape(d)
    logamp = np.sum(Z.imag ** 2, axis=1) / (4 * t)
    if np.any(logamp > np.log(guard)):
        raise NumericalGuardError(f"amplification exp({logamp.max():.1f}) exceeds {guard:g}")
    bmax = float(np.max(np.abs(Z.imag)))
    if d == 1:
        w, wq = _real_rule(cutoff, t, bmax, center[0])
        f = target(w.astype(complex)) * cutoff(np.abs(w - center[0])) * wq
        K = np.exp(-((Z[:, 0, None] - w[None, :]) ** 2) / (4 * t))
        return (4 * np.pi * t) ** -0.5 * np.sum(K * f[None, :], axis=1)
    if d == 2:
        w1, wq1 = _real_rule(cutoff, t, bmax, center[0])
        w2, wq2 = _real_rule(cutoff, t, bmax, center[1])
        W1, W2 = np.meshgrid(w1, w2, indexing="ij")
        F = target(np.stack([W1, W2], axis=-1).astype(complex)) \
            * cutoff(np.hypot(W1 - center[0], W2 - center[1])) * np.outer(wq1, wq2)
        A = np.exp(-((Z[:, 0, None] - w1[None, :]) ** 2) / (4 * t))
        B = np.exp(-((Z[:, 1, None] - w2[None, :]) ** 2) / (4 * t))
        return (4 * np.pi * t) ** -1.0 * np.sum(A * np.einsum("ij,wj->wi", F, B), axis=1)
    raise ValueError("d = 1 and d = 2 only")


def convergence_sweep(target: HolomorphicTarget, domain: DomainSpec, cutoff: CutoffBump,
                      margin: float, ts, counts=(21, 9)) -> ConvergenceReport:
    """Sup over a compact sample of ``|K_t(u chi)(z) - u(z)|`` for each ``t``."""
    ts = np.asarray(ts, dtype=float)
    if np.any(ts <= 0) or np.any(np.diff(ts) >= 0):
        raise ValueError("ts must be positive and strictly decreasing")
    center, radius = _domain_center_radius(domain)
    if cutoff.R < radius:
        raise ValueError("cutoff must equal 1 on the closed domain")
    if cutoff.Rp > target.analyticity_radius:
        raise ValueError("cutoff support exceeds the target's analyticity radius")
    pts = sample_compact_subset(domain, margin, counts)
    Z = np.array([p.z for p in pts])
    exact = target(Z)
    errs = np.array([np.max(np.abs(heat_extension(target, cutoff, t, Z, center) - exact))
                     for t in ts])
    return ConvergenceReport(float(margin), tuple(counts), len(pts), ts, errs)


def write_convergence_csv(directory, report: ConvergenceReport, metadata=None):
    from pathlib import Path
    directory = Path(directory)
    meta = {"margin": report.margin, "counts": list(report.counts),
            "n_points": report.n_points, **(metadata or {})}
    a = write_csv(directory / "convergence.csv", ["t", "sup_error"],
                  zip(report.ts, report.errors), meta)
    b = write_two_column(directory / "convergence.dat", report.ts, report.errors,
                         "t sup_error")
    return a, b


# -------------------------------------------------------------- contour shift

@dataclass(frozen=True)
class ContourShiftResult:
    direct: complex
    I1: complex
    I2: complex

    @property
    def residual(self) -> float:
        return abs(self.direct - (self.I1 + self.I2))

    def __iter__(self):
        return iter((self.direct, self.I1, self.I2))


def contour_shift_check(z, t: float, target: HolomorphicTarget, cutoff2d: CutoffBump,
                        domain: Interval | None = None, panels: int = 96,
                        guard: float = GUARD) -> ContourShiftResult:
    """Real-axis integral versus shifted line plus d-bar strip integral (d = 1).

    With ``F(w) = (4 pi t)^(-1/2) exp(-(z - w)^2 / 4t) u(w)`` and the tube
    cutoff ``chi``:

        int_R F chi = int_{R + i v} F chi + sign(v) 2i int_strip F dbar(chi) dA,

    where ``v = Im z`` and the strip lies between the two lines.
    """
    domain = domain or Interval(-1.0, 1.0)
    if target.d != 1:
        raise ValueError("contour_shift_check is one-dimensional")
    z = complex(as_complex_point(z, 1).z[0])
    if not egg_contains(domain, [z]):
        raise ValueError("z must lie in the analyticity domain")
    c = float(domain.center[0])
    L = domain.inradius
    if cutoff2d.R < L:
        raise ValueError("tube cutoff is not identically 1 on the closed egg")
    if cutoff2d.Rp + 2 * cutoff2d.beta > target.analyticity_radius:
        raise ValueError("tube cutoff support exceeds the target's analyticity radius")
    x, v = z.real - c, z.imag
    if v * v / (4 * t) > np.log(guard):
        raise NumericalGuardError("direct integral amplification exceeds the guard")
    half = cutoff2d.Rp + 2 * cutoff2d.beta
    pre = (4 * np.pi * t) ** -0.5
    s, ws = _composite_gl([-half, half], 2 * half / panels)

    def F(w):
        return pre * np.exp(-((z - c - w) ** 2) / (4 * t)) * target(w + c)

    direct = np.sum(F(s + 0j) * cutoff2d.tube(s, 0.0) * ws)
    I1 = np.sum(F(s + 1j * v) * cutoff2d.tube(s, v) * ws)
    if v == 0:
        return ContourShiftResult(complex(direct), complex(I1), 0j)
    y, wy = _composite_gl([min(0.0, v), max(0.0, v)], abs(v) / 8)
    S, Y = np.meshgrid(s, y, indexing="ij")
    integrand = F(S + 1j * Y) * cutoff2d.tube_dbar(S, Y) * np.outer(ws, wy)
    I2 = np.sign(v) * 2j * np.sum(integrand)
    return ContourShiftResult(complex(direct), complex(I1), complex(I2))


# ---------------------------------------------------------------- optimality

@dataclass(frozen=True, eq=False)
class OptimalityReport:
    x0: np.ndarray
    a: complex
    points: np.ndarray
    integral: np.ndarray
    closed_form: np.ndarray
    source_exterior: bool
    substitution_residual: float

    @property
    def max_error(self) -> float:
        return float(np.max(np.abs(self.integral - self.closed_form)))


def _s_integral(rho: complex, t: float, d: int, x0_term: complex) -> complex:
    """``(4 pi)^(-d/2) int_0^t (t-s)^(-d/2) e^{-zeta/4(t-s)} e^{-a/4(1-s)} (1-s)^(d/2-1) ds``.

    ``x0_term = (z - x0)^2``, ``rho - x0_term = a``.  Substituting
    ``1 - s = sigma^2`` removes the endpoint factor.
    """
    a = rho - x0_term
    lo = np.sqrt(max(1.0 - t, 0.0))

    def f(sig):
        r = 1.0 - sig * sig  # = s
        tau = t - r
        if tau <= 0:
            return 0j
        val = tau ** (-d / 2) * np.exp(-x0_term / (4 * tau) - a / (4 * sig * sig)) \
            * sig ** (d - 2)
        return 2 * sig * val

    val, _ = quad(f, lo, 1.0, complex_func=True, epsabs=1e-14, epsrel=1e-12, limit=400)
    return (4 * np.pi) ** (-d / 2) * val


def optimality_cross_check(domain: Interval, p, nt_quad: int = 100,
                           x0=None, a=None, points=None) -> OptimalityReport:
    """Adaptive s-integral at ``t = 1`` versus ``(4 pi)^(-1/2) E1(((z - x0)^2 + a) / 4)``.

    ``nt_quad`` egg points are used unless ``points`` is given.  When ``x0``
    and ``a`` are omitted they come from
    :func:`~heatreach.special_functions.singular_family_params`.
    """
    if domain.d != 1:
        raise ValueError("optimality_cross_check is one-dimensional")
    if x0 is None or a is None:
        x0, a = singular_family_params(p, domain)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    a = complex(a)
    if points is None:
        rng = np.random.default_rng(20240611)
        c, L = float(domain.center[0]), domain.inradius
        pts = []
        while len(pts) < nt_quad:
            xr, yi = rng.uniform(-L, L), rng.uniform(-L, L)
            if abs(xr) + abs(yi) < 0.98 * L:
                pts.append(c + xr + 1j * yi)
        points = np.array(pts)
    points = np.asarray(points, dtype=complex).ravel()
    x0t = (points - x0[0]) ** 2
    rho = x0t + a
    if np.any(rho.real <= 0):
        raise ValueError("Re((z - x0)^2 + a) must be positive on the sample")
    integral = np.array([_s_integral(r, 1.0, 1, q) for r, q in zip(rho, x0t)])
    closed = np.asarray(singular_family_value(points, x0, a, 1))
    # at t = 1 the integrand reduces to s^-1 exp(-rho / 4s) on (0, 1)
    r0 = rho[0]
    alt, _ = quad(lambda s: np.exp(-r0 / (4 * s)) / s, 0.0, 1.0, complex_func=True,
                  epsabs=1e-14, epsrel=1e-12, limit=400)
    sub_res = abs(alt - exp_integral_e1(r0 / 4))
    return OptimalityReport(x0, a, points, integral, closed,
                            not contains(domain, x0, closed=True), float(sub_res))


# ------------------------------------------------------------------ monodromy

@dataclass(frozen=True)
class MonodromyReport:
    singular_point: ComplexPoint
    loop_center: complex
    loop_radius: float
    steps: int
    orientation: int
    winding: int
    start_value: complex
    end_value: complex
    contour_jump: complex

    def __post_init__(self):
        if self.steps < 16:
            raise ValueError("steps must be at least 16")

    @property
    def jump(self) -> complex:
        return self.end_value - self.start_value


def monodromy_detect(x0, a: complex, d: int = 1, loop_radius: float = 0.2,
                     steps: int = 128, center: complex | None = None,
                     orientation: int = 1) -> MonodromyReport:
    """Continue ``(4 pi)^(-d/2) E1(((z - x0)^2 + a) / 4)`` around a closed circle.

    The branch point is ``z* = x0 + r`` with ``r^2 = -a`` and ``Im r > 0``.
    By default the circle is centred at ``z*``; pass ``center`` to move it.
    A loop around both roots of ``(z - x0)^2 = -a`` is rejected.
    """
    if d != 1:
        raise ValueError("monodromy_detect is one-dimensional")
    if steps < 16:
        raise ValueError("steps must be at least 16")
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 or -1")
    x0 = float(np.ravel(x0)[0])
    a = complex(a)
    r = np.sqrt(-a + 0j)
    if r.imag < 0 or (r.imag == 0 and r.real < 0):
        r = -r
    zstar = x0 + r
    c = zstar if center is None else complex(center)
    theta = orientation * 2 * np.pi * np.arange(steps + 1) / steps
    z = c + loop_radius * np.exp(1j * theta)
    z[-1] = z[0]
    zeta = ((z - x0) ** 2 + a) / 4.0
    winding = int(np.round(winding_increments(zeta).sum() / (2 * np.pi)))
    if abs(winding) >= 2:
        raise ValueError("loop encloses both branch points; reduce the radius")
    scale = (4 * np.pi) ** (-d / 2)
    start = scale * complex(exp_integral_e1(zeta[0]))
    end = scale * e1_continued(zeta)
    # independent check: trapezoid rule for the loop integral of g'
    zz = z[:-1]
    dz = 1j * (zz - c) * (2 * np.pi / steps) * orientation
    zt = ((zz - x0) ** 2 + a) / 4.0
    gprime = -scale * np.exp(-zt) / zt * (zz - x0) / 2.0
    contour = complex(np.sum(gprime * dz))
    return MonodromyReport(ComplexPoint.from_complex(zstar), c, float(loop_radius), steps,
                           orientation, winding, start, end, contour)
