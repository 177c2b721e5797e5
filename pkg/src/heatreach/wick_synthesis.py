"""Boundary controls that steer the heat equation on a ball to a holomorphic target.

Given a target ``u`` holomorphic on ``{|Re z| + |Im z| < R'}`` with ``R' > R``,
the slice data ``y -> u(i y)`` is cut off smoothly outside ``|y| <= R`` and
evolved by the heat equation:

    Phi_t(w) = (4 pi t)^(-d/2) int exp(-(w - y)^T (w - y) / 4t) u(i y) psi(|y|) dy.

``Phi_t`` is entire in ``w``.  Rotating the space variable back,
``(t, x) -> Phi_{T - t}(-i x)`` solves the forward heat equation on
``[0, T) x B_R`` and tends to ``u(x)`` as ``t -> T``.  Its initial value is the
state ``g`` and its trace on the sphere is the Dirichlet control ``h``.

Evaluating ``Phi_s(-i y)`` for small ``s`` amplifies rounding by
``exp(|y|^2 / 4s)``.  Samples whose amplification exceeds a sampling
threshold are not computed; they are filled by a cubic spline in ``s`` that
ends at the limit value ``u(y)`` at ``s = 0``.  A hard guard refuses any
evaluation above ``1e12``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from .errors import NumericalGuardError
from .geometry import Ball, ComplexPoint, DomainSpec, Interval
from .io import write_csv
from .reference_solver import crank_nicolson_solve, disk_grid, interval_grid
from .special_functions import exp_integral_e1, lorentzian_target

__all__ = [
    "HolomorphicTarget",
    "CutoffBump",
    "ControlSchedule",
    "RoundtripReport",
    "smooth_step",
    "smooth_step_derivative",
    "make_cutoff",
    "heat_evolve_slice",
    "cutoff_tail_bound",
    "wick_synthesize",
    "roundtrip_verify",
    "write_schedule_csv",
]

GUARD = 1e12
SAMPLE_THRESHOLD = 1e8
_GL_ORDER = 16


# --------------------------------------------------------------------- targets

def _as_points(z, d: int) -> np.ndarray:
    """Complex array of shape ``(..., d)``."""
    if isinstance(z, ComplexPoint):
        z = z.z
    z = np.asarray(z, dtype=complex)
    if d == 1 and (z.ndim == 0 or z.shape[-1] != 1):
        z = z[..., None]
    if z.shape[-1] != d:
        raise ValueError(f"points have trailing size {z.shape[-1]}, expected {d}")
    return z


@dataclass(frozen=True, eq=False)
class HolomorphicTarget:
    """A named family of holomorphic functions with a known analyticity radius.

    ``analyticity_radius`` is the largest ``R'`` such that the function is
    holomorphic on ``{|Re z| + |Im z| < R'}`` (``inf`` for entire functions).
    Construct through the class methods.
    """

    family: str
    d: int
    params: dict
    analyticity_radius: float
    parts: tuple = field(default=())

    @classmethod
    def polynomial(cls, coefficients: dict, d: int) -> "HolomorphicTarget":
        """``sum c_k z^k`` with multi-index keys, e.g. ``{(2, 0): 1, (0, 2): -1}``."""
        coeffs = {}
        for k, c in coefficients.items():
            k = (int(k),) if np.isscalar(k) else tuple(int(e) for e in k)
            if len(k) != d or min(k) < 0:
                raise ValueError(f"bad exponent {k} for d={d}")
            coeffs[k] = complex(c)
        return cls("polynomial", d, {"coefficients": coeffs}, float("inf"))

    @classmethod
    def lorentzian(cls, alpha: float, d: int) -> "HolomorphicTarget":
        if not alpha > 0:
            raise ValueError("alpha must be positive")
        return cls("lorentzian", d, {"alpha": float(alpha)}, 2 * np.pi * alpha)

    @classmethod
    def pole_quotient(cls, p0: complex, d: int) -> "HolomorphicTarget":
        """``1 / (z_1 - p0)``."""
        p0 = complex(p0)
        if p0.imag == 0 and abs(p0.real) == 0:
            raise ValueError("pole at the origin")
        return cls("pole_quotient", d, {"p0": p0}, abs(p0.real) + abs(p0.imag))

    @classmethod
    def singular_e1(cls, x0: float, a: complex) -> "HolomorphicTarget":
        """``(4 pi)^(-1/2) E1(((z - x0)^2 + a) / 4)`` in one dimension, principal branch."""
        x0 = float(np.ravel(x0)[0])
        a = complex(a)
        return cls("singular_e1", 1, {"x0": x0, "a": a}, _e1_cut_radius(x0, a))

    @classmethod
    def sum(cls, *targets: "HolomorphicTarget") -> "HolomorphicTarget":
        if not targets or len({t.d for t in targets}) != 1:
            raise ValueError("need targets of a common dimension")
        return cls("sum", targets[0].d, {}, min(t.analyticity_radius for t in targets),
                   tuple(targets))

    def __call__(self, z):
        z = _as_points(z, self.d)
        if self.family == "polynomial":
            out = np.zeros(z.shape[:-1], dtype=complex)
            for k, c in self.params["coefficients"].items():
                out = out + c * np.prod(z ** np.asarray(k), axis=-1)
            return out
        if self.family == "lorentzian":
            return np.asarray(lorentzian_target(self.params["alpha"], self.d, z))
        if self.family == "pole_quotient":
            return 1.0 / (z[..., 0] - self.params["p0"])
        if self.family == "singular_e1":
            rho = (z[..., 0] - self.params["x0"]) ** 2 + self.params["a"]
            return (4 * np.pi) ** -0.5 * np.asarray(exp_integral_e1(rho / 4.0))
        if self.family == "sum":
            return sum(p(z) for p in self.parts)
        raise ValueError(f"unknown family {self.family}")

    def describe(self) -> dict:
        if self.family == "polynomial":
            params = {"coefficients": {",".join(map(str, k)): [c.real, c.imag]
                                       for k, c in self.params["coefficients"].items()}}
        elif self.family == "sum":
            params = {"parts": [p.describe() for p in self.parts]}
        else:
            params = {k: ([v.real, v.imag] if isinstance(v, complex) else v)
                      for k, v in self.params.items()}
        return {"family": self.family, "d": self.d, "analyticity_radius": self.analyticity_radius,
                **params}


def _e1_cut_radius(x0: float, a: complex) -> float:
    # the principal branch jumps where (z - x0)^2 + a lies on (-inf, 0]
    def radius(s):
        r = np.sqrt(complex(-a - s))
        return min(abs(x0 + r.real) + abs(r.imag), abs(x0 - r.real) + abs(r.imag))

    grid = np.concatenate([[0.0], np.logspace(-8, 6, 4000)])
    vals = np.array([radius(s) for s in grid])
    k = int(np.argmin(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    res = minimize_scalar(radius, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-14 * max(1.0, hi)})
    return float(min(vals[k], res.fun))


# --------------------------------------------------------------------- cutoffs

def smooth_step(s):
    """``B(s) = e(s) / (e(s) + e(1 - s))`` with ``e(s) = exp(-1/s)`` for ``s > 0``."""
    s = np.asarray(s, dtype=float)
    inner = (s > 0) & (s < 1)
    si = np.where(inner, s, 0.5)
    with np.errstate(over="ignore"):  # subnormal s: exp(-inf) = 0 is the right limit
        a = np.exp(-1.0 / si)
        b = np.exp(-1.0 / (1.0 - si))
    out = np.where(s >= 1, 1.0, np.where(inner, a / (a + b), 0.0))
    return out[()] if out.ndim == 0 else out


def smooth_step_derivative(s):
    s = np.asarray(s, dtype=float)
    inner = (s > 0) & (s < 1)
    si = np.where(inner, s, 0.5)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        a = np.exp(-1.0 / si)
        b = np.exp(-1.0 / (1.0 - si))
        val = a * b * (1 / si ** 2 + 1 / (1 - si) ** 2) / (a + b) ** 2
    val = np.nan_to_num(val, nan=0.0, posinf=0.0)
    out = np.where(inner, val, 0.0)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class CutoffBump:
    """Smooth cutoff equal to 1 up to ``R`` and 0 from ``Rp`` on.

    Used radially as ``psi(r)`` and, in one dimension, as a tube cutoff over
    the complex plane through the smoothed l1 norm
    ``n_beta(x, y) = sqrt(x^2 + beta^2) + sqrt(y^2 + beta^2) - 2 beta``.
    """

    R: float
    Rp: float
    beta: float = 0.0

    def __post_init__(self):
        if not 0 < self.R < self.Rp:
            raise ValueError("cutoff needs 0 < R < Rp")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")

    def __call__(self, r):
        return smooth_step((self.Rp - np.asarray(r, dtype=float)) / (self.Rp - self.R))

    def derivative(self, r):
        return -smooth_step_derivative((self.Rp - np.asarray(r, dtype=float))
                                       / (self.Rp - self.R)) / (self.Rp - self.R)

    def _nbeta(self, x, y):
        b = self.beta
        return np.sqrt(x * x + b * b) + np.sqrt(y * y + b * b) - 2 * b

    def tube(self, x, y):
        return self(self._nbeta(np.asarray(x, float), np.asarray(y, float)))

    def tube_dbar(self, x, y):
        """``(d/dx + i d/dy) / 2`` of :meth:`tube`, in closed form."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        b = self.beta
        dpsi = self.derivative(self._nbeta(x, y))
        nx = x / np.sqrt(x * x + b * b) if b > 0 else np.sign(x)
        ny = y / np.sqrt(y * y + b * b) if b > 0 else np.sign(y)
        return 0.5 * dpsi * (nx + 1j * ny)

    def describe(self) -> dict:
        return {"R": self.R, "Rp": self.Rp, "beta": self.beta}


def make_cutoff(R: float, Rp: float, beta: float = 0.0) -> CutoffBump:
    return CutoffBump(float(R), float(Rp), float(beta))


# ---------------------------------------------------------------- quadrature

def _composite_gl(breaks: Sequence[float], max_width: float, order: int = _GL_ORDER):
    xg, wg = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if hi <= lo:
            continue
        n = max(1, int(np.ceil((hi - lo) / max_width)))
        edges = np.linspace(lo, hi, n + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        nodes.append((mid[:, None] + half[:, None] * xg[None, :]).ravel())
        weights.append((half[:, None] * wg[None, :]).ravel())
    return np.concatenate(nodes), np.concatenate(weights)


def _panel_width(cutoff: CutoffBump, t: float, bmax: float) -> float:
    width = min(2 * np.sqrt(t), (cutoff.Rp - cutoff.R) / 4)
    if bmax > 0:
        width = min(width, 4 * np.pi * t / bmax)
    return width


def _slice_rule(cutoff: CutoffBump, t: float, bmax: float):
    R, Rp = cutoff.R, cutoff.Rp
    return _composite_gl([-Rp, -R, R, Rp], _panel_width(cutoff, t, bmax))


def _log_amplification(w: np.ndarray, t: float) -> np.ndarray:
    return np.sum(w.imag ** 2, axis=-1) / (4 * t)


def heat_evolve_slice(target: HolomorphicTarget, cutoff: CutoffBump, t: float, w,
                      guard: float = GUARD):
    """``Phi_t(w)`` for one point or an array of points.

    ``w`` is a :class:`ComplexPoint`, a complex scalar (d = 1) or an array of
    shape ``(n, d)``; the result is a complex scalar or an array of length ``n``.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if cutoff.Rp > target.analyticity_radius:
        raise ValueError("cutoff support exceeds the target's analyticity radius")
    d = target.d
    scalar = isinstance(w, ComplexPoint) or np.ndim(w) == 0 or (d > 1 and np.ndim(w) == 1)
    W = _as_points(w, d).reshape(-1, d)
    logamp = _log_amplification(W, t)
    if np.any(logamp > np.log(guard)):
        worst = float(np.max(np.sum(W.imag ** 2, axis=-1)))
        raise NumericalGuardError(
            f"amplification exp(|Im w|^2/4t) = exp({logamp.max():.1f}) exceeds {guard:g}; "
            f"use t >= {worst / (4 * np.log(guard)):.4g}")
    bmax = float(np.max(np.abs(W.imag))) if W.size else 0.0
    y, wy = _slice_rule(cutoff, t, bmax)
    if d == 1:
        f = target(1j * y) * cutoff(np.abs(y)) * wy
        out = np.empty(W.shape[0], dtype=complex)
        for s in range(0, W.shape[0], 256):
            wc = W[s:s + 256, 0]
            K = np.exp(-((wc[:, None] - y[None, :]) ** 2) / (4 * t))
            out[s:s + 256] = np.sum(K * f[None, :], axis=1)
        out *= (4 * np.pi * t) ** -0.5
    elif d == 2:
        Y1, Y2 = np.meshgrid(y, y, indexing="ij")
        F = target(1j * np.stack([Y1, Y2], axis=-1)) * cutoff(np.hypot(Y1, Y2)) \
            * np.outer(wy, wy)
        out = np.empty(W.shape[0], dtype=complex)
        for s in range(0, W.shape[0], 64):
            A = np.exp(-((W[s:s + 64, 0, None] - y[None, :]) ** 2) / (4 * t))
            B = np.exp(-((W[s:s + 64, 1, None] - y[None, :]) ** 2) / (4 * t))
            C = np.einsum("ij,wj->wi", F, B)
            out[s:s + 64] = np.sum(A * C, axis=1)
        out *= (4 * np.pi * t) ** -1.0
    else:
        raise ValueError("heat_evolve_slice supports d = 1 and d = 2")
    return complex(out[0]) if scalar else out


def cutoff_tail_bound(target: HolomorphicTarget, cutoff: CutoffBump, t: float, x) -> np.ndarray:
    """Bound on ``|Phi_t(-i x) - Phi_t^full(-i x)|`` caused by the cutoff.

    ``Phi^full`` integrates the slice data without cutoff (meaningful for
    entire targets).  The bound integrates ``|kernel| |u(i y)| (1 - psi)``
    over ``|y| >= R``; for non-entire targets only ``R <= |y| <= Rp`` counts.
    """
    d = target.d
    X = np.asarray(x, dtype=float).reshape(-1, d)
    r2 = np.sum(X ** 2, axis=1)
    R, Rp = cutoff.R, cutoff.Rp
    far = Rp + 12 * np.sqrt(t) + 2.0 if np.isinf(target.analyticity_radius) else Rp
    rho, wr = _composite_gl([R, Rp, far], min(np.sqrt(t), (Rp - R) / 8))
    weight = 1.0 - cutoff(rho)
    if d == 1:
        mag = np.abs(target(1j * rho)) + np.abs(target(-1j * rho))
        radial = weight * mag * wr
        expo = (r2[:, None] - rho[None, :] ** 2) / (4 * t)
        return (4 * np.pi * t) ** -0.5 * np.sum(np.exp(expo) * radial[None, :], axis=1)
    nphi = 64
    phi = 2 * np.pi * np.arange(nphi) / nphi
    pts = rho[:, None, None] * np.stack([np.cos(phi), np.sin(phi)], axis=-1)[None]
    mag = np.abs(target(1j * pts)).mean(axis=1) * 2 * np.pi
    radial = weight * mag * rho * wr
    expo = (r2[:, None] - rho[None, :] ** 2) / (4 * t)
    return (4 * np.pi * t) ** (-d / 2) * np.sum(np.exp(expo) * radial[None, :], axis=1)


# ------------------------------------------------------------------ synthesis

@dataclass(frozen=True, eq=False)
class ControlSchedule:
    """Initial state ``g`` and Dirichlet control ``h`` reaching a target at ``T``.

    ``g`` lives on ``g_points`` (the reference-solver grid, boundary
    included); ``h[k, j]`` is the control at ``times[k]`` on
    ``boundary_points[j]``.  ``interpolated[k]`` marks time levels filled by
    the spline rather than evaluated.
    """

    domain: DomainSpec
    T: float
    times: np.ndarray
    g_points: np.ndarray
    g: np.ndarray
    boundary_points: np.ndarray
    h: np.ndarray
    interpolated: np.ndarray
    tail: np.ndarray
    metadata: dict

    @property
    def d(self) -> int:
        return self.g_points.shape[1]


def _ball_radius(domain: DomainSpec) -> tuple[float, int]:
    if isinstance(domain, Interval):
        if abs(domain.a + domain.b) > 1e-14:
            raise ValueError("synthesis needs a ball centred at 0")
        return domain.b, 1
    if isinstance(domain, Ball):
        if np.any(domain.center != 0):
            raise ValueError("synthesis needs a ball centred at 0")
        if domain.d not in (1, 2):
            raise ValueError("synthesis supports d = 1 and d = 2")
        return float(domain.radius), domain.d
    raise ValueError("Wick synthesis is only available for balls")


def wick_synthesize(target: HolomorphicTarget, domain: DomainSpec, T: float,
                    cutoff: CutoffBump, grids: dict, *,
                    sample_threshold: float = SAMPLE_THRESHOLD, guard: float = GUARD,
                    threads: int = 1) -> ControlSchedule:
    """Build ``(g, h)`` so that the controlled heat flow equals ``target`` at ``T``.

    ``grids`` holds ``nt`` (time steps) and either ``nx`` (interval cells) or
    ``nr`` and ``ntheta`` (disk rings and angles); the spatial grids are the
    ones used by :func:`~heatreach.reference_solver.crank_nicolson_solve`.
    """
    R, d = _ball_radius(domain)
    if d != target.d:
        raise ValueError("target and domain dimensions differ")
    if cutoff.R < R:
        raise ValueError("cutoff must equal 1 on the whole slice |y| <= R")
    if cutoff.Rp > target.analyticity_radius:
        raise ValueError("cutoff support exceeds the target's analyticity radius")
    if not T > 0:
        raise ValueError("T must be positive")
    nt = int(grids["nt"])
    if d == 1:
        nx = int(grids["nx"])
        gp = interval_grid(Interval(-R, R), nx)[:, None]
        bp = np.array([[-R], [R]])
        spatial = {"nx": nx}
    else:
        nr, nth = int(grids["nr"]), int(grids["ntheta"])
        _, _, gp = disk_grid(Ball(np.zeros(2), R), nr, nth)
        bp = gp[-nth:]
        spatial = {"nr": nr, "ntheta": nth}

    log_guard = np.log(guard)
    if R ** 2 / (4 * T) > log_guard:
        raise NumericalGuardError(
            f"initial state needs amplification exp({R ** 2 / (4 * T):.1f}) > {guard:g}; "
            f"use T >= {R ** 2 / (4 * log_guard):.4g}")
    s_min = R ** 2 / (4 * np.log(sample_threshold))
    if s_min > 0.5 * T:
        raise NumericalGuardError(
            f"too little of the schedule can be sampled at T = {T}; use T >= {2 * s_min:.4g}")

    times = np.linspace(0.0, T, nt + 1)
    s = T - times
    evaluate = (s > 0) & (s >= s_min)
    wb = -1j * bp

    def row(k):
        return heat_evolve_slice(target, cutoff, s[k], wb, guard=guard)

    idx = np.flatnonzero(evaluate)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, idx))
    else:
        rows = [row(k) for k in idx]
    h = np.empty((nt + 1, bp.shape[0]), dtype=complex)
    h[idx] = np.asarray(rows)
    h[-1] = target(bp.astype(complex))
    missing = ~evaluate
    missing[-1] = False
    if missing.any():
        known = np.flatnonzero(~missing)
        order = np.argsort(s[known])
        spline = CubicSpline(s[known][order], h[known][order], axis=0)
        h[missing] = spline(s[missing])

    g = heat_evolve_slice(target, cutoff, T, -1j * gp, guard=guard)
    # the t = 0 control row and the boundary values of g are the same numbers
    if d == 1:
        g[[0, -1]] = h[0]
    else:
        g[-bp.shape[0]:] = h[0]
    tail = cutoff_tail_bound(target, cutoff, T, gp)
    step_mismatch = float(np.max(np.abs(h[-2] - h[-1]))) if nt >= 1 else 0.0
    meta = {
        "target": target.describe(),
        "cutoff": cutoff.describe(),
        "T": T,
        "nt": nt,
        **spatial,
        "sample_threshold": sample_threshold,
        "guard": guard,
        "amplification_estimate": float(np.exp(min(R ** 2 / (4 * s[idx].min()), 700)))
        if idx.size else 1.0,
        "interpolated_steps": int(missing.sum()),
        "interpolation_window": float(s_min),
        "final_step_mismatch": step_mismatch,
        "max_cutoff_tail": float(np.max(tail)),
    }
    return ControlSchedule(domain, T, times, gp, g, bp, h, missing, tail, meta)


# ------------------------------------------------------------------ round trip

@dataclass(frozen=True, eq=False)
class RoundtripReport:
    sup_error: float
    l2_error: float
    points: np.ndarray
    errors: np.ndarray
    nt: int


def _resample_controls(schedule: ControlSchedule, nt: int) -> np.ndarray:
    if nt == schedule.times.size - 1:
        return schedule.h
    t_new = np.linspace(0.0, schedule.T, nt + 1)
    return CubicSpline(schedule.times, schedule.h, axis=0)(t_new)


def roundtrip_verify(schedule: ControlSchedule, target: HolomorphicTarget,
                     resolution: int | None = None) -> RoundtripReport:
    """Run the reference solver with ``(g, h)`` and compare ``u(T)`` with the target.

    ``resolution`` is the number of solver time steps (default: the schedule's).
    Errors are taken over interior grid points; ``l2_error`` is the RMS value.
    """
    nt = int(resolution or schedule.times.size - 1)
    H = _resample_controls(schedule, nt)
    R = float(np.max(np.abs(schedule.boundary_points)))
    meta = schedule.metadata
    if schedule.d == 1:
        field_ = crank_nicolson_solve(Interval(-R, R), schedule.g, H, schedule.T, nt,
                                      int(meta["nx"]), save_every=nt)
    else:
        field_ = crank_nicolson_solve(Ball(np.zeros(2), R), schedule.g, H, schedule.T, nt,
                                      int(meta["nr"]), ntheta=int(meta["ntheta"]), save_every=nt)
    uT = field_.at(schedule.T)
    pts = field_.spatial_grid
    err = np.abs(uT - target(pts.astype(complex)))
    err_in = err[field_.interior]
    return RoundtripReport(float(err_in.max()), float(np.sqrt(np.mean(err_in ** 2))),
                           pts[field_.interior], err_in, nt)


def write_schedule_csv(directory, schedule: ControlSchedule) -> tuple:
    """``initial.csv`` (coordinates, re, im, tail) and ``boundary.csv`` (t, node, coordinates, re, im)."""
    from pathlib import Path
    directory = Path(directory)
    d = schedule.d
    coords = ["x", "y"][:d]
    rows = [[*p, v.real, v.imag, tl] for p, v, tl in zip(schedule.g_points, schedule.g, schedule.tail)]
    a = write_csv(directory / "initial.csv", [*coords, "re", "im", "tail_bound"], rows,
                  schedule.metadata)
    rows = []
    for k, t in enumerate(schedule.times):
        for j, p in enumerate(schedule.boundary_points):
            v = schedule.h[k, j]
            rows.append([t, j, *p, v.real, v.imag, int(schedule.interpolated[k])])
    b = write_csv(directory / "boundary.csv",
                  ["t", "node", *coords, "re", "im", "interpolated"], rows, schedule.metadata)
    return a, b
