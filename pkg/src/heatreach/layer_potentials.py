"""Thermal single and double layer potentials on the lateral boundary.

Densities are piecewise constant on uniform time slabs ``[k dt, (k+1) dt)``
and carried by boundary nodes with quadrature weights.  The time integral of
the heat kernel over each slab is done in closed form (product integration):

* d = 1:  int (4 pi tau)^(-1/2) exp(-c/tau) dtau
          = (4 pi)^(-1/2) [2 exp(-c/tau) (sqrt(tau) - sqrt(pi c) erfcx(sqrt(c/tau)))]
* d = 2:  int (4 pi tau)^(-1) exp(-c/tau) dtau = (4 pi)^(-1) [E1(c/tau)]

with ``c = (z - y)^T (z - y) / 4``.  Both are holomorphic in ``c`` for
``Re c > 0``, which is exactly the situation for ``z`` in the analyticity
domain, so the same code evaluates the extended potential at complex points.

The boundary operator is collocated at slab midpoints.  In d = 2 the
self-interaction is integrated over a straight panel through the node, with
the time integral done after the substitution ``tau = sigma^2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla
from scipy.special import erf, erfc, erfcx

from .geometry import (Ball, ComplexPoint, DomainSpec, Interval, Polygon,
                       as_complex_point, egg_contains)
from .io import read_csv, write_csv
from .special_functions import exp_integral_e1

__all__ = [
    "SpaceTimeGrid",
    "BoundaryDensity",
    "slab_integral",
    "single_layer_eval",
    "boundary_operator_apply",
    "volterra_solve",
    "double_layer_eval",
    "dirichlet_solve_bie",
    "write_density_csv",
    "read_density_csv",
]

_COND_LIMIT = 1e12
_SIGMA_NODES = 32


@dataclass(frozen=True, eq=False)
class SpaceTimeGrid:
    """Uniform time slabs on ``(0, T)`` times quadrature nodes on the boundary."""

    domain: DomainSpec
    T: float
    nt: int
    points: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    tangents: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if not self.T > 0 or self.nt < 1:
            raise ValueError("need T > 0 and nt >= 1")
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[1] != self.domain.d:
            pts = pts.T
        w = np.asarray(self.weights, dtype=float).ravel()
        n = np.atleast_2d(np.asarray(self.normals, dtype=float)).reshape(pts.shape)
        if np.any(w <= 0):
            raise ValueError("boundary weights must be positive")
        for name, arr in (("points", pts), ("weights", w), ("normals", n)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.tangents is not None:
            tg = np.asarray(self.tangents, dtype=float).reshape(pts.shape)
            tg.setflags(write=False)
            object.__setattr__(self, "tangents", tg)

    @classmethod
    def for_domain(cls, domain: DomainSpec, T: float, nt: int,
                   n_boundary: int | None = None) -> "SpaceTimeGrid":
        """Standard boundary rule: endpoints, trapezoid on a circle, or
        Gauss-Legendre per polygon edge (``n_boundary`` nodes per edge)."""
        if isinstance(domain, Interval):
            return cls(domain, T, nt, [[domain.a], [domain.b]], [1.0, 1.0], [[-1.0], [1.0]])
        if isinstance(domain, Ball):
            if domain.d == 1:
                c, r = domain.center[0], domain.radius
                return cls(domain, T, nt, [[c - r], [c + r]], [1.0, 1.0], [[-1.0], [1.0]])
            if domain.d != 2:
                raise ValueError("layer potentials support d = 1 and d = 2 only")
            n = n_boundary or 64
            th = 2 * np.pi * np.arange(n) / n
            nrm = np.stack([np.cos(th), np.sin(th)], axis=1)
            tan = np.stack([-np.sin(th), np.cos(th)], axis=1)
            pts = domain.center + domain.radius * nrm
            w = np.full(n, 2 * np.pi * domain.radius / n)
            return cls(domain, T, nt, pts, w, nrm, tan)
        if isinstance(domain, Polygon):
            m = n_boundary or 8
            xg, wg = np.polynomial.legendre.leggauss(m)
            pts, w, nrm, tan = [], [], [], []
            a, b = domain.edges
            for p, q in zip(a, b):
                e = q - p
                L = np.linalg.norm(e)
                t = e / L
                for s, ws in zip(xg, wg):
                    pts.append(p + 0.5 * (s + 1) * e)
                    w.append(0.5 * L * ws)
                    nrm.append([t[1], -t[0]])
                    tan.append(t)
            return cls(domain, T, nt, pts, w, nrm, tan)
        raise TypeError(f"unsupported domain {domain!r}")

    @property
    def d(self) -> int:
        return self.domain.d

    @property
    def n_nodes(self) -> int:
        return self.points.shape[0]

    @property
    def dt(self) -> float:
        return self.T / self.nt

    @property
    def slab_edges(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.nt + 1)

    @property
    def collocation_times(self) -> np.ndarray:
        return (np.arange(self.nt) + 0.5) * self.dt

    @cached_property
    def blocks(self) -> np.ndarray:
        """Toeplitz blocks ``V[m]`` of the discrete boundary operator.

        ``(Vq)[i] = sum_{m <= i} V[m] @ q[i - m]``, shape ``(nt, N, N)``.
        """
        dt = self.dt
        m = np.arange(self.nt)
        tau_hi = (m + 0.5) * dt
        tau_lo = np.maximum(m - 0.5, 0.0) * dt
        if self.d == 1:
            diff = self.points[:, None, 0] - self.points[None, :, 0]
            c = diff ** 2 / 4.0
            vals = slab_integral(c[None], tau_lo[:, None, None], tau_hi[:, None, None], 1)
            out = vals * self.weights[None, None, :]
        else:
            out = self._panel_blocks(tau_lo, tau_hi)
        out = np.real_if_close(out)
        out.setflags(write=False)
        return out

    def _panel_blocks(self, tau_lo, tau_hi) -> np.ndarray:
        if self.tangents is None:
            raise ValueError("d = 2 grids need panel tangents")
        xg, wg = np.polynomial.legendre.leggauss(_SIGMA_NODES)
        rel = self.points[:, None, :] - self.points[None, :, :]
        r_par = np.einsum("abk,bk->ab", rel, self.tangents)
        r_perp2 = np.einsum("abk,abk->ab", rel, rel) - r_par ** 2
        r_perp2 = np.maximum(r_perp2, 0.0)
        half = 0.5 * self.weights[None, :]
        out = np.empty((self.nt, self.n_nodes, self.n_nodes))
        for k, (lo, hi) in enumerate(zip(np.sqrt(tau_lo), np.sqrt(tau_hi))):
            sig = 0.5 * (hi - lo) * (xg + 1) + lo
            ws = 0.5 * (hi - lo) * wg
            acc = np.zeros((self.n_nodes, self.n_nodes))
            for s, wk in zip(sig, ws):
                f = np.exp(-r_perp2 / (4 * s * s)) * (erf((half - r_par) / (2 * s))
                                                      + erf((half + r_par) / (2 * s)))
                acc += wk * f
            out[k] = acc / (2 * np.sqrt(np.pi))
        return out


@dataclass(frozen=True, eq=False)
class BoundaryDensity:
    grid: SpaceTimeGrid
    values: np.ndarray
    regularized: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.nt, self.grid.n_nodes):
            raise ValueError(f"density shape {v.shape} != {(self.grid.nt, self.grid.n_nodes)}")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def _f1(c, tau):
    """Antiderivative of tau^(-1/2) exp(-c/tau), zero at tau = 0."""
    c = np.asarray(c, dtype=complex)
    tau = np.asarray(tau, dtype=float)
    c, tau = np.broadcast_arrays(c, tau)
    out = np.zeros(c.shape, dtype=complex)
    pos = tau > 0
    zero_c = pos & (c == 0)
    out[zero_c] = 2 * np.sqrt(tau[zero_c])
    gen = pos & (c != 0)
    if gen.any():
        cc, tt = c[gen], tau[gen]
        w = np.sqrt(cc) / np.sqrt(tt)
        w2 = cc / tt
        small = w2.real < 700
        val = np.zeros(cc.shape, dtype=complex)
        val[small] = 2 * np.exp(-w2[small]) * (np.sqrt(tt[small])
                                               - np.sqrt(np.pi * cc[small]) * erfcx(w[small]))
        out[gen] = val
    return out


def _e1_tail(c, tau):
    """E1(c / tau) with the tau -> 0 limit 0; requires Re c > 0."""
    c = np.asarray(c, dtype=complex)
    tau = np.asarray(tau, dtype=float)
    c, tau = np.broadcast_arrays(c, tau)
    out = np.zeros(c.shape, dtype=complex)
    pos = tau > 0
    arg = np.where(pos, c / np.where(pos, tau, 1.0), 0)
    live = pos & (arg.real < 700)
    if live.any():
        out[live] = exp_integral_e1(arg[live])
    return out


def slab_integral(c, tau_lo, tau_hi, d: int):
    """int_{tau_lo}^{tau_hi} (4 pi tau)^(-d/2) exp(-c / tau) dtau in closed form."""
    if d == 1:
        return (_f1(c, tau_hi) - _f1(c, tau_lo)) / np.sqrt(4 * np.pi)
    if d == 2:
        if np.any(np.asarray(c) == 0):
            raise ValueError("point-rule single layer is singular on a boundary node in d = 2")
        return (_e1_tail(c, tau_hi) - _e1_tail(c, tau_lo)) / (4 * np.pi)
    raise ValueError("only d = 1 and d = 2 are supported")


def _slab_bounds(grid: SpaceTimeGrid, t: float):
    if not 0 < t <= grid.T * (1 + 1e-12):
        raise ValueError(f"t = {t} outside (0, T]")
    edges = grid.slab_edges
    live = edges[:-1] < t
    tau_hi = t - edges[:-1][live]
    tau_lo = np.maximum(t - edges[1:][live], 0.0)
    return live, tau_lo, tau_hi


def _check_eval_point(grid: SpaceTimeGrid, z) -> ComplexPoint:
    z = as_complex_point(z, grid.d)
    if np.any(z.im != 0) and not egg_contains(grid.domain, z, closed=True):
        raise ValueError("complex evaluation point outside the closed analyticity domain")
    return z


def single_layer_eval(density: BoundaryDensity, t: float, z) -> complex:
    """Single layer potential (or its holomorphic extension) at ``(t, z)``."""
    grid = density.grid
    z = _check_eval_point(grid, z)
    live, tau_lo, tau_hi = _slab_bounds(grid, t)
    diff = z.z[None, :] - grid.points
    c = np.sum(diff * diff, axis=1) / 4.0
    K = slab_integral(c[None, :], tau_lo[:, None], tau_hi[:, None], grid.d)
    return complex(np.sum(K * grid.weights[None, :] * density.values[live]))


def boundary_operator_apply(density: BoundaryDensity) -> np.ndarray:
    """Apply the discrete boundary operator; result has shape ``(nt, N)``."""
    grid = density.grid
    V = grid.blocks
    q = density.values
    out = np.zeros_like(q)
    for i in range(grid.nt):
        # out[i] = sum_m V[m] q[i - m]
        out[i] = np.einsum("mab,mb->a", V[: i + 1], q[i::-1])
    return out


def volterra_solve(grid: SpaceTimeGrid, g) -> BoundaryDensity:
    """Solve ``V q = g`` by forward marching over time slabs.

    ``g`` holds boundary data at the collocation times (slab midpoints) and
    boundary nodes, shape ``(nt, N)``.  Each step solves a dense N x N system.
    If the step matrix has condition number above 1e12 a Tikhonov term
    ``lambda = 1e-10 ||V0||`` is added.
    """
    g = np.asarray(g, dtype=complex)
    if g.shape != (grid.nt, grid.n_nodes):
        raise ValueError(f"boundary data shape {g.shape} != {(grid.nt, grid.n_nodes)}")
    V = grid.blocks
    V0 = np.asarray(V[0], dtype=complex)
    cond = np.linalg.cond(V0)
    regularized = not np.isfinite(cond) or cond > _COND_LIMIT
    if regularized:
        lam = 1e-10 * np.linalg.norm(V0, 2)
        normal = V0.conj().T @ V0 + lam ** 2 * np.eye(grid.n_nodes)
        factor = sla.cho_factor(normal)

        def step(r):
            return sla.cho_solve(factor, V0.conj().T @ r)
    else:
        factor = sla.lu_factor(V0)

        def step(r):
            return sla.lu_solve(factor, r)
    q = np.zeros_like(g)
    for i in range(grid.nt):
        r = g[i].copy()
        if i:
            r -= np.einsum("mab,mb->a", V[1: i + 1], q[i - 1::-1])
        q[i] = step(r)
    if not np.all(np.isfinite(q)):
        raise np.linalg.LinAlgError("Volterra step matrix is singular")
    return BoundaryDensity(grid, q, regularized=regularized)


def double_layer_eval(density: BoundaryDensity, t: float, x) -> complex:
    """Double layer potential with kernel d/dn(y) G(t - s, x - y).

    ``x`` must be a real point strictly inside the domain.
    """
    grid = density.grid
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (grid.d,):
        raise ValueError("dimension mismatch")
    if not egg_contains(grid.domain, ComplexPoint(x, np.zeros_like(x))):
        raise ValueError("double layer is only evaluated strictly inside the domain")
    live, tau_lo, tau_hi = _slab_bounds(grid, t)
    diff = x[None, :] - grid.points
    proj = np.sum(diff * grid.normals, axis=1)
    r = np.linalg.norm(diff, axis=1)
    hi, lo = tau_hi[:, None], tau_lo[:, None]
    if grid.d == 1:
        def cum(tau):
            with np.errstate(divide="ignore"):
                return np.where(tau > 0, erfc(r[None, :] / (2 * np.sqrt(np.where(tau > 0, tau, 1)))), 0.0)
        K = 0.5 * np.sign(proj)[None, :] * (cum(hi) - cum(lo))
    elif grid.d == 2:
        c = r ** 2 / 4.0

        def cum(tau):
            return np.where(tau > 0, np.exp(-c[None, :] / np.where(tau > 0, tau, 1)), 0.0)
        K = (proj / (2 * np.pi * r ** 2))[None, :] * (cum(hi) - cum(lo))
    else:
        raise ValueError("only d = 1 and d = 2 are supported")
    return complex(np.sum(K * grid.weights[None, :] * density.values[live]))


def dirichlet_solve_bie(grid: SpaceTimeGrid, g, eval_points, eval_times) -> np.ndarray:
    """Heat solution with zero initial data and Dirichlet data ``g``.

    Returns an array of shape ``(len(eval_times), len(eval_points))``.
    """
    density = volterra_solve(grid, g)
    pts = [_check_eval_point(grid, z) for z in eval_points]
    out = np.empty((len(eval_times), len(pts)), dtype=complex)
    for i, t in enumerate(eval_times):
        for j, z in enumerate(pts):
            out[i, j] = single_layer_eval(density, t, z)
    return out


def write_density_csv(path, density: BoundaryDensity, metadata=None):
    nt, n = density.values.shape
    rows = ((i, j, density.values[i, j].real, density.values[i, j].imag)
            for i in range(nt) for j in range(n))
    meta = {"T": density.grid.T, "nt": nt, "n_nodes": n, "regularized": density.regularized}
    meta.update(metadata or {})
    return write_csv(path, ["t_index", "node_index", "re", "im"], rows, meta)


def read_density_csv(path, grid: SpaceTimeGrid) -> BoundaryDensity:
    _, header, data = read_csv(path)
    if header != ["t_index", "node_index", "re", "im"]:
        raise ValueError(f"unexpected density header {header}")
    vals = np.zeros((grid.nt, grid.n_nodes), dtype=complex)
    idx = data[:, :2].astype(int)
    vals[idx[:, 0], idx[:, 1]] = data[:, 2] + 1j * data[:, 3]
    return BoundaryDensity(grid, vals)
