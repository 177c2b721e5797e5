"""Crank-Nicolson solver for the Dirichlet heat problem, used as an oracle.

Interval
    Uniform grid ``x_k = a + k dx``, ``k = 0..nx``; tridiagonal CN step.

Disk (d = 2)
    Cell-centred radial grid ``r_i = (i + 1/2) dr`` with ``dr = R / (nr + 1/2)``
    so the boundary ring sits at ``r_nr = R`` and no node lies on the origin
    (the flux through ``r = 0`` vanishes identically).  The angular direction
    is treated spectrally: after an FFT in ``theta`` each Fourier mode obeys a
    radial tridiagonal CN step with the exact ``-m^2 / r^2`` term.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .geometry import Ball, DomainSpec, Interval
from .io import write_csv

__all__ = ["FieldSample", "crank_nicolson_solve", "sup_error", "interval_grid",
           "disk_grid", "write_field_csv"]

_CORNER_TOL = 1e-8

Samples = Union[np.ndarray, Callable]


@dataclass(frozen=True, eq=False)
class FieldSample:
    """Solution samples ``values[k, p]`` at ``times[k]`` and ``spatial_grid[p]``."""

    domain: DomainSpec
    times: np.ndarray
    spatial_grid: np.ndarray
    values: np.ndarray
    interior: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if np.any(np.diff(times) < 0):
            raise ValueError("times must be nondecreasing")
        if self.values.shape != (times.size, self.spatial_grid.shape[0]):
            raise ValueError("values shape does not match times x grid")

    def at(self, t: float) -> np.ndarray:
        return self.values[self._time_index(t)]

    def _time_index(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        scale = max(1.0, abs(self.times[-1]))
        if abs(self.times[k] - t) > 1e-9 * scale:
            raise ValueError(f"time {t} is not sampled")
        return k


def interval_grid(domain: Interval, nx: int) -> np.ndarray:
    return np.linspace(domain.a, domain.b, nx + 1)


def disk_grid(domain: Ball, nr: int, ntheta: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Radii (interior rings plus the boundary ring), angles, and points.

    Points are ring-major, shape ``((nr + 1) * ntheta, 2)``; the last
    ``ntheta`` rows are the boundary ring.
    """
    dr = domain.radius / (nr + 0.5)
    r = (np.arange(nr + 1) + 0.5) * dr
    th = 2 * np.pi * np.arange(ntheta) / ntheta
    pts = np.stack([np.outer(r, np.cos(th)).ravel(), np.outer(r, np.sin(th)).ravel()], axis=1)
    return r, th, pts + domain.center


def _as_boundary_history(h: Samples, times: np.ndarray, bpts: np.ndarray) -> np.ndarray:
    if callable(h):
        return np.asarray([np.broadcast_to(h(t, bpts), (bpts.shape[0],)) for t in times])
    return np.asarray(h)


def _solve_sparse(lu, rhs):
    if np.iscomplexobj(rhs) and lu.U.dtype.kind != "c":
        return lu.solve(np.ascontiguousarray(rhs.real)) + 1j * lu.solve(np.ascontiguousarray(rhs.imag))
    return lu.solve(rhs)


def crank_nicolson_solve(domain: DomainSpec, u0: Samples, h: Samples, T: float, nt: int,
                         nx: int, ntheta: int | None = None,
                         save_every: int = 1) -> FieldSample:
    """Solve ``u_t = Laplace u`` on ``domain`` with ``u(0) = u0`` and ``u = h`` on the boundary.

    Parameters
    ----------
    domain : Interval or Ball with d = 2
    u0 : samples on the full grid (boundary included) or callable of points
    h : array of shape ``(nt + 1, n_boundary)`` or callable ``h(t, points)``
    T, nt : final time and number of uniform time steps
    nx : grid intervals (interval) or interior radial rings (disk)
    ntheta : angular nodes for the disk (even)
    save_every : keep every k-th time level (the final level is always kept)
    """
    if not T > 0 or nt < 1:
        raise ValueError("need T > 0 and nt >= 1")
    times = np.linspace(0.0, T, nt + 1)
    if isinstance(domain, Interval) or (isinstance(domain, Ball) and domain.d == 1):
        if isinstance(domain, Ball):
            domain = Interval(domain.center[0] - domain.radius, domain.center[0] + domain.radius)
        return _cn_interval(domain, u0, h, times, nx, save_every)
    if isinstance(domain, Ball) and domain.d == 2:
        if ntheta is None or ntheta % 2 or nx < 16:
            raise ValueError("disk solver needs an even ntheta and nr >= 16")
        return _cn_disk(domain, u0, h, times, nx, ntheta, save_every)
    raise ValueError("reference solver supports intervals and disks only")


def _check_corners(u_bdry, h0):
    if np.max(np.abs(np.asarray(u_bdry) - np.asarray(h0))) > _CORNER_TOL:
        raise ValueError("initial data and boundary data disagree at t = 0")


def _kept(nt: int, save_every: int) -> np.ndarray:
    keep = np.zeros(nt + 1, dtype=bool)
    keep[::max(1, save_every)] = True
    keep[-1] = True
    return keep


def _cn_interval(domain: Interval, u0, h, times, nx, save_every) -> FieldSample:
    x = interval_grid(domain, nx)
    dx = x[1] - x[0]
    dt = times[1] - times[0]
    u = np.asarray(u0(x) if callable(u0) else u0)
    if u.shape != x.shape:
        raise ValueError(f"u0 has shape {u.shape}, grid has {x.shape}")
    H = _as_boundary_history(h, times, x[[0, -1]][:, None])
    if H.shape != (times.size, 2):
        raise ValueError("boundary history must have shape (nt + 1, 2)")
    _check_corners(u[[0, -1]], H[0])
    dtype = np.result_type(u, H, float)
    n = nx - 1
    r = dt / dx ** 2
    lap = sp.diags([np.ones(n - 1), -2 * np.ones(n), np.ones(n - 1)], [-1, 0, 1], format="csc")
    eye = sp.identity(n, format="csc")
    lu = splu((eye - 0.5 * r * lap).tocsc())
    rhs_op = (eye + 0.5 * r * lap).tocsr()
    keep = _kept(times.size - 1, save_every)
    out = [u.astype(dtype)]
    cur = u[1:-1].astype(dtype)
    for k in range(1, times.size):
        rhs = rhs_op @ cur
        rhs[0] += 0.5 * r * (H[k - 1, 0] + H[k, 0])
        rhs[-1] += 0.5 * r * (H[k - 1, 1] + H[k, 1])
        cur = _solve_sparse(lu, rhs)
        if keep[k]:
            out.append(np.concatenate([[H[k, 0]], cur, [H[k, 1]]]).astype(dtype))
    interior = np.ones(x.size, dtype=bool)
    interior[[0, -1]] = False
    return FieldSample(domain, times[keep], x[:, None], np.asarray(out), interior)


def _cn_disk(domain: Ball, u0, h, times, nr, ntheta, save_every) -> FieldSample:
    r, th, pts = disk_grid(domain, nr, ntheta)
    dr = r[1] - r[0]
    dt = times[1] - times[0]
    if callable(u0):
        U = np.asarray(u0(pts)).reshape(nr + 1, ntheta)
    else:
        U = np.asarray(u0).reshape(nr + 1, ntheta)
    bpts = pts[-ntheta:]
    H = _as_boundary_history(h, times, bpts)
    if H.shape != (times.size, ntheta):
        raise ValueError("boundary history must have shape (nt + 1, ntheta)")
    _check_corners(U[-1], H[0])
    real_data = not (np.iscomplexobj(U) or np.iscomplexobj(H))

    ri = r[:-1]
    rp, rm = ri + 0.5 * dr, ri - 0.5 * dr
    rm[0] = 0.0
    m = np.abs(np.fft.fftfreq(ntheta, 1.0 / ntheta))
    # block-diagonal radial operators, one block per Fourier mode
    blocks = []
    for mk in m:
        main = -(rp + rm) / (ri * dr ** 2) - mk ** 2 / ri ** 2
        lower = rm[1:] / (ri[1:] * dr ** 2)
        upper = rp[:-1] / (ri[:-1] * dr ** 2)
        blocks.append(sp.diags([lower, main, upper], [-1, 0, 1]))
    A = sp.block_diag(blocks, format="csc")
    eye = sp.identity(A.shape[0], format="csc")
    lu = splu((eye - 0.5 * dt * A).astype(complex).tocsc())
    rhs_op = (eye + 0.5 * dt * A).tocsr()
    bcoef = rp[-1] / (ri[-1] * dr ** 2)
    last = np.arange(ntheta) * nr + (nr - 1)

    Hhat = np.fft.fft(H, axis=1)
    cur = np.fft.fft(U[:-1], axis=1).T.ravel()  # mode-major
    keep = _kept(times.size - 1, save_every)
    out = [U.ravel()]
    for k in range(1, times.size):
        rhs = rhs_op @ cur
        rhs[last] += 0.5 * dt * bcoef * (Hhat[k - 1] + Hhat[k])
        cur = lu.solve(rhs)
        if keep[k]:
            field = np.fft.ifft(cur.reshape(ntheta, nr).T, axis=1)
            full = np.vstack([field, H[k][None, :]])
            out.append(full.real.ravel() if real_data else full.ravel())
    values = np.asarray(out)
    interior = np.ones(pts.shape[0], dtype=bool)
    interior[-ntheta:] = False
    return FieldSample(domain, times[keep], pts, values, interior)


def sup_error(a: FieldSample, b: Callable[[np.ndarray], np.ndarray] | np.ndarray,
              t: float) -> float:
    """max over interior grid points of ``|a(t) - b|``.

    ``b`` is a callable of the grid points (shape ``(n, d)``) or an array of
    values on the grid.
    """
    vals = a.at(t)
    ref = b(a.spatial_grid if a.spatial_grid.shape[1] > 1 else a.spatial_grid[:, 0]) \
        if callable(b) else np.asarray(b)
    ref = np.broadcast_to(ref, vals.shape)
    return float(np.max(np.abs(vals - ref)[a.interior]))


def write_field_csv(path, field: FieldSample, metadata=None):
    d = field.spatial_grid.shape[1]
    coords = ["x", "y", "z"][:d] if d <= 3 else [f"x{i}" for i in range(d)]
    rows = []
    for k, t in enumerate(field.times):
        for p, pt in enumerate(field.spatial_grid):
            v = complex(field.values[k, p])
            rows.append([t, *pt, v.real, v.imag])
    return write_csv(path, ["t", *coords, "re", "im"], rows, metadata)
