"""Endpoint densities for the heat equation on ``[-L, L]`` via a Fourier solve.

The field is represented as

    u(t, x) = (4 pi)^(-1/2) int_0^t [q1(s) exp(-(x + L)^2 / 4(t - s))
                                    + q2(s) exp(-(x - L)^2 / 4(t - s))] (t - s)^(-1/2) ds

so ``q1`` sits at the left endpoint (data ``h1``) and ``q2`` at the right
one (data ``h2``).  Matching ``u(t, -L) = h1`` and ``u(t, L) = h2`` is a pair
of convolution equations; in the frequency domain it becomes one 2x2 system
per frequency with matrix :func:`endpoint_kernel_ft`.

Fourier convention
------------------
With the unitary transform ``f^(tau) = (2 pi)^(-1/2) int f(t) exp(-i tau t) dt``
the kernel ``t^(-1/2) exp(-D^2 / 4t)`` on ``t > 0`` has transform
``exp(-D sqrt(i tau)) / sqrt(2 i tau)``.  The representation above carries an
extra ``(4 pi)^(-1/2)`` and the convolution theorem contributes
``sqrt(2 pi)``, so the transfer function of the endpoint map is
``endpoint_kernel_ft(tau, L) / sqrt(2)``.  This equals the Laplace transform
``exp(-D sqrt(p)) / (2 sqrt(p))`` at ``p = i tau``; the test-suite checks it
against direct quadrature.

Discretisation
--------------
The transform is taken along the damped line ``p = sigma + i tau`` (a
Laplace contour) on a half-bin shifted frequency grid.  Damping removes the
``tau = 0`` point and suppresses wrap-around, and the shift keeps the grid
symmetric about 0 without containing it.  Beyond ``T`` the data is continued by
a raised-cosine decay to zero, so the data on ``[0, T]`` is used unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Interval, as_complex_point
from .io import read_csv, write_csv
from .layer_potentials import BoundaryDensity, SpaceTimeGrid, single_layer_eval

__all__ = [
    "EndpointSignals",
    "FrequencyGrid",
    "EndpointDensities",
    "endpoint_kernel_ft",
    "endpoint_determinant",
    "solve_endpoint_densities",
    "rep1_eval",
    "forward_endpoint_values",
    "write_signals_csv",
    "read_signals_csv",
    "write_densities_csv",
]

_DET_RTOL = 1e-13


@dataclass(frozen=True, eq=False)
class EndpointSignals:
    """Dirichlet data ``h1`` at ``-L`` and ``h2`` at ``+L`` on ``t_k = k T / (nt - 1)``."""

    L: float
    T: float
    h1: np.ndarray
    h2: np.ndarray

    def __post_init__(self):
        h1 = np.asarray(self.h1, dtype=float).ravel()
        h2 = np.asarray(self.h2, dtype=float).ravel()
        if not (self.L > 0 and self.T > 0):
            raise ValueError("need L > 0 and T > 0")
        if h1.shape != h2.shape or h1.size < 8:
            raise ValueError("h1 and h2 need equal length nt >= 8")
        scale = max(1.0, np.max(np.abs(h1)), np.max(np.abs(h2)))
        if abs(h1[0]) > 1e-8 * scale or abs(h2[0]) > 1e-8 * scale:
            raise ValueError("endpoint signals must start at 0 (zero initial state)")
        object.__setattr__(self, "h1", h1)
        object.__setattr__(self, "h2", h2)

    @property
    def nt(self) -> int:
        return self.h1.size

    @property
    def dt(self) -> float:
        return self.T / (self.nt - 1)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.nt)

    @classmethod
    def from_functions(cls, L, T, nt, f1, f2) -> "EndpointSignals":
        t = np.linspace(0.0, T, nt)
        return cls(L, T, f1(t), f2(t))

    def swapped(self) -> "EndpointSignals":
        return EndpointSignals(self.L, self.T, self.h2, self.h1)


@dataclass(frozen=True)
class FrequencyGrid:
    """Damped, half-bin shifted frequency grid.

    Parameters
    ----------
    pad : the transform length is ``pad`` times the signal length
    damping : ``sigma * T``; the inverse transform multiplies by up to ``exp(damping)``
    tail : length of the raised-cosine continuation past ``T``, as a fraction of ``T``
    """

    pad: int = 16
    damping: float = 2.0
    tail: float = 0.5

    def __post_init__(self):
        if self.pad < 2 or self.damping <= 0 or not 0 < self.tail < self.pad - 1:
            raise ValueError("invalid frequency grid parameters")

    def size(self, nt: int) -> int:
        n = self.pad * (nt - 1)
        return int(2 ** np.ceil(np.log2(n)))

    def taus(self, nt: int, dt: float) -> np.ndarray:
        """Real frequencies ``2 pi (j + 1/2) / (N dt)``, symmetric, never 0."""
        n = self.size(nt)
        j = np.fft.fftfreq(n, 1.0 / n)
        return 2 * np.pi * (j + 0.5) / (n * dt)

    def sigma(self, T: float) -> float:
        return self.damping / T

    def describe(self) -> dict:
        return {"pad": self.pad, "damping": self.damping, "tail": self.tail,
                "window": "raised-cosine continuation past T"}


def _sqrt_i_tau(tau):
    return np.sqrt(1j * np.asarray(tau, dtype=complex))


def endpoint_kernel_ft(tau, L: float) -> np.ndarray:
    """The symmetric 2x2 endpoint matrix at frequency ``tau``.

    ``[[k0, kL], [kL, k0]]`` with ``k0 = (2 i tau)^(-1/2)`` and
    ``kL = k0 exp(-2 L sqrt(i tau))``, principal square roots.  Complex ``tau``
    with ``Im tau <= 0`` evaluates the Laplace-side continuation ``p = i tau``.
    Vectorised: returns shape ``tau.shape + (2, 2)``.
    """
    tau = np.asarray(tau, dtype=complex)
    if np.any(tau == 0):
        raise ValueError("tau = 0 is excluded")
    k0 = 1.0 / np.sqrt(2j * tau)
    kL = k0 * np.exp(-2 * L * _sqrt_i_tau(tau))
    out = np.empty(tau.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = out[..., 1, 1] = k0
    out[..., 0, 1] = out[..., 1, 0] = kL
    return out


def endpoint_determinant(tau, L: float):
    """``(2 i tau)^(-1) (1 - exp(-4 L sqrt(i tau)))``."""
    tau = np.asarray(tau, dtype=complex)
    if np.any(tau == 0):
        raise ValueError("tau = 0 is excluded")
    return (1.0 - np.exp(-4 * L * _sqrt_i_tau(tau))) / (2j * tau)


@dataclass(frozen=True, eq=False)
class EndpointDensities:
    """Slab densities on ``[k dt, (k + 1) dt)``; unpacks as ``q1, q2``."""

    q1: np.ndarray
    q2: np.ndarray
    L: float
    T: float
    skipped_frequencies: int = 0
    forward_residual: float = float("nan")
    metadata: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.q1, self.q2))

    @property
    def dt(self) -> float:
        return self.T / self.q1.size

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.q1.size) + 0.5) * self.dt

    def eval(self, t: float, z) -> complex:
        return rep1_eval(self.q1, self.q2, t, z, L=self.L, T=self.T)


def _continued(h: np.ndarray, n: int, ntail: int) -> np.ndarray:
    out = np.zeros(n)
    out[: h.size] = h
    # raised-cosine decay from the last value, C1 at both ends
    s = np.arange(1, ntail + 1) / ntail
    out[h.size: h.size + ntail] = h[-1] * 0.5 * (1 + np.cos(np.pi * s))
    return out


def solve_endpoint_densities(signals: EndpointSignals,
                             grid: FrequencyGrid | None = None,
                             check: bool = True) -> EndpointDensities:
    """Densities ``(q1, q2)`` whose endpoint traces reproduce ``(h1, h2)``.

    The densities are returned at the slab midpoints of the signal grid.  If
    ``check`` is true the forward map is re-evaluated by product integration
    and its relative l2 mismatch on the signal grid is stored in
    ``forward_residual``.
    """
    grid = grid or FrequencyGrid()
    nt, dt, T, L = signals.nt, signals.dt, signals.T, signals.L
    n = grid.size(nt)
    ntail = max(2, int(round(grid.tail * (nt - 1))))
    sigma = grid.sigma(T)
    tk = np.arange(n) * dt
    taus = grid.taus(nt, dt)
    p = sigma + 1j * taus
    shift = np.exp(-1j * np.pi * np.arange(n) / n)  # half-bin shift of the grid
    damp = np.exp(-sigma * tk)
    H = np.stack([np.fft.fft(_continued(h, n, ntail) * damp * shift) * dt
                  for h in (signals.h1, signals.h2)], axis=-1)

    M = endpoint_kernel_ft(-1j * p, L) / np.sqrt(2.0)
    det = M[:, 0, 0] ** 2 - M[:, 0, 1] ** 2
    scale = np.abs(M[:, 0, 0]) ** 2
    bad = np.abs(det) < _DET_RTOL * scale
    det = np.where(bad, 1.0, det)
    Q1 = (M[:, 1, 1] * H[:, 0] - M[:, 0, 1] * H[:, 1]) / det
    Q2 = (M[:, 0, 0] * H[:, 1] - M[:, 1, 0] * H[:, 0]) / det
    Q1[bad] = 0.0
    Q2[bad] = 0.0

    # inverse transform evaluated half a sample later (slab midpoints)
    half = np.exp(1j * taus * 0.5 * dt)
    undamp = np.exp(sigma * (tk + 0.5 * dt)) * np.conj(shift)
    q = [(np.fft.ifft(Q * half) / dt * undamp)[: nt - 1].real for Q in (Q1, Q2)]
    dens = EndpointDensities(q[0], q[1], L, T, int(bad.sum()),
                             metadata={"frequency_grid": grid.describe(), "sigma": sigma})
    if check:
        fwd = forward_endpoint_values(dens)
        h = np.concatenate([signals.h1[1:], signals.h2[1:]])
        res = np.linalg.norm(np.concatenate([fwd[0], fwd[1]]) - h) / max(np.linalg.norm(h), 1e-300)
        object.__setattr__(dens, "forward_residual", float(res))
    return dens


def _density(q1, q2, L: float, T: float) -> BoundaryDensity:
    q1 = np.asarray(q1, dtype=float).ravel()
    q2 = np.asarray(q2, dtype=float).ravel()
    if q1.shape != q2.shape:
        raise ValueError("q1 and q2 must have equal length")
    grid = SpaceTimeGrid.for_domain(Interval(-L, L), T, q1.size)
    return BoundaryDensity(grid, np.stack([q1, q2], axis=1))


def rep1_eval(q1, q2, t: float, z, *, L: float, T: float) -> complex:
    """Endpoint representation at ``(t, z)``; ``z`` may be complex inside the egg.

    ``q1``, ``q2`` are slab values on a uniform partition of ``[0, T]``.
    """
    z = as_complex_point(z, 1)
    if z.im[0] != 0 and abs(z.re[0]) + abs(z.im[0]) > L:
        raise ValueError("complex z outside the closed egg |Re z| + |Im z| <= L")
    return single_layer_eval(_density(q1, q2, L, T), t, z)


def forward_endpoint_values(dens: EndpointDensities) -> tuple[np.ndarray, np.ndarray]:
    """Endpoint traces at ``t_k = k dt``, ``k = 1..n``, computed by product integration."""
    density = _density(dens.q1, dens.q2, dens.L, dens.T)
    times = (np.arange(dens.q1.size) + 1) * dens.dt
    left = np.array([single_layer_eval(density, t, [-dens.L]).real for t in times])
    right = np.array([single_layer_eval(density, t, [dens.L]).real for t in times])
    return left, right


def write_signals_csv(path, signals: EndpointSignals, metadata=None):
    meta = {"L": signals.L, "T": signals.T, **(metadata or {})}
    rows = zip(signals.times, signals.h1, signals.h2)
    return write_csv(path, ["t", "h1", "h2"], rows, meta)


def read_signals_csv(path) -> EndpointSignals:
    meta, header, data = read_csv(path)
    if header != ["t", "h1", "h2"]:
        raise ValueError(f"unexpected header {header}")
    return EndpointSignals(float(meta["L"]), float(meta["T"]), data[:, 1], data[:, 2])


def write_densities_csv(path, dens: EndpointDensities, metadata=None):
    meta = {"L": dens.L, "T": dens.T, "forward_residual": dens.forward_residual,
            **(metadata or {})}
    return write_csv(path, ["t", "q1", "q2"], zip(dens.midpoints, dens.q1, dens.q2), meta)
