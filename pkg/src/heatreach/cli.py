"""Configuration-driven experiment runner.

Usage::

    heatreach run CONFIG.toml [--output DIR] [--threads N]
    heatreach <kind> CONFIG.toml [...]      # same, asserting the experiment kind
    heatreach kinds                          # list experiment kinds and their keys

Configurations are TOML files with dotted keys (``domain.kind``, ``grid.nt``).
Each run writes CSV files plus ``manifest.json`` into the output directory.
Exit status: 0 success, 2 invalid configuration or precondition, 3 numerical
guard.  Outputs of a failed run are removed.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import shutil
import sys
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .errors import NumericalGuardError
from .geometry import Ball, Interval, Polygon, contains, egg_contains, sample_compact_subset
from .io import write_csv
from .layer_potentials import (SpaceTimeGrid, volterra_solve,
                               write_density_csv, single_layer_eval)
from .special_functions import heat_kernel, heat_kernel_c

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

EXIT_OK, EXIT_INVALID, EXIT_GUARD = 0, 2, 3
OUTPUT_ENV = "HEATREACH_OUTPUT"

_REQUIRED = object()


class ConfigError(ValueError):
    pass


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


class Config:
    """Flat view of a parsed configuration with typed accessors."""

    def __init__(self, raw: dict, source: str = "<config>"):
        self.raw = raw
        self.flat = _flatten(raw)
        self.source = source

    def get(self, key: str, kind: Callable = float, default: Any = _REQUIRED):
        if key not in self.flat:
            if default is _REQUIRED:
                raise ConfigError(f"missing required key '{key}'")
            return default
        value = self.flat[key]
        try:
            if kind is int and (isinstance(value, bool) or float(value) != int(value)):
                raise ValueError
            if kind is bool and not isinstance(value, bool):
                raise ValueError
            return kind(value)
        except (TypeError, ValueError):
            raise ConfigError(f"key '{key}' has invalid value {value!r}") from None

    def complex(self, key: str, default: Any = _REQUIRED) -> complex:
        v = self.get(key, lambda x: x, default)
        if v is None and default is None:
            return None
        if isinstance(v, (list, tuple)) and len(v) == 2:
            return complex(float(v[0]), float(v[1]))
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            return complex(v)
        if isinstance(v, complex):
            return v
        raise ConfigError(f"key '{key}' must be a number or [re, im]")

    def floats(self, key: str, default: Any = _REQUIRED) -> list:
        v = self.get(key, lambda x: x, default)
        if not isinstance(v, (list, tuple)):
            raise ConfigError(f"key '{key}' must be a list of numbers")
        try:
            return [float(x) for x in v]
        except (TypeError, ValueError):
            raise ConfigError(f"key '{key}' must be a list of numbers") from None

    def has(self, key: str) -> bool:
        return key in self.flat


# ------------------------------------------------------------------ builders

def _domain(cfg: Config):
    kind = cfg.get("domain.kind", str)
    try:
        if kind == "interval":
            return Interval(cfg.get("domain.a"), cfg.get("domain.b"))
        if kind == "ball":
            return Ball(np.asarray(cfg.floats("domain.center")), cfg.get("domain.radius"))
        if kind == "polygon":
            return Polygon(np.asarray(cfg.get("domain.vertices", list), dtype=float))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid domain: {exc}") from None
    raise ConfigError(f"unknown domain.kind '{kind}'")


def _target(cfg: Config):
    from .wick_synthesis import HolomorphicTarget
    fam = cfg.get("target.family", str)
    if fam == "polynomial":
        d = cfg.get("target.d", int)
        exps = cfg.get("target.exponents", list)
        coefs = cfg.get("target.coefficients", list)
        if len(exps) != len(coefs):
            raise ConfigError("target.exponents and target.coefficients differ in length")
        terms = {}
        for e, c in zip(exps, coefs):
            e = (e,) if np.isscalar(e) else tuple(e)
            terms[e] = complex(*c) if isinstance(c, list) else complex(c)
        return HolomorphicTarget.polynomial(terms, d)
    if fam == "lorentzian":
        return HolomorphicTarget.lorentzian(cfg.get("target.alpha"), cfg.get("target.d", int))
    if fam == "pole_quotient":
        return HolomorphicTarget.pole_quotient(cfg.complex("target.p0"), cfg.get("target.d", int))
    if fam == "singular_e1":
        return HolomorphicTarget.singular_e1(cfg.get("target.x0"), cfg.complex("target.a"))
    raise ConfigError(f"unknown target.family '{fam}'")


def _cutoff(cfg: Config):
    from .wick_synthesis import make_cutoff
    return make_cutoff(cfg.get("cutoff.R"), cfg.get("cutoff.Rp"), cfg.get("cutoff.beta", float, 0.0))


def _positive(name: str, value):
    if not value > 0:
        raise ConfigError(f"{name} must be positive")
    return value


def _report(path: Path, rows: dict, meta: dict) -> Path:
    return write_csv(path, ["quantity", "value"], list(rows.items()), meta)


def _cplx_cols(v):
    v = complex(v)
    return [v.real, v.imag]


@dataclass
class Plan:
    """A validated experiment, ready to run into a directory."""

    execute: Callable[[Path, int], dict]


# --------------------------------------------------------------- experiments

def _plan_egg_sample(cfg: Config) -> Plan:
    domain = _domain(cfg)
    margin = _positive("sample.margin", cfg.get("sample.margin"))
    counts = [int(c) for c in cfg.get("sample.counts", list)]
    pts = sample_compact_subset(domain, margin, counts)

    def execute(out: Path, threads: int) -> dict:
        d = domain.d
        head = ([f"re{i}" for i in range(d)] + [f"im{i}" for i in range(d)]) if d > 1 else ["re", "im"]
        flags = [egg_contains(domain, p, closed=True) for p in pts]
        rows = [[*p.re, *p.im, int(f)] for p, f in zip(pts, flags)]
        write_csv(out / "points.csv", head + ["in_closed_egg"], rows, {"margin": margin})
        return {"n_points": len(pts), "all_in_closed_egg": int(all(flags))}
    return Plan(execute)


def _plan_bie_solve(cfg: Config) -> Plan:
    domain = _domain(cfg)
    T = _positive("T", cfg.get("T"))
    nt = _positive("grid.nt", cfg.get("grid.nt", int))
    nb = cfg.get("grid.n_boundary", int, None)
    xs = np.asarray(cfg.floats("source.x"))
    t0 = cfg.get("source.t0", float, 0.0)
    if xs.size != domain.d or contains(domain, xs, closed=True):
        raise ConfigError("source.x must be a point outside the closed domain")
    if t0 < 0:
        raise ConfigError("source.t0 must be nonnegative")
    re = np.asarray(cfg.get("eval.re", list), dtype=float).reshape(-1, domain.d)
    im = np.asarray(cfg.get("eval.im", list, np.zeros_like(re).tolist()), dtype=float).reshape(re.shape)
    times = cfg.floats("eval.times", [T])
    for r, i in zip(re, im):
        if np.any(i != 0) and not egg_contains(domain, r + 1j * i, closed=True):
            raise ConfigError("complex evaluation point outside the closed analyticity domain")
        if np.all(i == 0) and not contains(domain, r):
            raise ConfigError("real evaluation point outside the open domain")
    if any(not 0 < t <= T for t in times):
        raise ConfigError("eval.times must lie in (0, T]")
    grid = SpaceTimeGrid.for_domain(domain, T, nt, nb)

    def execute(out: Path, threads: int) -> dict:
        tc = grid.collocation_times
        g = heat_kernel(tc[:, None] - t0, grid.points[None, :, :] - xs, domain.d)
        density = volterra_solve(grid, g)
        write_density_csv(out / "density.csv", density)
        z = re + 1j * im
        rows, err = [], 0.0
        for t in times:
            for k, zk in enumerate(z):
                u = single_layer_eval(density, t, zk)
                ex = complex(heat_kernel_c(t - t0, zk - xs, domain.d))
                err = max(err, abs(u - ex))
                rows.append([t, k, *zk.real, *zk.imag, *_cplx_cols(u), *_cplx_cols(ex), abs(u - ex)])
        d = domain.d
        coords = [f"re{i}" for i in range(d)] + [f"im{i}" for i in range(d)]
        write_csv(out / "field.csv", ["t", "point", *coords, "u_re", "u_im", "exact_re",
                                      "exact_im", "abs_error"], rows)
        return {"max_abs_error": err, "regularized": int(density.regularized)}
    return Plan(execute)


def _plan_forward_solve(cfg: Config) -> Plan:
    from scipy.special import j0, jn_zeros
    from .reference_solver import crank_nicolson_solve, write_field_csv
    domain = _domain(cfg)
    T = _positive("T", cfg.get("T"))
    nt = _positive("grid.nt", cfg.get("grid.nt", int))
    nx = _positive("grid.nx", cfg.get("grid.nx", int))
    ntheta = cfg.get("grid.ntheta", int, None)
    kind = cfg.get("problem.kind", str)
    disk = isinstance(domain, Ball) and domain.d == 2
    if not (isinstance(domain, Interval) or disk):
        raise ConfigError("forward-solve needs an interval or a disk")
    if disk and (ntheta is None or ntheta % 2 or nx < 16):
        raise ConfigError("disk grids need an even grid.ntheta and grid.nx >= 16")
    if kind == "eigenmode":
        mode = cfg.get("problem.mode", int, 1)
        if disk:
            k = jn_zeros(0, 1)[0] / domain.radius

            def u0(p):
                return j0(k * np.linalg.norm(p - domain.center, axis=1))
            rate = k * k
        else:
            k = mode * np.pi / (domain.b - domain.a)

            def u0(x):
                x = x if np.ndim(x) == 1 else x[:, 0]
                return np.sin(k * (x - domain.a))
            rate = k * k

        def h(t, p):
            return np.zeros(p.shape[0])

        def exact(p):
            return np.exp(-rate * T) * u0(p)
    elif kind == "stationary":
        target = _target(cfg)

        def u0(p):
            return target(np.asarray(p, dtype=complex).reshape(-1, domain.d))

        def h(t, p):
            return u0(p)
        exact = u0
    else:
        raise ConfigError(f"unknown problem.kind '{kind}'")

    def execute(out: Path, threads: int) -> dict:
        f = crank_nicolson_solve(domain, u0, h, T, nt, nx, ntheta=ntheta, save_every=nt)
        write_field_csv(out / "field.csv", f)
        vals = f.at(T)
        ref = exact(f.spatial_grid if disk else f.spatial_grid[:, 0])
        return {"sup_error": float(np.max(np.abs(vals - ref)[f.interior]))}
    return Plan(execute)


def _plan_onedim(cfg: Config) -> Plan:
    from .onedim_controls import (EndpointSignals, FrequencyGrid, endpoint_determinant,
                                  solve_endpoint_densities, write_densities_csv,
                                  write_signals_csv)
    L = _positive("L", cfg.get("L"))
    T = _positive("T", cfg.get("T"))
    nt = cfg.get("grid.nt", int)
    c1 = np.asarray(cfg.floats("signals.h1"))
    c2 = np.asarray(cfg.floats("signals.h2"))
    fg = FrequencyGrid(cfg.get("fourier.pad", int, 16), cfg.get("fourier.damping", float, 2.0),
                       cfg.get("fourier.tail", float, 0.5))
    tt = np.linspace(0.0, T, nt)

    def poly(c):  # coefficients of t, t^2, ...: h(0) = 0 by construction
        return sum(ck * tt ** (k + 1) for k, ck in enumerate(c))
    signals = EndpointSignals(L, T, poly(c1), poly(c2))
    check_nx = cfg.get("check.nx", int, 0)
    check_nt = cfg.get("check.nt", int, 0)

    def execute(out: Path, threads: int) -> dict:
        dens = solve_endpoint_densities(signals, fg)
        swap = solve_endpoint_densities(signals.swapped(), fg, check=False)
        write_signals_csv(out / "signals.csv", signals)
        write_densities_csv(out / "densities.csv", dens)
        taus = np.logspace(-3, 3, 1000)
        ratio = np.abs(endpoint_determinant(taus, L) * 2j * taus) \
            / (1 - np.exp(-4 * L * np.sqrt(taus / 2)))
        rows = {"forward_residual": dens.forward_residual,
                "skipped_frequencies": dens.skipped_frequencies,
                "swap_error": float(max(np.max(np.abs(dens.q1 - swap.q2)),
                                        np.max(np.abs(dens.q2 - swap.q1)))),
                "determinant_scan_min_ratio": float(ratio.min())}
        if check_nx and check_nt:
            from .reference_solver import crank_nicolson_solve
            from scipy.interpolate import CubicSpline
            sp1, sp2 = CubicSpline(tt, signals.h1), CubicSpline(tt, signals.h2)
            f = crank_nicolson_solve(Interval(-L, L), np.zeros(check_nx + 1),
                                     lambda t, p: np.array([sp1(t), sp2(t)]), T, check_nt,
                                     check_nx, save_every=check_nt)
            x = f.spatial_grid[:, 0]
            u = np.array([dens.eval(T, [xx]).real for xx in x])
            rows["cn_sup_error"] = float(np.max(np.abs(u - f.at(T).real)[f.interior]))
        return rows
    return Plan(execute)


def _plan_wick(cfg: Config) -> Plan:
    from .wick_synthesis import roundtrip_verify, wick_synthesize, write_schedule_csv
    domain = _domain(cfg)
    target = _target(cfg)
    cutoff = _cutoff(cfg)
    T = _positive("T", cfg.get("T"))
    grids = {"nt": cfg.get("grid.nt", int)}
    if domain.d == 1:
        grids["nx"] = cfg.get("grid.nx", int)
    else:
        grids["nr"] = cfg.get("grid.nr", int)
        grids["ntheta"] = cfg.get("grid.ntheta", int)
    verify = cfg.get("verify.enabled", bool, True)
    verify_nt = cfg.get("verify.nt", int, None)
    thr = cfg.get("synthesis.sample_threshold", float, 1e8)
    if cutoff.Rp > target.analyticity_radius:
        raise ConfigError("cutoff.Rp exceeds the target's analyticity radius")

    def execute(out: Path, threads: int) -> dict:
        sched = wick_synthesize(target, domain, T, cutoff, grids, sample_threshold=thr,
                                threads=threads)
        write_schedule_csv(out, sched)
        rows = {k: sched.metadata[k] for k in ("interpolated_steps", "final_step_mismatch",
                                                 "max_cutoff_tail", "amplification_estimate")}
        if verify:
            rep = roundtrip_verify(sched, target, verify_nt)
            rows["sup_error"] = rep.sup_error
            rows["l2_error"] = rep.l2_error
        return rows
    return Plan(execute)


def _plan_convergence(cfg: Config) -> Plan:
    from .verification import convergence_sweep, write_convergence_csv
    domain = _domain(cfg)
    target = _target(cfg)
    cutoff = _cutoff(cfg)
    margin = _positive("sweep.margin", cfg.get("sweep.margin"))
    ts = cfg.floats("sweep.ts")
    counts = [int(c) for c in cfg.get("sweep.counts", list, [21, 9])]
    if any(t <= 0 for t in ts) or any(b >= a for a, b in zip(ts, ts[1:])):
        raise ConfigError("sweep.ts must be positive and strictly decreasing")

    def execute(out: Path, threads: int) -> dict:
        rep = convergence_sweep(target, domain, cutoff, margin, ts, counts)
        write_convergence_csv(out, rep)
        return {"n_points": rep.n_points, "strictly_decreasing": int(rep.strictly_decreasing),
                "final_error": float(rep.errors[-1])}
    return Plan(execute)


def _plan_contour(cfg: Config) -> Plan:
    from .verification import contour_shift_check
    target = _target(cfg)
    cutoff = _cutoff(cfg)
    domain = _domain(cfg) if cfg.has("domain.kind") else Interval(-1.0, 1.0)
    pts = [complex(*p) for p in cfg.get("contour.points", list)]
    ts = cfg.floats("contour.ts")
    for z in pts:
        if not egg_contains(domain, [z]):
            raise ConfigError(f"contour point {z} outside the analyticity domain")

    def execute(out: Path, threads: int) -> dict:
        rows, worst, decay = [], 0.0, []
        for z in pts:
            mags = []
            for t in ts:
                r = contour_shift_check(z, t, target, cutoff, domain)
                worst = max(worst, r.residual)
                mags.append(abs(r.I2))
                rows.append([z.real, z.imag, t, *_cplx_cols(r.direct), *_cplx_cols(r.I1),
                             *_cplx_cols(r.I2), r.residual])
            decay.append(min(a / b if b > 0 else np.inf for a, b in zip(mags, mags[1:]))
                         if len(mags) > 1 else np.nan)
        write_csv(out / "contour.csv", ["re", "im", "t", "direct_re", "direct_im", "I1_re",
                                        "I1_im", "I2_re", "I2_im", "residual"], rows)
        return {"max_residual": worst, "min_I2_decay_factor": float(np.min(decay))}
    return Plan(execute)


def _plan_optimality(cfg: Config) -> Plan:
    from .verification import optimality_cross_check
    domain = _domain(cfg)
    if not isinstance(domain, Interval):
        raise ConfigError("verify-optimality needs an interval")
    n = cfg.get("optimality.n_points", int, 100)
    p = cfg.complex("optimality.p", None)
    x0 = cfg.get("optimality.x0", float, None)
    a = cfg.complex("optimality.a", None)
    if p is None and (x0 is None or a is None):
        raise ConfigError("give optimality.p or both optimality.x0 and optimality.a")

    def execute(out: Path, threads: int) -> dict:
        rep = optimality_cross_check(domain, [p] if p is not None else None, n, x0=x0, a=a)
        rows = [[z.real, z.imag, *_cplx_cols(i), *_cplx_cols(c), abs(i - c)]
                for z, i, c in zip(rep.points, rep.integral, rep.closed_form)]
        write_csv(out / "optimality.csv", ["re", "im", "integral_re", "integral_im",
                                           "closed_re", "closed_im", "abs_error"], rows,
                  {"x0": rep.x0, "a": _cplx_cols(rep.a)})
        return {"max_error": rep.max_error, "source_exterior": int(rep.source_exterior),
                "x0": float(rep.x0[0]), "a_re": rep.a.real, "a_im": rep.a.imag}
    return Plan(execute)


def _plan_monodromy(cfg: Config) -> Plan:
    from .verification import monodromy_detect
    x0 = cfg.get("monodromy.x0")
    a = cfg.complex("monodromy.a")
    radii = cfg.floats("monodromy.radii")
    steps = cfg.get("monodromy.steps", int, 128)
    center = cfg.complex("monodromy.center", None)
    if steps < 16 or any(r <= 0 for r in radii):
        raise ConfigError("monodromy.steps >= 16 and positive radii required")

    def execute(out: Path, threads: int) -> dict:
        rows, jumps = [], []
        for r in radii:
            for o in (1, -1):
                m = monodromy_detect(x0, a, 1, r, steps, center=center, orientation=o)
                if o == 1:
                    jumps.append(m.jump)
                rows.append([r, o, m.winding, *_cplx_cols(m.jump), abs(m.jump),
                             *_cplx_cols(m.contour_jump)])
        write_csv(out / "monodromy.csv", ["radius", "orientation", "winding", "jump_re",
                                          "jump_im", "jump_abs", "contour_re", "contour_im"], rows)
        return {"jump_abs": abs(jumps[0]), "expected_abs": float(np.sqrt(np.pi)),
                "radius_spread": float(max(abs(j - jumps[0]) for j in jumps))}
    return Plan(execute)


EXPERIMENTS: dict[str, tuple[Callable[[Config], Plan], str]] = {
    "egg-sample": (_plan_egg_sample, "domain.*, sample.margin, sample.counts"),
    "bie-solve": (_plan_bie_solve, "domain.*, T, grid.nt, [grid.n_boundary], source.x, "
                                   "[source.t0], eval.re, [eval.im], [eval.times]"),
    "forward-solve": (_plan_forward_solve, "domain.*, T, grid.nt, grid.nx, [grid.ntheta], "
                                           "problem.kind (eigenmode|stationary), [problem.mode], "
                                           "[target.*]"),
    "onedim-controls": (_plan_onedim, "L, T, grid.nt, signals.h1, signals.h2, [fourier.*], "
                                      "[check.nx, check.nt]"),
    "wick-synthesize": (_plan_wick, "domain.*, target.*, cutoff.R, cutoff.Rp, T, grid.nt, "
                                    "grid.nx | grid.nr + grid.ntheta, [verify.enabled], "
                                    "[verify.nt], [synthesis.sample_threshold]"),
    "verify-convergence": (_plan_convergence, "domain.*, target.*, cutoff.*, sweep.margin, "
                                              "sweep.ts, [sweep.counts]"),
    "verify-contour": (_plan_contour, "target.*, cutoff.R, cutoff.Rp, cutoff.beta, "
                                      "contour.points, contour.ts, [domain.*]"),
    "verify-optimality": (_plan_optimality, "domain.*, optimality.p | optimality.x0 + "
                                            "optimality.a, [optimality.n_points]"),
    "verify-monodromy": (_plan_monodromy, "monodromy.x0, monodromy.a, monodromy.radii, "
                                          "[monodromy.steps], [monodromy.center]"),
}


# ---------------------------------------------------------------------- runner

def _output_dir(cfg: Config, config_path: Path, override: str | None) -> Path:
    if override:
        return Path(override)
    if cfg.has("output.dir"):
        return Path(cfg.get("output.dir", str))
    root = os.environ.get(OUTPUT_ENV)
    base = Path(root) if root else Path("heatreach-runs")
    return base / config_path.stem


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run(config_path, output: str | None = None, threads: int | None = None,
        expect_kind: str | None = None, stream=None) -> int:
    """Run one experiment; returns the exit status."""
    stream = stream or sys.stderr
    config_path = Path(config_path)
    try:
        raw = tomllib.loads(config_path.read_text())
    except (OSError, tomllib.TOMLDecodeError) as exc:
        print(f"error: cannot read configuration: {exc}", file=stream)
        return EXIT_INVALID
    cfg = Config(raw, str(config_path))
    try:
        kind = cfg.get("experiment.kind", str, expect_kind)
        if kind is None:
            raise ConfigError("missing required key 'experiment.kind'")
        if expect_kind is not None and kind != expect_kind:
            raise ConfigError(f"configuration is for '{kind}', not '{expect_kind}'")
        if kind not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment kind '{kind}'")
        n_threads = threads or cfg.get("run.threads", int, os.cpu_count() or 1)
        if n_threads < 1:
            raise ConfigError("run.threads must be >= 1")
        plan = EXPERIMENTS[kind][0](cfg)
        out_dir = _output_dir(cfg, config_path, output)
    except (ValueError, TypeError) as exc:
        print(f"error: invalid configuration: {exc}", file=stream)
        return EXIT_INVALID

    started = time.time()
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=".heatreach-", dir=out_dir.parent))
    try:
        summary = plan.execute(stage, n_threads)
        _report(stage / "report.csv", summary, {"experiment": kind})
    except NumericalGuardError as exc:
        shutil.rmtree(stage, ignore_errors=True)
        print(f"error: numerical guard: {exc}", file=stream)
        return EXIT_GUARD
    except (ValueError, TypeError) as exc:
        shutil.rmtree(stage, ignore_errors=True)
        print(f"error: precondition failed: {exc}", file=stream)
        return EXIT_INVALID
    except BaseException:
        shutil.rmtree(stage, ignore_errors=True)
        raise

    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = {}
    for f in sorted(stage.iterdir()):
        dest = out_dir / f.name
        os.replace(f, dest)
        outputs[f.name] = _sha256(dest)
    stage.rmdir()
    manifest = {
        "experiment": kind,
        "config": raw,
        "config_path": str(config_path),
        "version": __version__,
        "threads": n_threads,
        "started": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(started)),
        "wall_time_s": time.time() - started,
        "outputs": outputs,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True,
                                                      default=str) + "\n")
    print(f"{kind}: wrote {len(outputs)} files to {out_dir}", file=stream)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="heatreach", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ["run", *EXPERIMENTS]:
        p = sub.add_parser(name, help="run an experiment from a TOML file" if name == "run"
                           else f"run an experiment of kind {name}")
        p.add_argument("config", help="TOML configuration file")
        p.add_argument("--output", help="output directory (default: output.dir, "
                                        f"${OUTPUT_ENV}/<config name> or ./heatreach-runs/<config name>)")
        p.add_argument("--threads", type=int, help="cap on data-parallel width")
    sub.add_parser("kinds", help="list experiment kinds and their configuration keys")
    args = parser.parse_args(argv)
    if args.command == "kinds":
        for name, (_, keys) in EXPERIMENTS.items():
            print(f"{name}: {keys}")
        return EXIT_OK
    expect = None if args.command == "run" else args.command
    return run(args.config, args.output, args.threads, expect)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
