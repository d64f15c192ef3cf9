"""Command-line interface.

Subcommands mirror the library: orbit, classify, pullback, check-bc,
check-ld, check-upb, kappa0, decompose, ray, puzzle, nice, interval, scan.
Reports go to stdout as deterministic JSON and, with --out, into files.
Exit status: 0 when every requested computation ran (violations are data),
1 on engine errors, 2 on usage/config errors.
"""

from __future__ import annotations

import functools
import os
import sys
from fractions import Fraction

import click

from . import __version__
from .conditions import (
    build_scale_structure,
    check_bc,
    check_ld,
    check_univalent_pullback,
    estimate_kappa0,
    return_decomposition,
)
from .config import load_config
from .errors import ConfigError, DynlabError
from .experiments import run_experiment, scan_family
from .geometry import JordanDisk
from .intervals import (
    IntervalMap,
    check_bc_interval,
    check_ld_interval,
    interval_pullback,
    real_schwarz_probe,
)
from .polynomials import Polynomial, classify_critical_points, orbit
from .pullback import enumerate_pullbacks
from .puzzle import build_puzzle, nice_check, trace_external_ray
from .reports import dumps_json, ensure_dir, make_report, write_json


def _parse_poly(text: str) -> Polynomial:
    try:
        return Polynomial(tuple(complex(tok) for tok in text.split()))
    except ValueError as exc:
        raise click.UsageError(f"bad coefficients: {exc}")


def _parse_complex(text: str) -> complex:
    try:
        return complex(text)
    except ValueError:
        raise click.UsageError(f"bad complex literal {text!r}")


def _parse_angle(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise click.UsageError(f"bad angle {text!r} (expected p/q)")


def _family_map(family: str, parameter: float) -> IntervalMap:
    makers = {"quadratic": IntervalMap.quadratic,
              "logistic": IntervalMap.logistic,
              "cubic": IntervalMap.cubic}
    if family not in makers:
        raise click.UsageError(f"unknown family {family!r}")
    try:
        return makers[family](parameter)
    except ValueError as exc:
        raise click.UsageError(str(exc))


def engine_errors(fn):
    """Engine failures exit 1 with the module's error verbatim."""

    @functools.wraps(fn)
    def wrapped(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            raise click.UsageError(str(exc))
        except DynlabError as exc:
            click.echo(f"{type(exc).__name__}: {exc}", err=True)
            sys.exit(1)
        except ValueError as exc:
            raise click.UsageError(str(exc))

    return wrapped


def _emit(ctx, kind: str, data, budget=None, filename=None) -> None:
    cfg = ctx.obj.get("config")
    rep = make_report(kind=kind, data=data,
                      config_hash=cfg.config_hash if cfg else "",
                      seed=ctx.obj["seed"], budget=budget)
    click.echo(dumps_json(rep))
    out = ctx.obj.get("out")
    if out:
        write_json(os.path.join(ensure_dir(out),
                                filename or f"{kind}.json"), rep)


@click.group()
@click.version_option(__version__)
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="Experiment config file (flat key=value).")
@click.option("--out", type=click.Path(), default=None,
              help="Directory for report files.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed for randomized probes and sampling.")
@click.option("--workers", type=int, default=1, show_default=True,
              help="Worker processes for scans and bundles.")
@click.pass_context
def main(ctx, config_path, out, seed, workers):
    """Numerical laboratory for one-dimensional dynamics."""
    ctx.ensure_object(dict)
    cfg = None
    if config_path is not None:
        try:
            cfg = load_config(config_path)
        except ConfigError as exc:
            raise click.UsageError(str(exc))
    ctx.obj.update(config=cfg, out=out or (cfg.out_dir if cfg else None),
                   seed=seed, workers=workers)


# ------------------------------------------------------------ basic commands


@main.command("orbit")
@click.option("--poly", required=True, help="Ascending coefficients.")
@click.option("--z0", default="0", show_default=True)
@click.option("-n", "--iterations", type=int, default=50, show_default=True)
@click.pass_context
@engine_errors
def orbit_cmd(ctx, poly, z0, iterations):
    """Forward orbit with the derivative cocycle."""
    rec = orbit(_parse_poly(poly), _parse_complex(z0), iterations)
    data = {
        "start": [rec.start.real, rec.start.imag],
        "points": [[z.real, z.imag] for z in rec.points],
        "log_derivatives": list(map(float, rec.log_derivatives)),
        "escaped_at": rec.escaped_at,
        "attracting_period": rec.attracted_to,
    }
    _emit(ctx, "orbit", data)


@main.command("classify")
@click.option("--poly", required=True)
@click.option("--budget", type=int, default=10000, show_default=True)
@click.pass_context
@engine_errors
def classify_cmd(ctx, poly, budget):
    """Critical points: Julia vs Fatou, with critical values."""
    cs = classify_critical_points(_parse_poly(poly), budget)
    data = {
        "critical": [[c.real, c.imag, ell] for c, ell in cs.all_critical],
        "julia": [[c.real, c.imag] for c in cs.julia_critical],
        "critical_values": [[v.real, v.imag] for v in cs.critical_values],
        "budget": cs.budget,
    }
    _emit(ctx, "classify", data)


@main.command("pullback")
@click.option("--poly", required=True)
@click.option("--center", default="0", show_default=True)
@click.option("--radius", type=float, required=True)
@click.option("--depth", type=int, required=True)
@click.pass_context
@engine_errors
def pullback_cmd(ctx, poly, center, radius, depth):
    """Enumerate preimage components of a round disk."""
    p = _parse_poly(poly)
    disk = JordanDisk.circle(_parse_complex(center), radius)
    enum = enumerate_pullbacks(p, disk, depth)
    data = {"complete": enum.complete, "levels": []}
    for n in range(1, depth + 1):
        chains = enum.at_depth(n)
        data["levels"].append({
            "depth": n,
            "count": len(chains),
            "components": [{
                "basepoint": [ch.final.component.basepoint.real,
                              ch.final.component.basepoint.imag],
                "diameter": ch.final.component.diameter,
                "degree": ch.total_degree,
            } for ch in chains],
        })
    _emit(ctx, "pullback", data)


# ----------------------------------------------------------- condition checks


@main.command("check-ld")
@click.option("--poly", required=True)
@click.option("-K", "--threshold", type=float, required=True)
@click.option("--radius", type=float, required=True)
@click.option("-N", "--iterations", type=int, required=True)
@click.pass_context
@engine_errors
def check_ld_cmd(ctx, poly, threshold, radius, iterations):
    """Large-derivative condition LD(K) at a finite budget."""
    rep = check_ld(_parse_poly(poly), threshold, radius, iterations)
    _emit(ctx, "check-ld", rep.to_json())


@main.command("check-bc")
@click.option("--poly", required=True)
@click.option("-r", "--ratio", type=float, required=True)
@click.option("--delta0", type=float, required=True)
@click.option("--grid", type=int, required=True)
@click.option("--depth", type=int, required=True)
@click.pass_context
@engine_errors
def check_bc_cmd(ctx, poly, ratio, delta0, grid, depth):
    """Backward-contraction condition BC(r) at a finite budget."""
    rep = check_bc(_parse_poly(poly), ratio, delta0, grid, depth)
    _emit(ctx, "check-bc", rep.to_json())


@main.command("check-upb")
@click.option("--poly", required=True)
@click.option("--delta", type=float, required=True)
@click.option("--delta-prime", type=float, required=True)
@click.option("--depth", type=int, required=True)
@click.pass_context
@engine_errors
def check_upb_cmd(ctx, poly, delta, delta_prime, depth):
    """(delta, delta')-univalent pullback check."""
    rep = check_univalent_pullback(_parse_poly(poly), delta, delta_prime,
                                   depth)
    _emit(ctx, "check-upb", rep.to_json())


@main.command("kappa0")
@click.option("--poly", required=True)
@click.option("--delta0", type=float, required=True)
@click.option("--levels", type=int, required=True)
@click.option("--samples", type=int, default=200, show_default=True)
@click.pass_context
@engine_errors
def kappa0_cmd(ctx, poly, delta0, levels, samples):
    """Estimate the scale-structure constant kappa0."""
    p = _parse_poly(poly)
    scale = build_scale_structure(p, delta0, levels)
    deriv, power = estimate_kappa0(p, scale, samples,
                                   seed=ctx.obj["seed"], return_parts=True)
    _emit(ctx, "kappa0", {"kappa0": min(deriv, power),
                          "derivative_part": deriv, "power_part": power,
                          "delta0": delta0, "levels": levels,
                          "samples": samples})


@main.command("decompose")
@click.option("--poly", required=True)
@click.option("--critical", default="0", show_default=True)
@click.option("-S", "--time", "time_s", type=int, required=True)
@click.option("--delta0", type=float, required=True)
@click.option("--levels", type=int, required=True)
@click.pass_context
@engine_errors
def decompose_cmd(ctx, poly, critical, time_s, delta0, levels):
    """Deepest-last-return block decomposition of a critical orbit."""
    p = _parse_poly(poly)
    scale = build_scale_structure(p, delta0, levels)
    dec = return_decomposition(p, _parse_complex(critical), time_s, scale)
    _emit(ctx, "decompose", dec.to_json())


# -------------------------------------------------------------- rays, puzzles


@main.command("ray")
@click.option("--poly", required=True)
@click.option("--angle", required=True, help="Rational angle p/q in turns.")
@click.option("--g-min", type=float, default=1e-8, show_default=True)
@click.pass_context
@engine_errors
def ray_cmd(ctx, poly, angle, g_min):
    """Trace one external ray toward its landing point."""
    ray = trace_external_ray(_parse_poly(poly), _parse_angle(angle),
                             G_min=g_min)
    _emit(ctx, "ray", ray.to_json())


@main.command("puzzle")
@click.option("--poly", required=True)
@click.option("--angles", required=True,
              help="Space-separated cut angles p/q.")
@click.option("--epsilon", type=float, default=0.1, show_default=True)
@click.option("--depth", type=int, required=True)
@click.pass_context
@engine_errors
def puzzle_cmd(ctx, poly, angles, epsilon, depth):
    """Build the puzzle partition for explicit cut angles."""
    cut = [_parse_angle(tok) for tok in angles.split()]
    pieces = build_puzzle(_parse_poly(poly), cut, epsilon, depth)
    _emit(ctx, "puzzle", {"count": len(pieces),
                          "pieces": [p.to_json() for p in pieces]})


@main.command("nice")
@click.option("--poly", required=True)
@click.option("--center", default="0", show_default=True)
@click.option("--radius", type=float, required=True)
@click.option("--horizon", type=int, required=True)
@click.option("--boundary-uncertainty", type=float, default=0.0,
              show_default=True)
@click.pass_context
@engine_errors
def nice_cmd(ctx, poly, center, radius, horizon, boundary_uncertainty):
    """Check a round disk for boundary returns within a horizon."""
    rep = nice_check(_parse_poly(poly),
                     JordanDisk.circle(_parse_complex(center), radius),
                     horizon, boundary_uncertainty=boundary_uncertainty)
    data = {"nice": rep.nice, "violation_time": rep.violation_time}
    if rep.violation_point is not None:
        data["violation_point"] = [rep.violation_point.real,
                                   rep.violation_point.imag]
    _emit(ctx, "nice", data)


# ------------------------------------------------------------- interval maps


@main.group("interval")
def interval_group():
    """Real interval-map pullbacks, checks, and the Schwarz probe."""


def family_options(fn):
    fn = click.option("--family", required=True,
                      help="quadratic | logistic | cubic")(fn)
    fn = click.option("--parameter", "-a", type=float, required=True,
                      help="Family parameter (c, a, or s).")(fn)
    return fn


@interval_group.command("check-bc")
@family_options
@click.option("-r", "--ratio", type=float, required=True)
@click.option("--delta0", type=float, required=True)
@click.option("--grid", type=int, default=2, show_default=True)
@click.option("--depth", type=int, required=True)
@click.pass_context
@engine_errors
def interval_bc_cmd(ctx, family, parameter, ratio, delta0, grid, depth):
    """Backward contraction with complete real pullback trees."""
    m = _family_map(family, parameter)
    rep = check_bc_interval(m, ratio, delta0, grid, depth)
    _emit(ctx, "interval-check-bc", rep.to_json())


@interval_group.command("check-ld")
@family_options
@click.option("-K", "--threshold", type=float, required=True)
@click.option("--radius", type=float, required=True)
@click.option("-N", "--iterations", type=int, required=True)
@click.pass_context
@engine_errors
def interval_ld_cmd(ctx, family, parameter, threshold, radius, iterations):
    """Large derivatives along real critical orbits."""
    m = _family_map(family, parameter)
    rep = check_ld_interval(m, threshold, radius, iterations)
    _emit(ctx, "interval-check-ld", rep.to_json())


@interval_group.command("pullback")
@family_options
@click.option("--lo", type=float, required=True)
@click.option("--hi", type=float, required=True)
@click.option("--depth", type=int, required=True)
@click.pass_context
@engine_errors
def interval_pullback_cmd(ctx, family, parameter, lo, hi, depth):
    """Complete monotone-branch pullback tree of [lo, hi]."""
    m = _family_map(family, parameter)
    tree = interval_pullback(m, (lo, hi), depth)
    _emit(ctx, "interval-pullback", tree.to_json())


@interval_group.command("probe")
@family_options
@click.option("--eta", type=float, required=True)
@click.option("--trials", type=int, required=True)
@click.option("--max-depth", type=int, required=True)
@click.pass_context
@engine_errors
def interval_probe_cmd(ctx, family, parameter, eta, trials, max_depth):
    """Sample the real Schwarz ratio over diffeomorphic branches."""
    m = _family_map(family, parameter)
    pr = real_schwarz_probe(m, eta, trials, max_depth, seed=ctx.obj["seed"])
    _emit(ctx, "interval-probe", pr.to_json())


# -------------------------------------------------------------- config-driven


@main.command("run")
@click.pass_context
@engine_errors
def run_cmd(ctx):
    """Run every check in the --config file; emit the report bundle."""
    cfg = ctx.obj.get("config")
    if cfg is None:
        raise click.UsageError("'run' requires --config")
    if ctx.obj.get("out") and not cfg.out_dir:
        cfg = cfg.__class__(**{**cfg.__dict__, "out_dir": ctx.obj["out"]})
    bundle = run_experiment(cfg, workers=ctx.obj["workers"])
    click.echo(dumps_json(bundle))


@main.command("scan")
@click.pass_context
@engine_errors
def scan_cmd(ctx):
    """Scan the family in --config along its axis; emit summary rows."""
    cfg = ctx.obj.get("config")
    if cfg is None:
        raise click.UsageError("'scan' requires --config")
    if cfg.axis is None:
        raise click.UsageError("config has no 'axis' to scan")
    result = scan_family(cfg.kind, cfg.axis, cfg.checks, seed=cfg.seed,
                         workers=ctx.obj["workers"],
                         out_dir=ctx.obj.get("out"))
    click.echo(dumps_json(make_report("scan", result.to_json(),
                                      result.config_hash, result.seed)))
