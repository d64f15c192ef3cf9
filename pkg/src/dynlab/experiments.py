"""Experiment orchestration: single runs and parameter-family scans.

A run executes the configured checks against one map and emits a report
bundle (JSON per check, CSV summary, SVG plots).  A scan repeats the checks
along a parameter axis and additionally emits the LD-pass/BC-pass
consistency matrix.  Rows are dispatched to a worker pool; assembly is
single-threaded and ordered, so output bytes do not depend on the worker
count.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .conditions import (
    check_bc,
    check_ld,
    check_univalent_pullback,
    julia_critical_points,
)
from .config import FAMILY_PARAM, ExperimentConfig, build_map
from .errors import ConfigError, DynlabError
from .intervals import (
    IntervalMap,
    check_bc_interval,
    check_ld_interval,
    real_schwarz_probe,
)
from .parallel import pmap
from .polynomials import orbit
from .reports import ensure_dir, make_report, svg_plot, write_csv, write_json

SUMMARY_HEADER = ("check", "parameter", "verdict", "witnesses")
SCAN_HEADER = ("parameter", "ld_margin", "bc_margin", "ld_verdict",
               "bc_verdict", "error")


def _run_check(args):
    kind, params, name, budget, seed = args
    m = build_map(kind, dict(params))
    real = isinstance(m, IntervalMap)
    if name == "ld":
        fn = check_ld_interval if real else check_ld
        return fn(m, budget["K"], budget["radius"], budget["N"]).to_json()
    if name == "bc":
        if real:
            return check_bc_interval(m, budget["r"], budget["delta0"],
                                     budget["grid"],
                                     budget["depth"]).to_json()
        return check_bc(m, budget["r"], budget["delta0"], budget["grid"],
                        budget["depth"]).to_json()
    if name == "upb":
        if real:
            raise ConfigError("check 'upb' needs a complex polynomial map")
        return check_univalent_pullback(m, budget["delta"],
                                        budget["delta_prime"],
                                        budget["depth"]).to_json()
    if name == "probe":
        if not real:
            raise ConfigError("check 'probe' needs an interval map")
        return real_schwarz_probe(m, budget["eta"], budget["trials"],
                                  budget["max_depth"], seed=seed).to_json()
    raise ConfigError(f"unknown check {name!r}")


def run_experiment(config: ExperimentConfig, workers: int = 1) -> dict:
    """Execute every configured check; return {check name: report dict}.

    Violations are data, not errors: the bundle is produced either way.
    Engine failures raise, carrying the originating module's error.
    """
    jobs = [(config.kind, tuple(sorted(config.params.items())), name,
             budget, config.seed) for name, budget in config.checks]
    results = pmap(_run_check, jobs, workers)
    bundle = {}
    for (name, budget), data in zip(config.checks, results):
        bundle[name] = make_report(kind=f"check-{name}", data=data,
                                   config_hash=config.config_hash,
                                   seed=config.seed, budget=budget)
    if config.out_dir:
        _write_bundle(config, bundle)
    return bundle


def _write_bundle(config: ExperimentConfig, bundle: dict) -> None:
    out = ensure_dir(config.out_dir)
    rows = []
    for name, rep in bundle.items():
        write_json(os.path.join(out, f"report-{name}.json"), rep)
        data = rep["data"]
        if name == "probe":
            rows.append((name, "-", "-", len(data["ratios"])))
        else:
            rows.append((name, str(data["parameter"]), data["verdict"],
                         len(data["witnesses"])))
    write_csv(os.path.join(out, "summary.csv"), SUMMARY_HEADER, rows)
    _write_plots(config, bundle, out)


def _write_plots(config: ExperimentConfig, bundle: dict, out: str) -> None:
    m = build_map(config.kind, dict(config.params))
    if "ld" in bundle:
        budget = bundle["ld"]["budget"]
        ns, derivs = _growth_curve(m, min(int(budget["N"]), 200))
        svg_plot(os.path.join(out, "plot-derivative-growth.svg"),
                 curves=[("|Df^n(f(c))|", ns, derivs)],
                 title="derivative growth along the critical orbit",
                 log_y=True)
    for name in ("ld", "bc"):
        if name not in bundle:
            continue
        wits = bundle[name]["data"]["witnesses"]
        if wits:
            xs = [w["depth"] for w in wits]
            ys = [w.get("derivative", w.get("diam", 0.0)) for w in wits]
            svg_plot(os.path.join(out, f"plot-witnesses-{name}.svg"),
                     points=[(f"{name} witnesses", xs, ys)],
                     title=f"{name} violation witnesses (depth vs size)")
    if "probe" in bundle:
        ratios = sorted(bundle["probe"]["data"]["ratios"])
        svg_plot(os.path.join(out, "plot-probe-ratios.svg"),
                 curves=[("sorted ratios", list(range(len(ratios))),
                          ratios)],
                 title="real Schwarz probe ratio distribution")


def _growth_curve(m, N: int):
    """(n, |Df^n(f(c))|) along the first critical orbit, n = 1..N."""
    if isinstance(m, IntervalMap):
        c = m.critical[0][0]
        x = float(m.f(np.array([c]))[0])
        ns, ds, logd = [], [], 0.0
        for n in range(1, N + 1):
            dd = abs(float(m.df(np.array([x]))[0]))
            logd += math.log(dd) if dd > 0 else -math.inf
            ns.append(n)
            ds.append(math.exp(min(logd, 700.0)))
            x = float(m.f(np.array([x]))[0])
        return ns, ds
    crit = julia_critical_points(m)
    if not crit:
        return [1], [1.0]
    rec = orbit(m, m(crit[0][0]), N)
    top = len(rec.points)
    ns = list(range(1, top + 1))
    return ns, [math.exp(min(rec.log_derivatives[n], 700.0)) for n in ns]


# ------------------------------------------------------------------- scanning


@dataclass(frozen=True)
class ScanResult:
    """Per-parameter check reports plus a summary/consistency table."""

    kind: str
    axis: tuple
    rows: tuple                # one dict per axis value
    seed: int
    config_hash: str

    def __post_init__(self):
        if len(self.rows) != len(self.axis):
            raise ValueError("row count must equal parameter count")

    def summary_rows(self) -> list:
        out = []
        for row in self.rows:
            out.append((row["parameter"], row["ld_margin"], row["bc_margin"],
                        row["verdicts"].get("ld", "-"),
                        row["verdicts"].get("bc", "-"),
                        row["error"] or "-"))
        return out

    def consistency_matrix(self) -> list:
        """(parameter, LD passed, BC passed) rows for the implication
        experiments."""
        return [(row["parameter"],
                 row["verdicts"].get("ld") == "no-violation-within-budget",
                 row["verdicts"].get("bc") == "no-violation-within-budget")
                for row in self.rows if row["error"] is None]

    def to_json(self) -> dict:
        return {"kind": self.kind, "axis": list(self.axis),
                "seed": self.seed, "config_hash": self.config_hash,
                "rows": list(self.rows)}


def _ld_margin(m, budget) -> float:
    """min over audited returns of |Df^n(f(c))| / K; inf with no returns."""
    K, radius, N = budget["K"], budget["radius"], int(budget["N"])
    best = math.inf
    if isinstance(m, IntervalMap):
        cpts = np.array([c for c, _ in m.critical])
        for c, _ in m.critical:
            x = float(m.f(np.array([c]))[0])
            logd = 0.0
            for n in range(1, N + 1):
                dd = abs(float(m.df(np.array([x]))[0]))
                logd += math.log(dd) if dd > 0 else -math.inf
                if np.min(np.abs(cpts - x)) < radius:
                    best = min(best, math.exp(min(logd, 700.0)) / K)
                x = float(m.f(np.array([x]))[0])
        return best
    crit = julia_critical_points(m)
    if not crit:
        return math.inf
    cpts = np.array([c for c, _ in crit])
    for c, _ in crit:
        rec = orbit(m, m(c), N)
        for n in range(1, len(rec.points) + 1):
            if np.abs(rec.points[n - 1] - cpts).min() < radius:
                best = min(best,
                           math.exp(min(rec.log_derivatives[n], 700.0)) / K)
    return best


def _scan_row(args):
    kind, value, checks, seed = args
    row = {"parameter": value, "verdicts": {}, "margins": {},
           "ld_margin": math.inf, "bc_margin": math.inf, "error": None}
    try:
        m = build_map(kind, {FAMILY_PARAM[kind]: value})
        for name, budget in checks:
            data = _run_check((kind, ((FAMILY_PARAM[kind], value),), name,
                               budget, seed))
            if name == "probe":
                row["verdicts"][name] = "sampled"
                continue
            row["verdicts"][name] = data["verdict"]
            if name == "ld":
                row["ld_margin"] = _ld_margin(m, budget)
            if name == "bc" and data["witnesses"]:
                row["bc_margin"] = min(w["delta"] / w["diam"]
                                       for w in data["witnesses"])
    except (DynlabError, ValueError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def scan_family(kind: str, axis, checks, seed: int = 0, workers: int = 1,
                out_dir: str | None = None) -> ScanResult:
    """Run the checks at every axis value; failures are recorded per row
    and the scan continues."""
    if kind not in FAMILY_PARAM:
        raise ConfigError(f"scan requires a one-parameter family, "
                          f"not {kind!r}")
    axis = tuple(float(a) for a in axis)
    if not axis:
        raise ConfigError("axis must be nonempty")
    checks = tuple((n, dict(b)) for n, b in checks)
    cfg = ExperimentConfig(kind=kind, params={}, checks=checks, axis=axis,
                           seed=seed)
    rows = pmap(_scan_row, [(kind, a, checks, seed) for a in axis], workers)
    result = ScanResult(kind=kind, axis=axis, rows=tuple(rows), seed=seed,
                        config_hash=cfg.config_hash)
    if out_dir:
        out = ensure_dir(out_dir)
        write_json(os.path.join(out, "scan.json"),
                   make_report("scan", result.to_json(), cfg.config_hash,
                               seed))
        write_csv(os.path.join(out, "scan.csv"), SCAN_HEADER,
                  result.summary_rows())
        write_csv(os.path.join(out, "consistency.csv"),
                  ("parameter", "ld_pass", "bc_pass"),
                  result.consistency_matrix())
    return result
