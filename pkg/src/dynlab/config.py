"""Flat key=value experiment configuration.

Schema (one `key = value` per line, `#` comments, no nesting):

    map          polynomial | quadratic | logistic | cubic
    coefficients ascending complex coefficients, space-separated
                 (polynomial only; complex literals like -2+0j)
    c / a / s    family parameter (quadratic / logistic / cubic)
    axis         space-separated parameter values (scans only)
    checks       any of: ld bc upb probe
    ld.K ld.radius ld.N
    bc.r bc.delta0 bc.grid bc.depth
    upb.delta upb.delta_prime upb.depth        (complex maps only)
    probe.eta probe.trials probe.max_depth     (interval maps only)
    seed         integer, default 0
    out          output directory (optional)

Reproducibility is the point: the parsed config is canonicalized and hashed,
and the hash is embedded in every report it produces.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .errors import ConfigError
from .intervals import IntervalMap
from .polynomials import Polynomial

FAMILY_PARAM = {"quadratic": "c", "logistic": "a", "cubic": "s"}

CHECK_KEYS = {
    "ld": {"K": float, "radius": float, "N": int},
    "bc": {"r": float, "delta0": float, "grid": int, "depth": int},
    "upb": {"delta": float, "delta_prime": float, "depth": int},
    "probe": {"eta": float, "trials": int, "max_depth": int},
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str                  # map family / "polynomial"
    params: dict               # family parameter or coefficients
    checks: tuple              # ((name, {budget...}), ...)
    axis: tuple | None         # scan parameter values, or None
    seed: int = 0
    out_dir: str | None = None

    def canonical(self) -> str:
        lines = [f"map = {self.kind}"]
        for k in sorted(self.params):
            v = self.params[k]
            if isinstance(v, tuple):
                v = " ".join(str(x) for x in v)
            lines.append(f"{k} = {v}")
        if self.checks:
            lines.append("checks = " + " ".join(n for n, _ in self.checks))
        for name, budget in self.checks:
            for k in sorted(budget):
                lines.append(f"{name}.{k} = {budget[k]}")
        if self.axis is not None:
            lines.append("axis = " + " ".join(str(a) for a in self.axis))
        lines.append(f"seed = {self.seed}")
        return "\n".join(lines) + "\n"

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


def _parse_lines(text: str) -> dict:
    pairs = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {ln}: empty key or value")
        if key in pairs:
            raise ConfigError(f"line {ln}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def _convert(key: str, value: str, typ):
    try:
        return typ(value)
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: {exc}") from None


def parse_config(text: str) -> ExperimentConfig:
    pairs = _parse_lines(text)
    kind = pairs.pop("map", None)
    if kind is None:
        raise ConfigError("missing required key 'map'")
    params = {}
    if kind == "polynomial":
        raw = pairs.pop("coefficients", None)
        if raw is None:
            raise ConfigError("polynomial map requires 'coefficients'")
        params["coefficients"] = tuple(
            _convert("coefficients", tok, complex) for tok in raw.split())
    elif kind in FAMILY_PARAM:
        pname = FAMILY_PARAM[kind]
        raw = pairs.pop(pname, None)
        if raw is None and "axis" not in pairs:
            raise ConfigError(f"{kind} map requires {pname!r} (or 'axis')")
        if raw is not None:
            params[pname] = _convert(pname, raw, float)
    else:
        raise ConfigError(f"unknown map kind {kind!r}")

    axis = None
    if "axis" in pairs:
        if kind == "polynomial":
            raise ConfigError("'axis' requires a one-parameter family")
        axis = tuple(_convert("axis", tok, float)
                     for tok in pairs.pop("axis").split())
        if not axis:
            raise ConfigError("'axis' must be nonempty")

    names = pairs.pop("checks", "").split()
    checks = []
    for name in names:
        if name not in CHECK_KEYS:
            raise ConfigError(f"unknown check {name!r}")
        budget = {}
        for k, typ in CHECK_KEYS[name].items():
            raw = pairs.pop(f"{name}.{k}", None)
            if raw is None:
                raise ConfigError(f"check {name!r} requires '{name}.{k}'")
            v = _convert(f"{name}.{k}", raw, typ)
            if isinstance(v, (int, float)) and v <= 0 \
                    and k not in ("max_depth",):
                raise ConfigError(f"'{name}.{k}' must be positive")
            budget[k] = v
        checks.append((name, budget))

    seed = _convert("seed", pairs.pop("seed", "0"), int)
    out_dir = pairs.pop("out", None)
    if pairs:
        raise ConfigError("unknown keys: " + ", ".join(sorted(pairs)))
    return ExperimentConfig(kind=kind, params=params, checks=tuple(checks),
                            axis=axis, seed=seed, out_dir=out_dir)


def load_config(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def build_map(kind: str, params: dict):
    """Instantiate the dynamical system named by a config."""
    if kind == "polynomial":
        return Polynomial(params["coefficients"])
    if kind == "quadratic":
        return IntervalMap.quadratic(params["c"])
    if kind == "logistic":
        return IntervalMap.logistic(params["a"])
    if kind == "cubic":
        return IntervalMap.cubic(params["s"])
    raise ConfigError(f"unknown map kind {kind!r}")
