"""Complex polynomials, orbits, derivative cocycles, and critical points.

Everything here is a pure function over immutable values; the iteration
itself runs in the kernel backend (compiled when available).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import IndifferentCycleError, RootFindingError

DEFAULT_ESCAPE_RADIUS = 1e8
CYCLE_TOL = 1e-9
CYCLE_TRANSIENT = 1000
MULTIPLIER_MARGIN = 1e-6
CLUSTER_EPS = 1e-9


@dataclass(frozen=True)
class Polynomial:
    """Degree-d >= 2 complex polynomial, constant term first."""

    coefficients: tuple

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coefficients)
        if len(coeffs) < 3:
            raise ValueError("degree must be at least 2")
        if coeffs[-1] == 0:
            raise ValueError("leading coefficient must be nonzero")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def coeff_array(self) -> np.ndarray:
        return np.asarray(self.coefficients, dtype=complex)

    def derivative_coefficients(self) -> np.ndarray:
        c = self.coeff_array
        return c[1:] * np.arange(1, len(c))

    def __call__(self, z):
        return _kernels.horner2(self.coeff_array, complex(z))[0]

    def label(self) -> str:
        return "poly[" + ",".join(repr(c) for c in self.coefficients) + "]"


def evaluate(poly: Polynomial, z: complex):
    """Horner-evaluated (f(z), Df(z))."""
    return _kernels.horner2(poly.coeff_array, complex(z))


def evaluate_many(poly: Polynomial, zs):
    return _kernels.horner2_many(poly.coeff_array, zs)


def preimages(poly: Polynomial, w: complex) -> np.ndarray:
    """All solutions of f(z) = w, sorted lexicographically (re, im)."""
    c = poly.coeff_array.copy()
    c[0] -= w
    roots = np.roots(c[::-1])
    order = np.lexsort((roots.imag.round(12), roots.real.round(12)))
    return roots[order]


@dataclass(frozen=True)
class OrbitRecord:
    start: complex
    points: np.ndarray
    log_derivatives: np.ndarray
    escaped_at: int | None = None
    attracted_to: int | None = None  # period of the attracting cycle


def orbit(poly: Polynomial, z: complex, n: int,
          escape_radius: float = DEFAULT_ESCAPE_RADIUS) -> OrbitRecord:
    """Forward orbit with cumulative log|Df^k|, truncated at escape.

    log_derivatives[k] = sum_{j<k} log|Df(points[j])|, so
    |Df^k(z)| = exp(log_derivatives[k]).
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if escape_radius <= 0:
        raise ValueError("escape_radius must be > 0")
    pts, logder, esc = _kernels.orbit_cocycle(poly.coeff_array, complex(z), n,
                                              escape_radius)
    escaped_at = None if esc < 0 else int(esc)
    attracted = None
    if escaped_at is None:
        attracted = _detect_attracting_period(poly, pts)
    return OrbitRecord(start=complex(z), points=pts, log_derivatives=logder,
                       escaped_at=escaped_at, attracted_to=attracted)


def _detect_attracting_period(poly: Polynomial, pts: np.ndarray,
                              window: int = 256) -> int | None:
    """Detect an attracting/superattracting cycle the orbit has settled on.

    A near-return z_k ~ z_{k-p} proposes period p; the proposal is accepted
    only when the multiplier along the final p points is attracting.  Cycles
    with multiplier within MULTIPLIER_MARGIN of the unit circle are refused
    (indifferent dynamics is out of scope).
    """
    n = len(pts)
    for k in range(1, n):
        lo = max(0, k - window)
        d = np.abs(pts[lo:k] - pts[k])
        hits = np.nonzero(d < CYCLE_TOL)[0]
        if len(hits) == 0:
            continue
        p = k - (lo + int(hits[-1]))
        mult = _cycle_multiplier(poly, pts[k - p:k])
        if mult < 1.0 - MULTIPLIER_MARGIN:
            return p
        if mult < 1.0 + MULTIPLIER_MARGIN:
            raise IndifferentCycleError(
                f"cycle of period {p} has multiplier magnitude {mult:.12g}; "
                "refusing to classify")
        return None  # landed on/near a repelling cycle
    return None


def _cycle_multiplier(poly: Polynomial, cycle_pts: np.ndarray) -> float:
    _, dfs = evaluate_many(poly, cycle_pts)
    return float(np.prod(np.abs(dfs)))


def aberth_roots(coeffs, tol: float = 1e-12, maxit: int = 200,
                 restarts: int = 4, seed: int = 0) -> np.ndarray:
    """All roots of a polynomial by Aberth-Ehrlich simultaneous iteration.

    coeffs is ascending (constant term first).  Random-perturbation restarts
    are drawn from a fixed-seed generator so results are reproducible.
    """
    c = np.asarray(coeffs, dtype=complex)
    c = np.trim_zeros(c, "b")
    n = len(c) - 1
    if n < 1:
        return np.array([], dtype=complex)
    cn = c / c[-1]
    radius = 1.0 + float(np.max(np.abs(cn[:-1])))
    rng = np.random.default_rng(seed)
    scale = float(np.max(np.abs(c))) or 1.0

    for attempt in range(restarts):
        ang = 2 * np.pi * (np.arange(n) + 0.25) / n + 0.3 * attempt
        z = radius * np.exp(1j * ang)
        if attempt:
            z = z * (1 + 0.05 * rng.standard_normal(n)) \
                + 0.05 * radius * (rng.standard_normal(n)
                                   + 1j * rng.standard_normal(n))
        for _ in range(maxit):
            p, dp = _kernels.horner2_many(c, z)
            if np.max(np.abs(p)) < tol * scale * np.maximum(
                    1.0, np.max(np.abs(z)) ** n):
                return _sorted_roots(z)
            with np.errstate(divide="ignore", invalid="ignore"):
                w = p / dp
                diff = z[:, None] - z[None, :]
                np.fill_diagonal(diff, np.inf)
                s = np.sum(1.0 / diff, axis=1)
                step = w / (1.0 - w * s)
            step = np.where(np.isfinite(step), step, 0.1 * radius)
            z = z - step
        p, _ = _kernels.horner2_many(c, z)
        if np.max(np.abs(p)) < 1e-8 * scale:
            return _sorted_roots(z)
    p, _ = _kernels.horner2_many(c, z)
    raise RootFindingError("Aberth iteration did not converge",
                           residuals=np.abs(p))


def _sorted_roots(z: np.ndarray) -> np.ndarray:
    order = np.lexsort((z.imag.round(10), z.real.round(10)))
    return z[order]


@dataclass(frozen=True)
class CriticalSet:
    all_critical: tuple      # of (point: complex, order: int >= 2)
    julia_critical: tuple    # subset of the points deemed in the Julia set
    critical_values: tuple   # f(c) for each entry of all_critical
    budget: int = 0

    def julia_points(self):
        return [c for c, _ in self.all_critical if c in self.julia_critical]

    def order_of(self, c: complex) -> int:
        for p, ell in self.all_critical:
            if p == c:
                return ell
        raise KeyError(c)


def critical_points(poly: Polynomial) -> list:
    """(point, order) pairs from the roots of Df, clustered by proximity.

    A root of Df of multiplicity m is resolved by the solver only to about
    eps^(1/m), so the merge radius is scaled by the worst case for the given
    degree: scale * CLUSTER_EPS^(1/(d-1)).  The flip side is that genuinely
    distinct critical points closer than that radius are reported as one
    degenerate point.
    """
    dcoeffs = poly.derivative_coefficients()
    roots = aberth_roots(dcoeffs)
    scale = 1.0 + float(np.max(np.abs(roots)))
    radius = scale * CLUSTER_EPS ** (1.0 / max(2, len(roots)))
    clusters: list[list[complex]] = [[r] for r in roots]
    merged = True
    while merged:   # single linkage
        merged = False
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                if min(abs(a - b) for a in clusters[i]
                       for b in clusters[j]) < radius:
                    clusters[i] += clusters[j]
                    del clusters[j]
                    merged = True
                    break
            if merged:
                break
    out = []
    for cl in clusters:
        m = len(cl)
        center = complex(np.mean(cl))
        # D^m f has a simple root at an order-(m+1) critical point: polish there
        coeffs = np.asarray(dcoeffs, dtype=complex)
        for _ in range(m - 1):
            coeffs = coeffs[1:] * np.arange(1, len(coeffs))
        center = _polish_root(coeffs, center, steps=5)
        out.append((center, m + 1))
    out.sort(key=lambda t: (round(t[0].real, 10), round(t[0].imag, 10)))
    return out


def _polish_root(coeffs, z, steps: int = 3):
    for _ in range(steps):
        p, dp = _kernels.horner2(np.asarray(coeffs, dtype=complex), z)
        if dp == 0:
            break
        z = z - p / dp
    return z


def classify_critical_points(poly: Polynomial, budget: int = 10000,
                             escape_radius: float = DEFAULT_ESCAPE_RADIUS
                             ) -> CriticalSet:
    """Split Crit(f) into Julia vs Fatou critical points, conservatively.

    A critical point is excluded from the Julia side only when its orbit
    escapes or demonstrably converges to an attracting cycle within the
    budget; otherwise it is kept.  The verdict is finite-budget and the
    budget used is recorded on the result.
    """
    crit = critical_points(poly)
    julia = []
    values = []
    for c, _ in crit:
        values.append(poly(c))
        rec = orbit(poly, c, budget, escape_radius)
        if rec.escaped_at is None and rec.attracted_to is None:
            julia.append(c)
    return CriticalSet(all_critical=tuple(crit), julia_critical=tuple(julia),
                       critical_values=tuple(values), budget=budget)
