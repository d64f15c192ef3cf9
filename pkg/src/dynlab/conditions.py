"""Finite-budget verifiers for backward-contraction and large-derivative
style conditions.

Everything here is a *budgeted* check: the conditions quantify over all
depths/scales, so a passing verdict is always "no-violation-within-budget",
never a proof.  Reports carry their budgets so downstream consumers cannot
mistake one for the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ClassificationError, GeometryError
from .geometry import JordanDisk, contains_disk
from .polynomials import (
    Polynomial,
    classify_critical_points,
    critical_points,
    evaluate_many,
    orbit,
    preimages,
)
from .pullback import (
    DEFAULT_BRANCH_CAP,
    dist_to_points,
    enumerate_pullbacks,
    pull_back_chain,
    tilde_ball,
)

# surrogate stand-ins for the existence constants of the BC<->LD theorems;
# used only to organize consistency experiments, not asserted as true values
DEFAULT_R0_EST = 8.0
DEFAULT_K0_EST = 8.0

CHECK_RESOLUTION = 128   # boundary samples used by the budgeted checkers

VERDICT_PASS = "no-violation-within-budget"
VERDICT_FAIL = "violated"
VERDICT_EXHAUSTED = "budget-exhausted"


def julia_critical_points(poly: Polynomial, budget: int = 10000) -> list:
    """Crit'(f) as (point, order) pairs, conservatively classified.

    A critical point is dropped only when its orbit escapes or demonstrably
    converges to an attracting cycle within the budget.
    """
    cs = classify_critical_points(poly, budget)
    return [(c, ell) for c, ell in cs.all_critical if c in cs.julia_critical]


@dataclass(frozen=True)
class Witness:
    """One violation record.  Fields not meaningful for a given condition
    stay None."""

    critical_point: complex
    depth: int
    diam: float | None = None
    dist_cv: float | None = None
    delta: float | None = None
    derivative: float | None = None
    component: JordanDisk | None = None
    interval: tuple | None = None    # (lo, hi) for the real checkers

    def to_json(self) -> dict:
        out = {
            "critical_point": [self.critical_point.real,
                               self.critical_point.imag],
            "depth": self.depth,
        }
        for key in ("diam", "dist_cv", "delta", "derivative"):
            v = getattr(self, key)
            if v is not None:
                out[key] = v
        if self.interval is not None:
            out["interval"] = [self.interval[0], self.interval[1]]
        if self.component is not None:
            out["component"] = {
                "basepoint": [self.component.basepoint.real,
                              self.component.basepoint.imag],
                "diameter": self.component.diameter,
            }
        return out


@dataclass(frozen=True)
class ConditionReport:
    condition: str        # "BC" | "LD" | "UPB"
    parameter: object     # r, K, or (delta, delta_prime)
    verdict: str
    witnesses: tuple
    budget: dict

    def __post_init__(self):
        if (self.verdict == VERDICT_FAIL) != bool(self.witnesses):
            raise ValueError("verdict 'violated' iff witnesses nonempty")

    @property
    def passed(self) -> bool:
        return self.verdict == VERDICT_PASS

    def to_json(self) -> dict:
        param = self.parameter
        if isinstance(param, tuple):
            param = list(param)
        return {
            "condition": self.condition,
            "parameter": param,
            "verdict": self.verdict,
            "witnesses": [w.to_json() for w in self.witnesses],
            "budget": dict(self.budget),
        }


def check_ld(poly: Polynomial, K: float, neighborhood_radius: float,
             N: int, classification_budget: int = 10000) -> ConditionReport:
    """Large-derivative check: every return of the critical orbit to the
    radius-neighborhood of Crit' must carry |Df^n(f(c))| >= K.

    Vacuously passes when Crit'(f) is empty.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    budget = {"iterations": N,
              "classification_budget": classification_budget}
    crit = julia_critical_points(poly, classification_budget)
    witnesses = []
    if crit:
        cpts = np.array([c for c, _ in crit])
        for c, _ in crit:
            rec = orbit(poly, poly(c), N)
            if rec.escaped_at is not None:
                raise ClassificationError(
                    "critical orbit escaped although the point was "
                    "classified as non-escaping")
            # rec starts at f(c): points[n-1] = f^n(c) and
            # log_derivatives[n] = log|Df^n(f(c))|
            for n in range(1, N + 1):
                if np.abs(rec.points[n - 1] - cpts).min() \
                        >= neighborhood_radius:
                    continue
                deriv = math.exp(rec.log_derivatives[n])
                if deriv < K:
                    witnesses.append(Witness(critical_point=c, depth=n,
                                             derivative=deriv))
    verdict = VERDICT_FAIL if witnesses else VERDICT_PASS
    return ConditionReport(condition="LD", parameter=float(K),
                           verdict=verdict, witnesses=tuple(witnesses),
                           budget=budget)


def check_bc(poly: Polynomial, r: float, delta0: float, delta_grid: int,
             depth: int, branch_cap: int = DEFAULT_BRANCH_CAP,
             resolution: int = CHECK_RESOLUTION,
             classification_budget: int = 10000) -> ConditionReport:
    """Backward-contraction check on a dyadic delta grid.

    For every c in Crit'(f) and delta in {2^-k delta0}, every component W of
    a pullback of the tilde-ball B~(c, r*delta) found within the depth and
    branch budgets is flagged when dist(W, CV(f)) <= delta yet
    diam(W) >= delta.
    """
    if r <= 1:
        raise ValueError("r must be > 1")
    if delta0 <= 0 or delta_grid < 1:
        raise ValueError("delta0 > 0 and delta_grid >= 1 required")
    budget = {"depth": depth, "branch_cap": branch_cap,
              "delta_grid": delta_grid}
    crit = julia_critical_points(poly, classification_budget)
    cvs = [poly(p) for p, _ in critical_points(poly)]
    witnesses = []
    exhausted = False
    for c, _ in crit:
        for k in range(delta_grid):
            delta = delta0 * 2.0 ** (-k)
            target = tilde_ball(poly, c, r * delta, m=resolution)
            res = enumerate_pullbacks(poly, target, depth,
                                      branch_cap=branch_cap,
                                      resolution=resolution)
            if not res.complete:
                exhausted = True
            for ch in res.chains:
                comp = ch.final.component
                d_cv = dist_to_points(comp, cvs)
                if d_cv <= delta and comp.diameter >= delta:
                    witnesses.append(Witness(
                        critical_point=c, depth=ch.depth,
                        diam=comp.diameter, dist_cv=d_cv, delta=delta,
                        component=comp))
    if witnesses:
        verdict = VERDICT_FAIL
    else:
        verdict = VERDICT_EXHAUSTED if exhausted else VERDICT_PASS
    return ConditionReport(condition="BC", parameter=float(r),
                           verdict=verdict, witnesses=tuple(witnesses),
                           budget=budget)


def check_univalent_pullback(poly: Polynomial, delta: float,
                             delta_prime: float, depth: int,
                             branch_cap: int = DEFAULT_BRANCH_CAP,
                             resolution: int = CHECK_RESOLUTION,
                             classification_budget: int = 10000
                             ) -> ConditionReport:
    """(delta, delta')-univalent pullback check.

    Every enumerated chain of B~(c, delta') whose intermediate components
    stay disjoint from every B~(c', delta) must have total degree 1.
    """
    if not (delta_prime > delta > 0):
        raise ValueError("need delta_prime > delta > 0")
    budget = {"depth": depth, "branch_cap": branch_cap}
    crit = julia_critical_points(poly, classification_budget)
    witnesses = []
    exhausted = False
    smalls = [tilde_ball(poly, c, delta, m=resolution) for c, _ in crit]
    small_polys = [s.polygon for s in smalls]
    for c, _ in crit:
        target = tilde_ball(poly, c, delta_prime, m=resolution)
        res = enumerate_pullbacks(poly, target, depth,
                                  branch_cap=branch_cap,
                                  resolution=resolution)
        if not res.complete:
            exhausted = True
        for ch in res.chains:
            if ch.total_degree == 1:
                continue
            clear = all(step.component.polygon.disjoint(sp)
                        for step in ch.steps[:-1] for sp in small_polys)
            if clear:
                comp = ch.final.component
                witnesses.append(Witness(critical_point=c, depth=ch.depth,
                                         diam=comp.diameter, delta=delta,
                                         component=comp))
    if witnesses:
        verdict = VERDICT_FAIL
    else:
        verdict = VERDICT_EXHAUSTED if exhausted else VERDICT_PASS
    return ConditionReport(condition="UPB",
                           parameter=(float(delta), float(delta_prime)),
                           verdict=verdict, witnesses=tuple(witnesses),
                           budget=budget)


@dataclass(frozen=True)
class ScaleStructure:
    """The nested disks V_n^c = B~(c, 2^-n delta0) for each c in Crit'."""

    delta0: float
    levels: int
    critical: tuple            # (c, ell) pairs
    disks: dict = field(repr=False)   # c -> tuple of JordanDisk, n = 0..levels

    def delta(self, n: int) -> float:
        return self.delta0 * 2.0 ** (-n)

    def disk(self, c: complex, n: int) -> JordanDisk:
        return self.disks[c][n]

    def level_of(self, z: complex) -> int:
        """Largest n with z in V_n (any critical point); -1 if outside V_0."""
        for n in range(self.levels, -1, -1):
            if any(self.disks[c][n].contains(z) for c, _ in self.critical):
                return n
        return -1


def build_scale_structure(poly: Polynomial, delta0: float, levels: int,
                          crit: list | None = None,
                          m: int = CHECK_RESOLUTION) -> ScaleStructure:
    if delta0 <= 0 or levels < 0:
        raise ValueError("delta0 > 0 and levels >= 0 required")
    if crit is None:
        crit = julia_critical_points(poly)
    if not crit:
        raise GeometryError("no critical points in the Julia set")
    disks = {}
    for c, _ in crit:
        seq = [tilde_ball(poly, c, delta0 * 2.0 ** (-n), m=m)
               for n in range(levels + 1)]
        for n in range(levels):
            if not contains_disk(seq[n], seq[n + 1]):
                raise GeometryError(
                    f"V_{n + 1} not contained in V_{n} at c = {c}")
        disks[c] = tuple(seq)
    return ScaleStructure(delta0=float(delta0), levels=levels,
                          critical=tuple(crit), disks=disks)


def estimate_kappa0(poly: Polynomial, scale: ScaleStructure,
                    samples: int, seed: int = 0,
                    return_parts: bool = False):
    """Largest kappa0 in (0, 1] compatible with the two sampled
    power-law/derivative inequalities of the scale structure.

    Inequality 1: for x in V_n \\ V_{n+2},
        kappa0 <= diam(V_n) |Df(x)| / diam(f(V_n)) <= 1/kappa0,
    with diam(f(V_n)) = 2 delta_n exactly (f(V_n) is a round ball).  Note
    this part cannot exceed 1/2 even for a pure power map: the ratio runs
    up to ~2 at the outer edge of V_n \\ V_{n+2}.
    Inequality 2: diam B~(c, d') / diam B~(c, d) against (d'/d)^(1/ell_c)
    over dyadic scale pairs.

    With return_parts=True the two per-inequality constants are returned as
    a (derivative_part, power_law_part) pair instead of their min.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    best1 = 1.0
    best2 = 1.0
    for c, ell in scale.critical:
        seq = scale.disks[c]
        # the scale only makes sense if V_0 is clear of other critical points
        for p, _ in scale.critical:
            if p != c and seq[0].contains(p):
                raise GeometryError(
                    "V_0 disks overlap distinct critical points; "
                    "shrink delta0")
        for n in range(max(0, scale.levels - 1)):
            vn, vn2 = seq[n], seq[n + 2]
            if vn.diameter <= 0:
                raise GeometryError("degenerate (zero-diameter) disk")
            pts = _sample_annulus(vn, vn2, samples, rng)
            if len(pts) == 0:
                continue
            _, dfs = evaluate_many(poly, pts)
            ratio = vn.diameter * np.abs(dfs) / (2.0 * scale.delta(n))
            ratio = ratio[ratio > 0]
            if len(ratio):
                best1 = min(best1,
                            float(np.minimum(ratio, 1.0 / ratio).min()))
        for i in range(scale.levels + 1):
            for j in range(i + 1, scale.levels + 1):
                q = (seq[i].diameter / seq[j].diameter) \
                    / (scale.delta(i) / scale.delta(j)) ** (1.0 / ell)
                best2 = min(best2, q, 1.0 / q)
    if return_parts:
        return best1, best2
    return min(best1, best2)


def _sample_annulus(outer: JordanDisk, inner: JordanDisk, n: int,
                    rng: np.random.Generator) -> np.ndarray:
    b = outer.boundary
    lo_x, hi_x = b.real.min(), b.real.max()
    lo_y, hi_y = b.imag.min(), b.imag.max()
    out = []
    for _ in range(50 * n):
        z = complex(rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y))
        if outer.contains(z) and not inner.contains(z):
            out.append(z)
            if len(out) == n:
                break
    return np.array(out)


@dataclass(frozen=True)
class ReturnDecomposition:
    """Greedy deepest-last-return block decomposition of a critical orbit
    segment ending in V_0."""

    S: int
    blocks: tuple              # (n_i, S_i) with n_1 > n_2 > ..., S_m = S
    block_derivatives: tuple   # |Df^{S_1}(f(c))|, then per-gap factors
    total_derivative: float    # |Df^S(f(c))|

    def to_json(self) -> dict:
        return {
            "S": self.S,
            "blocks": [[n, s] for n, s in self.blocks],
            "block_derivatives": list(self.block_derivatives),
            "total_derivative": self.total_derivative,
        }


def return_decomposition(poly: Polynomial, c: complex, S: int,
                         scale: ScaleStructure) -> ReturnDecomposition:
    """Split the orbit segment f(c), ..., f^S(c) at its deepest last returns.

    Inductively: n_i is the deepest scale level visited after the previous
    cut, S_i the last visit time to that level; repeat from S_i until
    S_m = S.  Block derivative factors multiply back to |Df^S(f(c))|.
    """
    if S < 1:
        raise ValueError("S must be >= 1")
    rec = orbit(poly, poly(c), S)
    if rec.escaped_at is not None or len(rec.points) < S:
        raise ClassificationError("orbit escaped before time S")
    # rec.points[j] = f^{j+1}(c); levels are indexed by the orbit time s
    lv = {s: scale.level_of(rec.points[s - 1]) for s in range(1, S + 1)}
    if lv[S] < 0:
        raise ValueError("f^S(c) is not in V_0")
    blocks = []
    lo = 0
    while True:
        n_i = max(lv[s] for s in range(lo + 1, S + 1))
        s_i = max(s for s in range(lo + 1, S + 1) if lv[s] == n_i)
        blocks.append((n_i, s_i))
        if s_i == S:
            break
        lo = s_i
    ld = rec.log_derivatives       # ld[k] = log|Df^k(f(c))|
    derivs = [math.exp(ld[blocks[0][1]])]
    for (_, s_prev), (_, s_next) in zip(blocks, blocks[1:]):
        derivs.append(math.exp(ld[s_next] - ld[s_prev]))
    return ReturnDecomposition(S=S, blocks=tuple(blocks),
                               block_derivatives=tuple(derivs),
                               total_derivative=math.exp(ld[S]))


@dataclass(frozen=True)
class ProbeResult:
    """Empirical distribution of a sampled distortion-type ratio."""

    ratios: tuple
    skipped: int
    trials: int

    @property
    def empirical_max(self) -> float:
        return max(self.ratios) if self.ratios else float("nan")

    @property
    def empirical_min(self) -> float:
        return min(self.ratios) if self.ratios else float("nan")

    def histogram(self, bins: int = 20):
        return np.histogram(np.asarray(self.ratios), bins=bins)

    def to_json(self) -> dict:
        return {"ratios": list(self.ratios), "skipped": self.skipped,
                "trials": self.trials, "max": self.empirical_max,
                "min": self.empirical_min}


def koebe_variation_probe(poly: Polynomial, trials: int, rho: float,
                          max_depth: int, seed: int = 0,
                          degree_cap: int = 16) -> ProbeResult:
    """Sample the distortion ratio |Df^s(f(x))| diam(f(E)) / diam(f(D)).

    Configurations: concentric round disks D inside V with mod(V; D) = rho,
    pulled back along random non-critical backward orbits of length
    s <= max_depth; E is the component of f^-s(D) containing the orbit end
    x.  Trials whose V-pullback exceeds the degree cap, or whose lifts fail,
    are skipped and counted.  Per-trial RNG streams depend only on
    (seed, trial), so runs with different rho are paired.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    crit = [p for p, _ in critical_points(poly)]
    ratios = []
    skipped = 0
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        w0 = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        r_d = 10.0 ** rng.uniform(-2.5, -1.5)
        s = int(rng.integers(1, max_depth + 1)) if max_depth >= 1 else 0
        if s == 0:
            ratios.append(1.0)   # f^0 is the identity: the ratio is exactly 1
            continue
        back = [w0]
        ok = True
        for _ in range(s):
            pre = [z for z in preimages(poly, back[-1])
                   if min(abs(z - p) for p in crit) > 1e-4]
            if not pre:
                ok = False
                break
            back.append(complex(pre[int(rng.integers(len(pre)))]))
        if not ok:
            skipped += 1
            continue
        r_v = r_d * math.exp(2.0 * math.pi * rho)
        try:
            chain_v = pull_back_chain(poly, JordanDisk.circle(w0, r_v, m=128),
                                      back, resolution=128)
            if chain_v.total_degree > degree_cap:
                skipped += 1
                continue
            chain_d = pull_back_chain(poly, JordanDisk.circle(w0, r_d, m=128),
                                      back, resolution=128)
        except Exception:
            skipped += 1
            continue
        x = back[-1]
        _, dfs = _kernels.iterate_eval(poly.coeff_array, poly(x), s)
        if s >= 2:
            diam_fe = chain_d.steps[-2].component.diameter
        else:
            diam_fe = 2.0 * r_d
        fd_bdry, _ = evaluate_many(poly, JordanDisk.circle(w0, r_d, m=128)
                                   .boundary)
        diam_fd = float(np.abs(fd_bdry[:, None] - fd_bdry[None, :]).max())
        ratios.append(abs(dfs) * diam_fe / diam_fd)
    return ProbeResult(ratios=tuple(ratios), skipped=skipped, trials=trials)
