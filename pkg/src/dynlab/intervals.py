"""Interval maps: monotone-branch pullbacks and real BC/LD verification.

Unlike the complex engine, preimages on the line are computed branch by
branch with bisection, so a finite-depth pullback enumeration is complete:
the tree holds one node per monotone lap of f^n meeting the target, and
components are recovered by merging nodes glued at critical points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels
from .conditions import (
    VERDICT_FAIL,
    VERDICT_PASS,
    ConditionReport,
    ProbeResult,
    Witness,
)
from .errors import RootFindingError

ENDPOINT_TOL = 1e-12
COLLAPSE_WIDTH = 1e-13
MERGE_TOL = 1e-9
SIGN_SAMPLES = 1000
DERIV_CHECK_TOL = 1e-6


@dataclass(frozen=True)
class IntervalMap:
    """A piecewise-monotone self-map of a compact interval.

    Analytic families carry polynomial coefficients (ascending) and get
    exact derivatives; user-supplied maps provide vectorized f and Df
    callables, with Df cross-checked against central differences at load
    time.  The C^3 / non-flat hypotheses are accepted as declarations.
    """

    domain: tuple               # (a, b)
    critical: tuple             # ((c, order), ...) sorted, interior only
    coefficients: tuple | None = None
    evaluator: object = field(default=None, repr=False)   # f(x) vectorized
    derivative: object = field(default=None, repr=False)  # Df(x) vectorized
    name: str = "interval-map"

    def __post_init__(self):
        a, b = float(self.domain[0]), float(self.domain[1])
        if not a < b:
            raise ValueError("domain must be a nondegenerate interval")
        object.__setattr__(self, "domain", (a, b))
        crit = tuple(sorted((float(c), int(ell)) for c, ell in self.critical))
        for c, ell in crit:
            if not (a < c < b):
                raise ValueError("critical points must be interior")
            if ell < 2:
                raise ValueError("critical order must be >= 2")
        object.__setattr__(self, "critical", crit)
        if self.coefficients is not None:
            object.__setattr__(self, "coefficients",
                               tuple(float(v) for v in self.coefficients))
        elif self.evaluator is None or self.derivative is None:
            raise ValueError("need coefficients or evaluator+derivative")
        self._validate()

    # ---------------------------------------------------------- evaluation

    @cached_property
    def _carr(self):
        return np.asarray(self.coefficients, dtype=complex)

    def f(self, x):
        if self.coefficients is not None:
            v, _ = _kernels.horner2_many(self._carr, np.asarray(x,
                                                                dtype=complex))
            return v.real
        return np.asarray(self.evaluator(np.asarray(x, dtype=float)))

    def df(self, x):
        if self.coefficients is not None:
            _, d = _kernels.horner2_many(self._carr, np.asarray(x,
                                                                dtype=complex))
            return d.real
        return np.asarray(self.derivative(np.asarray(x, dtype=float)))

    # --------------------------------------------------------- construction

    @classmethod
    def quadratic(cls, c: float) -> "IntervalMap":
        """x^2 + c on the invariant interval [-beta, beta]."""
        if not (-2.0 <= c <= 0.25):
            raise ValueError("need -2 <= c <= 1/4 for an invariant interval")
        beta = (1.0 + math.sqrt(1.0 - 4.0 * c)) / 2.0
        return cls(domain=(-beta, beta), critical=((0.0, 2),),
                   coefficients=(c, 0.0, 1.0), name=f"x^2{c:+g}")

    @classmethod
    def logistic(cls, a: float) -> "IntervalMap":
        """a x (1 - x) on [0, 1]."""
        if not (0.0 < a <= 4.0):
            raise ValueError("need 0 < a <= 4")
        return cls(domain=(0.0, 1.0), critical=((0.5, 2),),
                   coefficients=(0.0, a, -a), name=f"logistic-{a:g}")

    @classmethod
    def cubic(cls, s: float) -> "IntervalMap":
        """(s/2)(x^3 - 3x) on [-2, 2]: two quadratic critical points."""
        if not (0.0 < abs(s) <= 2.0):
            raise ValueError("need 0 < |s| <= 2")
        return cls(domain=(-2.0, 2.0), critical=((-1.0, 2), (1.0, 2)),
                   coefficients=(0.0, -1.5 * s, 0.0, 0.5 * s),
                   name=f"cubic-{s:g}")

    @classmethod
    def from_callables(cls, f, df, domain, critical,
                       name: str = "custom") -> "IntervalMap":
        return cls(domain=tuple(domain),
                   critical=tuple((c, ell) for c, ell in critical),
                   evaluator=f, derivative=df, name=name)

    # ----------------------------------------------------------- invariants

    @cached_property
    def branches(self) -> tuple:
        """Maximal monotonicity cells as (lo, hi, increasing) triples."""
        a, b = self.domain
        cuts = [a] + [c for c, _ in self.critical] + [b]
        out = []
        for lo, hi in zip(cuts, cuts[1:]):
            mid = 0.5 * (lo + hi)
            out.append((lo, hi, bool(self.df(mid) > 0)))
        return tuple(out)

    def _validate(self):
        a, b = self.domain
        if self.coefficients is None:
            # cross-check the declared derivative by central differences
            xs = np.linspace(a, b, 101)[1:-1]
            h = 1e-6 * (b - a)
            approx = (self.f(xs + h) - self.f(xs - h)) / (2 * h)
            scale = 1.0 + np.abs(self.df(xs))
            if np.max(np.abs(approx - self.df(xs)) / scale) > DERIV_CHECK_TOL:
                raise ValueError("declared derivative disagrees with "
                                 "central differences")
        for lo, hi, inc in self.branches:
            xs = np.linspace(lo, hi, SIGN_SAMPLES + 2)[1:-1]
            d = self.df(xs)
            if inc and np.any(d <= 0) or (not inc) and np.any(d >= 0):
                raise ValueError(
                    f"Df changes sign inside the branch [{lo}, {hi}]")
        # extrema of f over the domain sit at endpoints or critical points
        probes = np.array([a, b] + [c for c, _ in self.critical])
        vals = self.f(probes)
        if vals.min() < a - 1e-9 or vals.max() > b + 1e-9:
            raise ValueError("f(domain) is not contained in the domain")


# ------------------------------------------------------------ pullback tree


@dataclass(frozen=True)
class IntervalNode:
    lo: float
    hi: float
    depth: int
    branch: int                 # monotone cell used at the last step; -1=root
    contains_critical: bool     # a critical point touches the closure

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class IntervalPullbackTree:
    root: tuple
    nodes: tuple                # all depths, breadth-first order
    complete: bool
    collapsed: int = 0          # nodes dropped for being < collapse width

    def at_depth(self, n: int) -> list:
        return [v for v in self.nodes if v.depth == n]

    def components(self, n: int) -> list:
        """Depth-n components: nodes merged where they abut (at critical
        preimages)."""
        level = sorted(self.at_depth(n), key=lambda v: v.lo)
        out = []
        for v in level:
            if out and v.lo - out[-1][1] <= MERGE_TOL:
                out[-1] = (out[-1][0], max(out[-1][1], v.hi))
            else:
                out.append((v.lo, v.hi))
        return [tuple(c) for c in out]

    def to_json(self) -> dict:
        return {
            "root": list(self.root),
            "complete": self.complete,
            "collapsed": self.collapsed,
            "nodes": [[v.lo, v.hi, v.depth, v.branch,
                       v.contains_critical] for v in self.nodes],
        }


def _solve_branch(imap: IntervalMap, lo, hi, y, inc):
    """Vectorized solve of f(x) = y on monotone cells [lo, hi]."""
    a = np.array(lo, dtype=float, copy=True)
    b = np.array(hi, dtype=float, copy=True)
    for _ in range(52):
        m = 0.5 * (a + b)
        below = imap.f(m) < y
        go_right = below == inc
        a = np.where(go_right, m, a)
        b = np.where(go_right, b, m)
    x = 0.5 * (a + b)
    for _ in range(2):          # Newton polish inside the bracket
        fx = imap.f(x)
        dfx = imap.df(x)
        step = np.where(np.abs(dfx) > 1e-30, (fx - y) / np.where(
            dfx == 0, 1.0, dfx), 0.0)
        x = np.clip(x - step, a, b)
    if np.max(np.abs(imap.f(x) - y)) > 1e-6 * (1.0 + np.max(np.abs(y))):
        raise RootFindingError("branch preimage solve did not converge",
                               residuals=np.abs(imap.f(x) - y))
    return x


def interval_pullback(imap: IntervalMap, target, depth: int
                      ) -> IntervalPullbackTree:
    """Complete pullback tree of a target interval to the given depth.

    One node per monotone lap of f^n meeting the target; laps that share a
    critical endpoint stay separate nodes (components() merges them).
    """
    a, b = imap.domain
    lo, hi = float(target[0]), float(target[1])
    if not (a - ENDPOINT_TOL <= lo < hi <= b + ENDPOINT_TOL):
        raise ValueError("target must be a nondegenerate subinterval of "
                         "the domain")
    if depth < 0:
        raise ValueError("depth must be >= 0")
    root = IntervalNode(lo=lo, hi=hi, depth=0, branch=-1,
                        contains_critical=_touches_critical(imap, lo, hi))
    nodes = [root]
    level = [root]
    collapsed = 0
    for n in range(1, depth + 1):
        # batch all (cell, parent) preimage solves for this depth
        jobs = []   # (cell index, parent, ylo, yhi, cell lo, hi, inc)
        for ci, (clo, chi, inc) in enumerate(imap.branches):
            vlo, vhi = imap.f(np.array([clo, chi]))
            ilo, ihi = (vlo, vhi) if inc else (vhi, vlo)
            for parent in level:
                ylo = max(parent.lo, ilo)
                yhi = min(parent.hi, ihi)
                if yhi - ylo <= 0:
                    continue
                jobs.append((ci, ylo, yhi, clo, chi, inc,
                             ylo <= ilo, yhi >= ihi))
        if not jobs:
            level = []
            break
        ci_arr = np.array([j[0] for j in jobs])
        ylo = np.array([j[1] for j in jobs])
        yhi = np.array([j[2] for j in jobs])
        clo = np.array([j[3] for j in jobs])
        chi = np.array([j[4] for j in jobs])
        inc = np.array([j[5] for j in jobs])
        lo_clip = np.array([j[6] for j in jobs])
        hi_clip = np.array([j[7] for j in jobs])
        # the preimage of [ylo, yhi] on an increasing cell is
        # [f^-1(ylo), f^-1(yhi)]; on a decreasing cell the order flips
        x1 = _solve_branch(imap, clo, chi, np.where(inc, ylo, yhi), inc)
        x2 = _solve_branch(imap, clo, chi, np.where(inc, yhi, ylo), inc)
        # a target endpoint clipped at the branch-image boundary pulls back
        # to the cell endpoint exactly; solving for it would lose half the
        # digits (f is flat at a critical endpoint), so substitute it
        x1 = np.where(np.where(inc, lo_clip, hi_clip), clo, x1)
        x2 = np.where(np.where(inc, hi_clip, lo_clip), chi, x2)
        new_level = []
        for k in range(len(jobs)):
            wlo, whi = float(x1[k]), float(x2[k])
            if whi - wlo < COLLAPSE_WIDTH:
                collapsed += 1
                continue
            new_level.append(IntervalNode(
                lo=wlo, hi=whi, depth=n, branch=int(ci_arr[k]),
                contains_critical=_touches_critical(imap, wlo, whi)))
        new_level.sort(key=lambda v: v.lo)
        nodes.extend(new_level)
        level = new_level
    return IntervalPullbackTree(root=(lo, hi), nodes=tuple(nodes),
                                complete=True, collapsed=collapsed)


def _touches_critical(imap: IntervalMap, lo: float, hi: float) -> bool:
    return any(lo - MERGE_TOL <= c <= hi + MERGE_TOL
               for c, _ in imap.critical)


def lap_count(imap: IntervalMap, n: int) -> int:
    """Laps (maximal monotone pieces) of f^n, counted from the definition.

    The interior turning points of f^n are the points whose orbit hits a
    critical point within n-1 steps, i.e. the union of f^-k(Crit) for
    0 <= k < n; laps = that count + 1.  Preimage levels are solved branch
    by branch (no grid), so arbitrarily narrow laps are counted correctly.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    a, b = imap.domain
    level = np.array([c for c, _ in imap.critical])
    total = level.size
    for _ in range(n - 1):
        pre = []
        for clo, chi, inc in imap.branches:
            vlo, vhi = imap.f(np.array([clo, chi]))
            ilo, ihi = (vlo, vhi) if inc else (vhi, vlo)
            sel = level[(level >= ilo - ENDPOINT_TOL)
                        & (level <= ihi + ENDPOINT_TOL)]
            if sel.size == 0:
                continue
            shape = np.full(sel.shape, True)
            xs = _solve_branch(imap, np.full(sel.shape, clo),
                               np.full(sel.shape, chi),
                               np.clip(sel, ilo, ihi),
                               shape if inc else ~shape)
            pre.append(xs)
        if not pre:
            level = np.array([])
            break
        pts = np.sort(np.concatenate(pre))
        pts = pts[(pts > a + MERGE_TOL) & (pts < b - MERGE_TOL)]
        if pts.size:
            keep = np.concatenate(([True], np.diff(pts) > MERGE_TOL))
            pts = pts[keep]
        level = pts
        total += level.size
    return total + 1


# ------------------------------------------------------------ real checkers


def check_ld_interval(imap: IntervalMap, K: float, radius: float,
                      N: int, crit: list | None = None) -> ConditionReport:
    """Real large-derivative check along the critical orbits.

    Same contract as the complex check_ld, with Crit'(f) = Crit(f) (the
    interval convention); pass crit to restrict to a subset, e.g. for maps
    with attracting cycles.  The orbit cannot escape an invariant interval.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if K <= 0 or radius <= 0:
        raise ValueError("K and radius must be positive")
    budget = {"iterations": N}
    audited = imap.critical if crit is None else tuple(
        (c, ell) for c, ell in imap.critical if c in set(crit))
    cpts = np.array([c for c, _ in audited])
    witnesses = []
    for c, _ in audited:
        x = float(imap.f(np.array([c]))[0])
        logd = 0.0
        for n in range(1, N + 1):
            # x = f^n(c); after accumulating, logd = log|Df^n(f(c))|
            dd = abs(float(imap.df(np.array([x]))[0]))
            logd += math.log(dd) if dd > 0 else -math.inf
            if np.min(np.abs(cpts - x)) < radius:
                deriv = math.exp(logd)
                if deriv < K:
                    witnesses.append(Witness(critical_point=complex(c),
                                             depth=n, derivative=deriv))
            x = float(imap.f(np.array([x]))[0])
    verdict = VERDICT_FAIL if witnesses else VERDICT_PASS
    return ConditionReport(condition="LD", parameter=float(K),
                           verdict=verdict, witnesses=tuple(witnesses),
                           budget=budget)


def tilde_interval(imap: IntervalMap, c: float, delta: float) -> tuple:
    """Component of f^-1([f(c)-delta, f(c)+delta]) containing c."""
    a, b = imap.domain
    fc = float(imap.f(np.array([c]))[0])
    target = (max(a, fc - delta), min(b, fc + delta))
    tree = interval_pullback(imap, target, 1)
    for lo, hi in tree.components(1):
        if lo - MERGE_TOL <= c <= hi + MERGE_TOL:
            return (lo, hi)
    raise RootFindingError("no pullback component contains the critical "
                           "point", residuals=np.array([]))


def check_bc_interval(imap: IntervalMap, r: float, delta0: float,
                      grid: int, depth: int,
                      crit: list | None = None) -> ConditionReport:
    """Real backward-contraction check with a complete pullback tree.

    For each critical point and dyadic scale delta, the component of
    f^-1(B(f(c), r delta)) around c is pulled back to the given depth; a
    component of width >= delta within delta of a critical value is a
    witness.  The enumeration is complete, so the verdict is definitive
    for the audited depth and scales.
    """
    if r <= 1:
        raise ValueError("r must be > 1")
    if delta0 <= 0 or grid < 1 or depth < 1:
        raise ValueError("bad budget parameters")
    budget = {"delta0": delta0, "grid": grid, "depth": depth}
    audited = imap.critical if crit is None else tuple(
        (c, ell) for c, ell in imap.critical if c in set(crit))
    cvs = imap.f(np.array([c for c, _ in audited]))
    witnesses = []
    for c, _ in audited:
        for k in range(grid):
            delta = delta0 * 2.0 ** (-k)
            base = tilde_interval(imap, c, r * delta)
            tree = interval_pullback(imap, base, depth)
            for n in range(1, depth + 1):
                for lo, hi in tree.components(n):
                    width = hi - lo
                    dist = float(np.min(np.maximum.reduce(
                        [cvs - hi, lo - cvs, np.zeros_like(cvs)])))
                    if width >= delta and dist <= delta:
                        witnesses.append(Witness(
                            critical_point=complex(c), depth=n,
                            diam=width, dist_cv=dist, delta=delta,
                            interval=(lo, hi)))
    verdict = VERDICT_FAIL if witnesses else VERDICT_PASS
    return ConditionReport(condition="BC", parameter=float(r),
                           verdict=verdict, witnesses=tuple(witnesses),
                           budget=budget)


# ------------------------------------------------------- real Schwarz probe


def real_schwarz_probe(imap: IntervalMap, eta: float, trials: int,
                       max_depth: int, seed: int = 0) -> ProbeResult:
    """Sample the ratio |Df^n(x)| |U| / |V| over diffeomorphic branches.

    V is a random subinterval of the critical neighborhood B~(c, eta), U the
    branch of f^-n over V along a random non-critical backward orbit of the
    midpoint, and x the preimage of the midpoint.  The empirical min is a
    lower estimate of the Schwarz constant theta.  Trials whose pullback
    hits a critical point (branch not diffeomorphic) are skipped.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    if trials < 1 or max_depth < 0:
        raise ValueError("bad budget parameters")
    cpts = np.array([c for c, _ in imap.critical])
    ratios = []
    skipped = 0
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        c = float(rng.choice(cpts))
        vlo, vhi = tilde_interval(imap, c, eta)
        # relative geometry drawn first so eta-halving at a paired seed
        # shrinks the configuration instead of resampling it
        center = vlo + rng.uniform(0.2, 0.8) * (vhi - vlo)
        half = rng.uniform(0.05, 0.45) * min(center - vlo, vhi - center)
        s = int(rng.integers(0, max_depth + 1))
        V = (center - half, center + half)
        if s == 0:
            ratios.append(1.0)
            continue
        ok, U, x = _pull_back_branch(imap, V, 0.5 * (V[0] + V[1]), s, rng,
                                     cpts)
        if not ok:
            skipped += 1
            continue
        d = 1.0
        w = x
        for _ in range(s):
            d *= float(imap.df(np.array([w]))[0])
            w = float(imap.f(np.array([w]))[0])
        ratios.append(abs(d) * (U[1] - U[0]) / (V[1] - V[0]))
    return ProbeResult(ratios=tuple(ratios), skipped=skipped, trials=trials)


def _preimages_on_line(imap: IntervalMap, y: float) -> list:
    out = []
    for clo, chi, inc in imap.branches:
        vlo, vhi = imap.f(np.array([clo, chi]))
        ilo, ihi = (vlo, vhi) if inc else (vhi, vlo)
        if ilo - ENDPOINT_TOL <= y <= ihi + ENDPOINT_TOL:
            yc = min(max(y, ilo), ihi)
            x = _solve_branch(imap, np.array([clo]), np.array([chi]),
                              np.array([yc]), np.array([inc]))
            out.append(float(x[0]))
    return out


def _pull_back_branch(imap: IntervalMap, V, y: float, s: int, rng, cpts):
    """Random branch of f^-s over V; fails if any step meets a critical
    point."""
    cur = V
    for _ in range(s):
        pre = _preimages_on_line(imap, y)
        pre = [p for p in pre if np.min(np.abs(cpts - p)) > 1e-6]
        if not pre:
            return False, None, None
        y = float(pre[int(rng.integers(len(pre)))])
        tree = interval_pullback(imap, cur, 1)
        # the diffeomorphic branch over cur is the single lap containing y
        hit = [(v.lo, v.hi) for v in tree.at_depth(1)
               if v.lo - MERGE_TOL <= y <= v.hi + MERGE_TOL]
        if len(hit) != 1:
            return False, None, None
        cur = hit[0]
    return True, cur, y
